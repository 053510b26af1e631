/**
 * DOM layer: projects BoardState into the page and routes user gestures
 * (drag-and-drop with a keyboard fallback) through the board state machine.
 * The whole board re-renders on every state change; with 4-5 cards that is
 * simpler and cheaper than incremental updates.
 */

import { AnnotationApi } from './api'
import {
  BoardState,
  beginSubmit,
  canSubmit,
  createBoard,
  markImageFailed,
  placeAsNewColumn,
  placeInColumn,
  returnToTray,
  submitRefused,
  submitSucceeded,
  toRankingBody,
} from './board'
import { GUIDELINE_ITEMS, GUIDELINE_TITLE } from './guidelines'
import { ServiceError } from './types'

export interface AppConfig {
  baseUrl: string
  annotatorId: string
  /** Thumbnails per card: view count x domain count (12 = 6 x [rgb+normal]). */
  viewsPerAsset: number
}

export class AnnotationApp {
  private state: BoardState | null = null
  private message = ''

  constructor(
    private readonly root: HTMLElement,
    private readonly api: AnnotationApi,
    private readonly cfg: AppConfig,
  ) {}

  async start(): Promise<void> {
    const task = await this.api.nextTask(this.cfg.annotatorId)
    if (task === null) {
      this.state = null
      this.message = 'No more tasks: the cap is reached or every list is ranked.'
    } else {
      this.state = createBoard(task)
      this.message = ''
    }
    this.render()
  }

  private update(next: BoardState): void {
    this.state = next
    this.render()
  }

  private async submit(): Promise<void> {
    if (!this.state || !canSubmit(this.state)) return
    const locked = beginSubmit(this.state)
    this.update(locked)
    const body = toRankingBody(locked, this.cfg.annotatorId)
    try {
      await this.api.submitRanking(body)
      this.update(submitSucceeded(locked))
    } catch (err) {
      const msg = err instanceof ServiceError ? `${err.code}: ${err.message}` : String(err)
      this.update(submitRefused(locked, msg))
    }
  }

  // -- rendering -------------------------------------------------------------

  private render(): void {
    this.root.textContent = ''
    this.root.appendChild(this.guidelinePanel())
    if (!this.state) {
      const done = el('div', 'board-message')
      done.textContent = this.message
      this.root.appendChild(done)
      return
    }
    const state = this.state

    if (state.error) {
      const err = el('div', 'board-error')
      err.setAttribute('role', 'alert')
      err.textContent = `Submission refused: ${state.error}`
      this.root.appendChild(err)
    }
    if (state.failedImages.length > 0) {
      const warn = el('div', 'board-error')
      warn.textContent =
        `Images failed to load for: ${state.failedImages.join(', ')}. ` +
        'Submission is blocked; reload to retry.'
      this.root.appendChild(warn)
    }

    this.root.appendChild(this.trayPanel(state))
    this.root.appendChild(this.columnsPanel(state))
    this.root.appendChild(this.submitPanel(state))
  }

  private guidelinePanel(): HTMLElement {
    const panel = el('aside', 'guidelines')
    const h = el('h2')
    h.textContent = GUIDELINE_TITLE
    panel.appendChild(h)
    const list = el('ul')
    for (const item of GUIDELINE_ITEMS) {
      const li = el('li')
      li.textContent = item
      list.appendChild(li)
    }
    panel.appendChild(list)
    return panel
  }

  private trayPanel(state: BoardState): HTMLElement {
    const tray = el('section', 'tray')
    tray.dataset.dropzone = 'tray'
    const h = el('h2')
    h.textContent = state.tray.length
      ? `Unplaced assets (${state.tray.length})`
      : 'All assets placed'
    tray.appendChild(h)
    for (const assetId of state.tray) {
      tray.appendChild(this.card(state, assetId, 'tray'))
    }
    this.acceptDrops(tray, (assetId) =>
      this.update(returnToTray(state, assetId)))
    return tray
  }

  private columnsPanel(state: BoardState): HTMLElement {
    const panel = el('section', 'columns')
    panel.appendChild(this.newColumnGap(state, 0))
    state.columns.forEach((column, i) => {
      const col = el('div', 'column')
      col.dataset.column = String(i)
      const h = el('h3')
      h.textContent = `Rank ${i + 1}${column.length > 1 ? ' (tie)' : ''}`
      col.appendChild(h)
      for (const assetId of column) {
        col.appendChild(this.card(state, assetId, i))
      }
      this.acceptDrops(col, (assetId) =>
        this.update(placeInColumn(state, assetId, i)))
      panel.appendChild(col)
      panel.appendChild(this.newColumnGap(state, i + 1))
    })
    return panel
  }

  private newColumnGap(state: BoardState, position: number): HTMLElement {
    const gap = el('div', 'column-gap')
    gap.title = 'Drop here for a new rank'
    this.acceptDrops(gap, (assetId) =>
      this.update(placeAsNewColumn(state, assetId, position)))
    return gap
  }

  private submitPanel(state: BoardState): HTMLElement {
    const panel = el('section', 'submit-panel')
    if (state.status === 'submitted') {
      const ok = el('div', 'board-message')
      ok.textContent = 'Ranking stored. Thank you.'
      panel.appendChild(ok)
      const next = el('button') as HTMLButtonElement
      next.textContent = 'Next task'
      next.addEventListener('click', () => void this.start())
      panel.appendChild(next)
      return panel
    }
    const button = el('button') as HTMLButtonElement
    button.textContent = state.status === 'submitting' ? 'Submitting...' : 'Submit ranking'
    button.disabled = !canSubmit(state)
    button.addEventListener('click', () => void this.submit())
    panel.appendChild(button)
    return panel
  }

  private card(state: BoardState, assetId: string, where: 'tray' | number): HTMLElement {
    const card = el('article', 'card')
    card.tabIndex = 0
    card.dataset.asset = assetId
    card.draggable = state.status === 'editing'
    card.addEventListener('dragstart', (ev) => {
      ev.dataTransfer?.setData('text/plain', assetId)
    })
    card.addEventListener('keydown', (ev) => this.cardKey(ev, state, assetId, where))

    const title = el('h4')
    title.textContent = assetId
    card.appendChild(title)

    const strip = el('div', 'strip')
    for (let k = 0; k < this.cfg.viewsPerAsset; k++) {
      strip.appendChild(this.thumbnail(state, assetId, k))
    }
    card.appendChild(strip)
    return card
  }

  private thumbnail(state: BoardState, assetId: string, k: number): HTMLElement {
    if (state.failedImages.includes(assetId)) {
      const ph = el('div', 'thumb placeholder')
      ph.textContent = '!'
      ph.title = 'image unavailable'
      return ph
    }
    const img = el('img', 'thumb') as HTMLImageElement
    img.src = this.api.viewUrl(assetId, k)
    img.alt = `${assetId} view ${k}`
    img.loading = 'lazy'
    img.addEventListener('error', () => {
      if (this.state) this.update(markImageFailed(this.state, assetId))
    })
    img.addEventListener('click', () => this.zoom(img.src, img.alt))
    return img
  }

  private zoom(src: string, alt: string): void {
    const overlay = el('div', 'zoom-overlay')
    const big = el('img', 'zoom-image') as HTMLImageElement
    big.src = src
    big.alt = alt
    overlay.appendChild(big)
    overlay.addEventListener('click', () => overlay.remove())
    this.root.appendChild(overlay)
  }

  private cardKey(ev: KeyboardEvent, state: BoardState, assetId: string,
                  where: 'tray' | number): void {
    if (state.status !== 'editing') return
    if (ev.key === 'Backspace' || ev.key === 'Delete') {
      ev.preventDefault()
      this.update(returnToTray(state, assetId))
    } else if (ev.key === 'n' || ev.key === 'N') {
      ev.preventDefault()
      const at = where === 'tray' ? state.columns.length : where + 1
      this.update(placeAsNewColumn(state, assetId, at))
    } else if (ev.key === 'ArrowLeft' && typeof where === 'number' && where > 0) {
      ev.preventDefault()
      this.update(placeInColumn(state, assetId, where - 1))
    } else if (ev.key === 'ArrowRight') {
      ev.preventDefault()
      if (where === 'tray' && state.columns.length > 0) {
        this.update(placeInColumn(state, assetId, 0))
      } else if (typeof where === 'number' && where < state.columns.length - 1) {
        this.update(placeInColumn(state, assetId, where + 1))
      }
    } else if (ev.key === 'Enter' && where === 'tray') {
      ev.preventDefault()
      this.update(placeAsNewColumn(state, assetId, state.columns.length))
    }
  }

  private acceptDrops(zone: HTMLElement, handler: (assetId: string) => void): void {
    zone.addEventListener('dragover', (ev) => ev.preventDefault())
    zone.addEventListener('drop', (ev) => {
      ev.preventDefault()
      ev.stopPropagation()
      const assetId = ev.dataTransfer?.getData('text/plain')
      if (assetId && this.state?.status === 'editing') handler(assetId)
    })
  }
}

function el(tag: string, className?: string): HTMLElement {
  const node = document.createElement(tag)
  if (className) node.className = className
  return node
}

export function mount(root: HTMLElement, cfg: Partial<AppConfig> = {}): AnnotationApp {
  const params = new URLSearchParams(window.location.search)
  const full: AppConfig = {
    baseUrl: cfg.baseUrl ?? params.get('service') ?? 'http://127.0.0.1:8600',
    annotatorId: cfg.annotatorId ?? params.get('annotator') ?? 'anon',
    viewsPerAsset: cfg.viewsPerAsset ?? Number(params.get('views') ?? 12),
  }
  const app = new AnnotationApp(root, new AnnotationApi(full.baseUrl), full)
  void app.start()
  return app
}
