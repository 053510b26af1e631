/**
 * Ranking board state machine.
 *
 * Cards start in a tray (in the task's randomized presentation order) and
 * are placed into ordered columns; cards sharing a column are tied, and the
 * leftmost column is best.  Submission is possible only when every card is
 * placed and every card's images loaded.  The machine is a set of pure
 * functions over BoardState so the DOM layer stays a thin projection.
 */

import { AnnotationTask, RankingRecordBody } from './types'

export type BoardStatus = 'editing' | 'submitting' | 'submitted'

export interface BoardState {
  task: AnnotationTask
  /** Ordered tie groups, best first; the DOM renders one column per group. */
  columns: string[][]
  /** Cards not yet placed, shown in presentation order. */
  tray: string[]
  /** Assets whose thumbnails failed to load; they block submission. */
  failedImages: string[]
  status: BoardStatus
  /** Inline error from the last refused submission, if any. */
  error: string | null
}

export function createBoard(task: AnnotationTask): BoardState {
  return {
    task,
    columns: [],
    tray: [...task.presentation_order],
    failedImages: [],
    status: 'editing',
    error: null,
  }
}

function withoutCard(state: BoardState, assetId: string): BoardState {
  return {
    ...state,
    tray: state.tray.filter((a) => a !== assetId),
    columns: state.columns
      .map((col) => col.filter((a) => a !== assetId))
      .filter((col) => col.length > 0),
  }
}

function assertKnown(state: BoardState, assetId: string): void {
  if (!state.task.asset_ids.includes(assetId)) {
    throw new Error(`unknown asset ${assetId}`)
  }
}

/** Index correction after the card leaves its previous spot: removing a
 * singleton column ahead of the target shifts later columns left by one. */
function shiftAfterRemoval(state: BoardState, assetId: string, index: number): number {
  const oldIdx = state.columns.findIndex((col) => col.includes(assetId))
  if (oldIdx !== -1 && state.columns[oldIdx]!.length === 1 && oldIdx < index) {
    return index - 1
  }
  return index
}

/** Place a card into the column at `columnIndex` (indices read against the
 * current layout), making it tied with that column's cards.  Any previous
 * placement is dissolved first. */
export function placeInColumn(state: BoardState, assetId: string, columnIndex: number): BoardState {
  assertKnown(state, assetId)
  if (columnIndex < 0 || columnIndex >= state.columns.length) {
    throw new Error(`no column ${columnIndex}`)
  }
  if (state.columns[columnIndex]!.includes(assetId)) {
    return state // already a member of that tie group
  }
  const at = shiftAfterRemoval(state, assetId, columnIndex)
  const cleared = withoutCard(state, assetId)
  const columns = cleared.columns.map((col, i) =>
    i === at ? [...col, assetId] : col,
  )
  return { ...cleared, columns, error: null }
}

/** Place a card as a new singleton column inserted at `position`
 * (0 = best; read against the current layout, clamped). */
export function placeAsNewColumn(state: BoardState, assetId: string, position: number): BoardState {
  assertKnown(state, assetId)
  const at = shiftAfterRemoval(state, assetId,
    Math.max(0, Math.min(position, state.columns.length)))
  const cleared = withoutCard(state, assetId)
  const columns = [...cleared.columns]
  columns.splice(Math.min(at, columns.length), 0, [assetId])
  return { ...cleared, columns, error: null }
}

/** Return a card to the tray (keyboard "remove"). */
export function returnToTray(state: BoardState, assetId: string): BoardState {
  assertKnown(state, assetId)
  const cleared = withoutCard(state, assetId)
  if (cleared.tray.includes(assetId)) return cleared
  const order = state.task.presentation_order
  const tray = [...cleared.tray, assetId].sort(
    (a, b) => order.indexOf(a) - order.indexOf(b),
  )
  return { ...cleared, tray }
}

export function markImageFailed(state: BoardState, assetId: string): BoardState {
  if (state.failedImages.includes(assetId)) return state
  return { ...state, failedImages: [...state.failedImages, assetId] }
}

export function allPlaced(state: BoardState): boolean {
  const placed = state.columns.flat()
  return (
    state.tray.length === 0 &&
    placed.length === state.task.asset_ids.length &&
    new Set(placed).size === placed.length
  )
}

/** Submit is enabled only with every card placed, no failed images, and no
 * submission in flight or already accepted (the optimistic lock). */
export function canSubmit(state: BoardState): boolean {
  return state.status === 'editing' && allPlaced(state) && state.failedImages.length === 0
}

/** The record mirroring the columns left to right.  Valid by construction:
 * every asset appears in exactly one group. */
export function toRankingBody(state: BoardState, annotatorId: string): RankingRecordBody {
  if (!allPlaced(state)) {
    throw new Error('cannot build a ranking while cards are unplaced')
  }
  return {
    annotator_id: annotatorId,
    asset_list_id: state.task.asset_list_id,
    ranking: state.columns.map((col) => [...col].sort()),
  }
}

/** Lock the board while the POST is in flight. */
export function beginSubmit(state: BoardState): BoardState {
  if (!canSubmit(state)) throw new Error('submission not allowed')
  return { ...state, status: 'submitting', error: null }
}

export function submitSucceeded(state: BoardState): BoardState {
  return { ...state, status: 'submitted', error: null }
}

/** A service refusal re-opens the board and surfaces the message inline. */
export function submitRefused(state: BoardState, message: string): BoardState {
  return { ...state, status: 'editing', error: message }
}
