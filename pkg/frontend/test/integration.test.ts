/**
 * Annotation round trip against a live service (spawned from the Python
 * package): build the [A > {B,C} > D] board, submit through the UI code
 * paths, verify the export mirrors the board, and check that the duplicate
 * guard and the 2-list cap hold.  Skipped when python3/uvicorn are absent.
 */

import { spawn, spawnSync, type ChildProcess } from 'node:child_process'
import { mkdtempSync, rmSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'
import { afterAll, beforeAll, describe, expect, it } from 'vitest'

import { AnnotationApi } from '../src/api'
import {
  beginSubmit,
  canSubmit,
  createBoard,
  placeAsNewColumn,
  placeInColumn,
  submitSucceeded,
  toRankingBody,
} from '../src/board'
import { ServiceError } from '../src/types'

const PORT = 8600 + (process.pid % 1000)
const BASE = `http://127.0.0.1:${PORT}`

function pythonAvailable(): boolean {
  const probe = spawnSync('python3', ['-c', 'import mvpref, uvicorn'], {
    cwd: join(__dirname, '..', '..'),
  })
  return probe.status === 0
}

const hasService = pythonAvailable()
const suite = hasService ? describe : describe.skip

suite('annotation round trip against a live service', () => {
  let server: ChildProcess
  let dataDir: string

  beforeAll(async () => {
    dataDir = mkdtempSync(join(tmpdir(), 'mvpref-ui-'))
    server = spawn('python3', [join(__dirname, 'fixture_server.py'),
                               String(PORT), dataDir],
                   { cwd: join(__dirname, '..', '..'), stdio: 'inherit' })
    const deadline = Date.now() + 30_000
    for (;;) {
      try {
        const resp = await fetch(`${BASE}/tasks/next?annotator=u1`)
        if (resp.ok) break
      } catch {
        // not up yet
      }
      if (Date.now() > deadline) throw new Error('fixture service never came up')
      await new Promise((r) => setTimeout(r, 250))
    }
  }, 40_000)

  afterAll(() => {
    server?.kill()
    if (dataDir) rmSync(dataDir, { recursive: true, force: true })
  })

  it('submits [A > {B,C} > D], refuses duplicates, and caps at two lists', async () => {
    const api = new AnnotationApi(BASE)

    // task 1: build the board and submit through the UI state machine
    const task1 = await api.nextTask('u1')
    expect(task1).not.toBeNull()
    const [a, b, c, d] = task1!.asset_ids
    let board = createBoard(task1!)
    board = placeAsNewColumn(board, a!, 0)
    board = placeAsNewColumn(board, b!, 1)
    board = placeInColumn(board, c!, 1)
    board = placeAsNewColumn(board, d!, 2)
    expect(canSubmit(board)).toBe(true)

    board = beginSubmit(board)
    const body = toRankingBody(board, 'u1')
    const ack = await api.submitRanking(body)
    expect(ack).toEqual({ status: 'accepted', completed_lists: 1 })
    board = submitSucceeded(board)

    // the exported record equals the board structure
    const exported = await api.exportRankings()
    expect(exported).toContainEqual({
      annotator_id: 'u1',
      asset_list_id: task1!.asset_list_id,
      ranking: [[a], [b, c].sort(), [d]],
    })

    // the optimistic lock blocks a second post from the UI...
    expect(canSubmit(board)).toBe(false)
    expect(() => beginSubmit(board)).toThrow()
    // ...and the service refuses a forced duplicate
    const refusal = await api.submitRanking(body).then(() => null, (e: unknown) => e)
    expect(refusal).toBeInstanceOf(ServiceError)
    expect((refusal as ServiceError).status).toBe(409)
    expect((refusal as ServiceError).code).toBe('duplicate_submission')

    // task 2 fills the cap
    const task2 = await api.nextTask('u1')
    expect(task2).not.toBeNull()
    expect(task2!.asset_list_id).not.toBe(task1!.asset_list_id)
    let board2 = createBoard(task2!)
    task2!.asset_ids.forEach((id, i) => {
      board2 = placeAsNewColumn(board2, id, i)
    })
    board2 = beginSubmit(board2)
    const ack2 = await api.submitRanking(toRankingBody(board2, 'u1'))
    expect(ack2.completed_lists).toBe(2)

    // the 2-list test cap blocks a third task even though one list remains
    const task3 = await api.nextTask('u1')
    expect(task3).toBeNull()
  }, 30_000)

  it('serves view thumbnails as PNG', async () => {
    const api = new AnnotationApi(BASE)
    const resp = await fetch(api.viewUrl('p0_a0', 0))
    expect(resp.status).toBe(200)
    expect(resp.headers.get('content-type')).toBe('image/png')
    const bytes = new Uint8Array(await resp.arrayBuffer())
    expect([...bytes.slice(0, 4)]).toEqual([0x89, 0x50, 0x4e, 0x47])
  })
})
