import { describe, expect, it } from 'vitest'

import { AnnotationApi, FetchLike } from '../src/api'
import { ServiceError } from '../src/types'

function fakeFetch(handler: (url: string, init?: RequestInit) => { status: number; body: string }): FetchLike {
  return async (url, init) => {
    const { status, body } = handler(url, init)
    return new Response(body, {
      status,
      headers: { 'content-type': 'application/json' },
    })
  }
}

describe('annotation api client', () => {
  it('fetches the next task', async () => {
    const api = new AnnotationApi('http://svc', fakeFetch((url) => {
      expect(url).toBe('http://svc/tasks/next?annotator=u1')
      return {
        status: 200,
        body: JSON.stringify({
          task: { asset_list_id: 'L1', asset_ids: ['A'], presentation_order: ['A'] },
        }),
      }
    }))
    const task = await api.nextTask('u1')
    expect(task?.asset_list_id).toBe('L1')
  })

  it('returns null when no task remains', async () => {
    const api = new AnnotationApi('http://svc', fakeFetch(() => ({
      status: 200,
      body: JSON.stringify({ task: null }),
    })))
    expect(await api.nextTask('u1')).toBeNull()
  })

  it('raises typed errors from structured bodies', async () => {
    const api = new AnnotationApi('http://svc', fakeFetch(() => ({
      status: 409,
      body: JSON.stringify({ code: 'duplicate_submission', message: 'already ranked' }),
    })))
    const err = await api
      .submitRanking({ annotator_id: 'u1', asset_list_id: 'L1', ranking: [['A']] })
      .then(() => null, (e: unknown) => e)
    expect(err).toBeInstanceOf(ServiceError)
    expect((err as ServiceError).code).toBe('duplicate_submission')
    expect((err as ServiceError).status).toBe(409)
  })

  it('parses ndjson exports', async () => {
    const lines =
      '{"annotator_id": "u1", "asset_list_id": "L1", "ranking": [["A"], ["B"]]}\n' +
      '{"annotator_id": "u2", "asset_list_id": "L1", "ranking": [["B"], ["A"]]}\n'
    const api = new AnnotationApi('http://svc', fakeFetch(() => ({
      status: 200,
      body: lines,
    })))
    const records = await api.exportRankings()
    expect(records).toHaveLength(2)
    expect(records[0]?.ranking).toEqual([['A'], ['B']])
  })

  it('builds canonical view urls', () => {
    const api = new AnnotationApi('http://svc')
    expect(api.viewUrl('p0_a1', 3)).toBe('http://svc/assets/p0_a1/views/3')
  })
})
