/** Thin client over the annotation service HTTP API. */

import {
  AnnotationTask,
  RankingRecordBody,
  ServiceError,
  ServiceErrorBody,
  SubmitAck,
} from './types'

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

async function raiseServiceError(resp: Response): Promise<never> {
  let body: ServiceErrorBody = { code: 'unknown', message: resp.statusText }
  try {
    body = (await resp.json()) as ServiceErrorBody
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ServiceError(resp.status, body.code, body.message)
}

export class AnnotationApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async nextTask(annotatorId: string): Promise<AnnotationTask | null> {
    const url = `${this.baseUrl}/tasks/next?annotator=${encodeURIComponent(annotatorId)}`
    const resp = await this.fetchImpl(url)
    if (!resp.ok) await raiseServiceError(resp)
    const payload = (await resp.json()) as { task: AnnotationTask | null }
    return payload.task
  }

  async submitRanking(body: RankingRecordBody): Promise<SubmitAck> {
    const resp = await this.fetchImpl(`${this.baseUrl}/rankings`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    })
    if (!resp.ok) await raiseServiceError(resp)
    return (await resp.json()) as SubmitAck
  }

  async exportRankings(role?: string): Promise<RankingRecordBody[]> {
    const suffix = role ? `?role=${encodeURIComponent(role)}` : ''
    const resp = await this.fetchImpl(`${this.baseUrl}/rankings/export${suffix}`)
    if (!resp.ok) await raiseServiceError(resp)
    const text = await resp.text()
    return text
      .split('\n')
      .filter((line) => line.trim().length > 0)
      .map((line) => JSON.parse(line) as RankingRecordBody)
  }

  /** URL of the k-th canonical view thumbnail of an asset. */
  viewUrl(assetId: string, k: number): string {
    return `${this.baseUrl}/assets/${encodeURIComponent(assetId)}/views/${k}`
  }
}
