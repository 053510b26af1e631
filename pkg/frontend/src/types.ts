/** Wire types matching the annotation service API. */

export interface AnnotationTask {
  asset_list_id: string
  asset_ids: string[]
  presentation_order: string[]
}

export interface RankingRecordBody {
  annotator_id: string
  asset_list_id: string
  /** Ordered tie groups, best first. */
  ranking: string[][]
}

export interface SubmitAck {
  status: 'accepted'
  completed_lists: number
}

export interface ServiceErrorBody {
  code: string
  message: string
}

/** A refusal or validation failure reported by the service. */
export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message)
    this.name = 'ServiceError'
  }
}
