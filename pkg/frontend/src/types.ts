export const IMPOSSIBLE = "IMPOSSIBLE";

export interface Box {
  object_id: string;
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface ScenePayload {
  scene_id: string;
  width: number;
  height: number;
  rows: number;
  cols: number;
  render: { cells?: string[]; objects?: Record<string, string> };
  boxes: Box[];
}

export interface AnnotationTask {
  task_id: string;
  sentence: string;
  scene: ScenePayload;
}

export interface AnnotationRecord {
  task_id: string;
  worker_id: string;
  chosen: string;
  elapsed_ms: number;
}

export interface StoredRecord extends AnnotationRecord {
  correct: boolean;
  received_at: number;
}
