import { ApiClient } from "./client.js";
import { hitTest } from "./hittest.js";
import { TaskTimer, type Clock, monotonicClock } from "./timer.js";
import { IMPOSSIBLE, type AnnotationTask } from "./types.js";

export type SessionState = "idle" | "presenting" | "timing" | "submitting" | "exhausted";

export interface SessionHooks {
  /** Draw the task; the timer arms only after this resolves. */
  present?: (task: AnnotationTask) => void | Promise<void>;
  onState?: (state: SessionState, task: AnnotationTask | null) => void;
  onSubmitted?: (taskId: string, chosen: string, elapsedMs: number) => void;
}

/** One worker's annotation session: fetch task, render, time, submit once,
 * advance. Clicks outside every box are ignored; a second submission
 * attempt on the same task is blocked. */
export class AnnotationSession {
  private state: SessionState = "idle";
  private task: AnnotationTask | null = null;
  private readonly timer: TaskTimer;

  constructor(
    private readonly client: ApiClient,
    readonly workerId: string,
    private readonly hooks: SessionHooks = {},
    clock: Clock = monotonicClock,
  ) {
    this.timer = new TaskTimer(clock);
  }

  get currentState(): SessionState {
    return this.state;
  }

  get currentTask(): AnnotationTask | null {
    return this.task;
  }

  /** Current timer reading for the on-screen display. */
  displayElapsedMs(): number {
    return this.state === "timing" ? this.timer.elapsedMs() : 0;
  }

  /** Fetch and present the next task; false when none remain. */
  async advance(): Promise<boolean> {
    this.setState("presenting", null);
    this.timer.reset();
    const task = await this.client.nextTask(this.workerId);
    if (task === null) {
      this.task = null;
      this.setState("exhausted", null);
      return false;
    }
    this.task = task;
    await this.hooks.present?.(task);
    this.timer.start(); // scene is visible from here on
    this.setState("timing", task);
    return true;
  }

  /** Click in scene coordinates. Outside every box: ignored. */
  async click(x: number, y: number): Promise<boolean> {
    if (this.state !== "timing" || this.task === null) {
      return false;
    }
    const hit = hitTest(this.task.scene.boxes, x, y);
    if (hit === null) {
      return false;
    }
    return this.submit(hit);
  }

  /** The "impossible to identify" checkbox. */
  async impossible(): Promise<boolean> {
    if (this.state !== "timing" || this.task === null) {
      return false;
    }
    return this.submit(IMPOSSIBLE);
  }

  private async submit(chosen: string): Promise<boolean> {
    if (this.state !== "timing" || this.task === null) {
      return false; // double submission blocked
    }
    const task = this.task;
    const elapsedMs = this.timer.elapsedMs(); // captured at the click
    this.setState("submitting", task);
    await this.client.submit({
      task_id: task.task_id,
      worker_id: this.workerId,
      chosen,
      elapsed_ms: elapsedMs,
    });
    this.hooks.onSubmitted?.(task.task_id, chosen, elapsedMs);
    return true;
  }

  /** Run tasks until the queue is exhausted. */
  async runAll(decide: (task: AnnotationTask) => Promise<void> | void): Promise<number> {
    let n = 0;
    while (await this.advance()) {
      await decide(this.task!);
      n += 1;
    }
    return n;
  }

  private setState(state: SessionState, task: AnnotationTask | null): void {
    this.state = state;
    this.hooks.onState?.(state, task);
  }
}
