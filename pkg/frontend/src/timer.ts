/** Task timer on a monotonic clock (performance.now, not wall time, so a
 * system clock change mid-task cannot corrupt the measurement). */

export type Clock = () => number;

export const monotonicClock: Clock =
  typeof performance !== "undefined" ? () => performance.now() : () => Number(process.hrtime.bigint() / 1000000n);

export class TaskTimer {
  private startedAt: number | null = null;

  constructor(private readonly clock: Clock = monotonicClock) {}

  /** Arm the timer; call only once the scene is fully rendered. */
  start(): void {
    this.startedAt = this.clock();
  }

  get running(): boolean {
    return this.startedAt !== null;
  }

  /** Milliseconds since start; the same reading feeds both the on-screen
   * display and the submitted record. */
  elapsedMs(): number {
    if (this.startedAt === null) {
      throw new Error("timer read before start");
    }
    return this.clock() - this.startedAt;
  }

  reset(): void {
    this.startedAt = null;
  }
}

export function formatSeconds(elapsedMs: number): string {
  return (elapsedMs / 1000).toFixed(1) + "s";
}
