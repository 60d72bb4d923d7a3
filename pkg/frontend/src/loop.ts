// Debounced preview dispatch with stale-response discarding: edits reset a
// 250ms timer; each dispatch carries a sequence number and only the newest
// one's result is applied.

export interface LoopCallbacks<T> {
  run: () => Promise<T>;
  apply: (result: T) => void;
  fail: (error: unknown) => void;
}

export class PreviewLoop<T> {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private sequence = 0;

  constructor(
    private readonly callbacks: LoopCallbacks<T>,
    readonly delayMs = 250,
  ) {}

  /** Schedule a preview after the debounce window, superseding any pending
   * or in-flight one. */
  schedule(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      this.dispatch();
    }, this.delayMs);
  }

  /** Dispatch immediately (used for the first render). */
  dispatch(): void {
    const seq = ++this.sequence;
    this.callbacks.run().then(
      (result) => {
        if (seq === this.sequence) {
          this.callbacks.apply(result);
        }
      },
      (error) => {
        if (seq === this.sequence) {
          this.callbacks.fail(error);
        }
      },
    );
  }
}
