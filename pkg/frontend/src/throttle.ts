/**
 * Coalesce slider events into rate-limited sends with at most one request
 * in flight.
 *
 * Every `update` overwrites the pending payload; a send happens only when
 * (a) no request is awaiting acknowledgement and (b) the minimum interval
 * since the previous send has elapsed. Clock and timer are injectable so
 * the contract is testable without real time.
 */

export interface ThrottleOptions {
  maxPerSecond?: number;
  now?: () => number;
  schedule?: (fn: () => void, ms: number) => unknown;
  cancel?: (handle: unknown) => void;
}

export class UpdateThrottle<T> {
  private readonly minInterval: number;
  private readonly now: () => number;
  private readonly schedule: (fn: () => void, ms: number) => unknown;
  private readonly cancel: (handle: unknown) => void;

  private pending: T | null = null;
  private inFlight = false;
  private lastSend = Number.NEGATIVE_INFINITY;
  private timer: unknown = null;
  private sentCount = 0;

  constructor(
    private readonly send: (payload: T) => void,
    options: ThrottleOptions = {},
  ) {
    this.minInterval = 1000 / (options.maxPerSecond ?? 30);
    this.now = options.now ?? (() => performance.now());
    this.schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.cancel = options.cancel ?? ((handle) => clearTimeout(handle as number));
  }

  /** Latest slider state; replaces anything not yet sent. */
  update(payload: T): void {
    this.pending = payload;
    this.flush();
  }

  /** The in-flight request was answered; a pending payload may go out. */
  acknowledge(): void {
    this.inFlight = false;
    this.flush();
  }

  /** Drop the in-flight marker (connection lost) without sending. */
  reset(): void {
    this.inFlight = false;
    if (this.timer !== null) {
      this.cancel(this.timer);
      this.timer = null;
    }
  }

  get totalSent(): number {
    return this.sentCount;
  }

  get hasPending(): boolean {
    return this.pending !== null;
  }

  private flush(): void {
    if (this.pending === null || this.inFlight) {
      return;
    }
    const wait = this.lastSend + this.minInterval - this.now();
    if (wait > 0) {
      if (this.timer === null) {
        this.timer = this.schedule(() => {
          this.timer = null;
          this.flush();
        }, wait);
      }
      return;
    }
    const payload = this.pending;
    this.pending = null;
    this.inFlight = true;
    this.lastSend = this.now();
    this.sentCount += 1;
    this.send(payload);
  }
}
