// Outbound rate limiting: arbitrarily fast input mutates a snapshot source;
// the sender emits at most `rateHz` frames per second (latest wins) and
// keeps emitting unchanged heartbeat frames so the server's delta math
// stays anchored.

export class CoalescingSender<T> {
  private lastSend = -Infinity
  private pending = false

  constructor(
    private rateHz: number,
    private snapshot: () => T,
    private send: (value: T) => void,
    private now: () => number = () => performance.now() / 1000,
  ) {}

  get minInterval(): number {
    return 1 / this.rateHz
  }

  /** Mark the source dirty; sends immediately if the rate budget allows. */
  poke() {
    this.pending = true
    this.maybeSend()
  }

  /** Called from the render/heartbeat loop; always keeps the stream alive. */
  tick() {
    this.pending = true
    this.maybeSend()
  }

  private maybeSend() {
    const t = this.now()
    if (t - this.lastSend < this.minInterval - 1e-9) return
    if (!this.pending) return
    this.pending = false
    this.lastSend = t
    this.send(this.snapshot())
  }
}

/** Keep only the newest state between renders; stale frames are dropped. */
export class LatestHolder<T> {
  private value: T | null = null
  dropped = 0

  push(v: T) {
    if (this.value !== null) this.dropped += 1
    this.value = v
  }

  /** Return the newest value (or null) and clear the slot. */
  take(): T | null {
    const v = this.value
    this.value = null
    return v
  }

  peek(): T | null {
    return this.value
  }
}
