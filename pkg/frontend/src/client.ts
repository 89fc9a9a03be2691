// Connection state machine: hello handshake, model-hash mismatch warnings,
// automatic reconnect with backoff, and latest-state tracking. The client
// never simulates robot motion; the server state is the single source of
// truth for everything rendered.

import { LatestHolder } from './coalesce.js'
import type { ClientMsg, HelloMsg, ServerMsg, StateMsg } from './protocol.js'
import { parseServerMsg, serialize } from './protocol.js'

export type ConnectionPhase = 'disconnected' | 'connecting' | 'live'

export interface ClientEvents {
  onPhase?: (phase: ConnectionPhase) => void
  onHello?: (hello: HelloMsg) => void
  onError?: (code: string, detail: string) => void
  onWarning?: (text: string) => void
}

// injectable for tests; browsers provide the global WebSocket
export type SocketFactory = (url: string) => WebSocket

export class TeleopClient {
  phase: ConnectionPhase = 'disconnected'
  hello: HelloMsg | null = null
  readonly latest = new LatestHolder<StateMsg>()
  lastState: StateMsg | null = null

  private ws: WebSocket | null = null
  private closed = false
  private retryMs = 250
  private expectedHash: string | null

  constructor(
    readonly url: string,
    private events: ClientEvents = {},
    private makeSocket: SocketFactory = (u) => new WebSocket(u),
    expectedModelHash: string | null = null,
  ) {
    this.expectedHash = expectedModelHash
  }

  connect() {
    this.closed = false
    this.open()
  }

  close() {
    this.closed = true
    this.ws?.close()
    this.setPhase('disconnected')
  }

  send(msg: ClientMsg): boolean {
    if (this.phase !== 'live' || !this.ws || this.ws.readyState !== 1) return false
    this.ws.send(serialize(msg))
    return true
  }

  /** Apply one raw server message; exposed for tests. */
  handleRaw(raw: string) {
    const msg = parseServerMsg(raw)
    if (msg === null) {
      this.events.onWarning?.('unparseable server message dropped')
      return
    }
    this.handle(msg)
  }

  private handle(msg: ServerMsg) {
    switch (msg.type) {
      case 'hello': {
        if (this.expectedHash !== null && this.expectedHash !== msg.model_hash) {
          this.events.onWarning?.(
            `model hash mismatch: expected ${this.expectedHash.slice(0, 12)}, server has ${msg.model_hash.slice(0, 12)}`,
          )
        }
        if (this.hello !== null && this.hello.model_hash !== msg.model_hash) {
          this.events.onWarning?.('server model changed since the last connection')
        }
        this.hello = msg
        this.setPhase('live')
        this.events.onHello?.(msg)
        break
      }
      case 'state':
        this.lastState = msg
        this.latest.push(msg)
        break
      case 'error':
        this.events.onError?.(msg.code, msg.detail)
        break
    }
  }

  private open() {
    this.setPhase('connecting')
    let ws: WebSocket
    try {
      ws = this.makeSocket(this.url)
    } catch {
      this.scheduleRetry()
      return
    }
    this.ws = ws
    ws.onmessage = (ev: MessageEvent) => this.handleRaw(String(ev.data))
    ws.onopen = () => {
      this.retryMs = 250
    }
    ws.onclose = () => {
      this.ws = null
      if (!this.closed) this.scheduleRetry()
      else this.setPhase('disconnected')
    }
    ws.onerror = () => {
      // onclose follows; nothing to do here
    }
  }

  private scheduleRetry() {
    this.setPhase('disconnected')
    this.hello = this.hello // keep for change detection on reconnect
    const delay = this.retryMs
    this.retryMs = Math.min(this.retryMs * 2, 5000)
    setTimeout(() => {
      if (!this.closed) this.open()
    }, delay)
  }

  private setPhase(p: ConnectionPhase) {
    if (p !== this.phase) {
      this.phase = p
      this.events.onPhase?.(p)
    }
  }
}
