import { describe, expect, it } from 'vitest'

import { TeleopClient } from '../src/client.js'

// minimal scripted stand-in for the browser WebSocket
class FakeSocket {
  static instances: FakeSocket[] = []
  readyState = 0
  sent: string[] = []
  onopen: (() => void) | null = null
  onclose: (() => void) | null = null
  onerror: (() => void) | null = null
  onmessage: ((ev: { data: string }) => void) | null = null

  constructor(public url: string) {
    FakeSocket.instances.push(this)
  }

  open() {
    this.readyState = 1
    this.onopen?.()
  }

  emit(obj: unknown) {
    this.onmessage?.({ data: JSON.stringify(obj) })
  }

  send(raw: string) {
    this.sent.push(raw)
  }

  close() {
    this.readyState = 3
    this.onclose?.()
  }
}

function makeClient(expectedHash: string | null = null) {
  FakeSocket.instances = []
  const warnings: string[] = []
  const phases: string[] = []
  const client = new TeleopClient(
    'ws://test',
    { onWarning: (w) => warnings.push(w), onPhase: (p) => phases.push(p) },
    (u) => new FakeSocket(u) as unknown as WebSocket,
    expectedHash,
  )
  client.connect()
  const sock = FakeSocket.instances[0]
  return { client, sock, warnings, phases }
}

const STATE = {
  type: 'state',
  tick: 1,
  t: 0.011,
  q: [0],
  bodies: {},
  sites: { grip: { p: [0, 0, 0], q: [1, 0, 0, 0] } },
  engaged: false,
  recording: false,
}

describe('TeleopClient', () => {
  it('goes live after the hello handshake', () => {
    const { client, sock, phases } = makeClient()
    expect(client.phase).toBe('connecting')
    sock.open()
    sock.emit({ type: 'hello', model_hash: 'aa', rate_hz: 25 })
    expect(client.phase).toBe('live')
    expect(client.hello?.rate_hz).toBe(25)
    expect(phases).toEqual(['connecting', 'live'])
  })

  it('warns on model hash mismatch', () => {
    const { sock, warnings } = makeClient('expected000000')
    sock.open()
    sock.emit({ type: 'hello', model_hash: 'different00000', rate_hz: 25 })
    expect(warnings.some((w) => w.includes('mismatch'))).toBe(true)
  })

  it('drops stale states, renders only the latest', () => {
    const { client, sock } = makeClient()
    sock.open()
    sock.emit({ type: 'hello', model_hash: 'aa', rate_hz: 25 })
    for (let tick = 1; tick <= 5; tick++) sock.emit({ ...STATE, tick })
    const latest = client.latest.take()
    expect(latest?.tick).toBe(5)
    expect(client.latest.dropped).toBe(4)
    expect(client.latest.take()).toBeNull()
    // lastState stays for UI binding
    expect(client.lastState?.tick).toBe(5)
  })

  it('refuses to send while not live', () => {
    const { client, sock } = makeClient()
    expect(client.send({ type: 'reset' })).toBe(false)
    sock.open()
    sock.emit({ type: 'hello', model_hash: 'aa', rate_hz: 25 })
    expect(client.send({ type: 'reset' })).toBe(true)
    expect(sock.sent).toEqual(['{"type":"reset"}'])
  })

  it('survives malformed server messages', () => {
    const { client, sock, warnings } = makeClient()
    sock.open()
    sock.emit({ type: 'hello', model_hash: 'aa', rate_hz: 25 })
    client.handleRaw('garbage{{{')
    expect(client.phase).toBe('live')
    expect(warnings.some((w) => w.includes('unparseable'))).toBe(true)
  })

  it('reconnects after an unexpected close and flags a model change', async () => {
    const { client, sock, warnings, phases } = makeClient()
    sock.open()
    sock.emit({ type: 'hello', model_hash: 'aa', rate_hz: 25 })
    sock.close() // server died
    expect(client.phase).toBe('disconnected')
    await new Promise((r) => setTimeout(r, 300)) // first retry fires at 250 ms
    const sock2 = FakeSocket.instances[1]
    expect(sock2).toBeDefined()
    sock2.open()
    sock2.emit({ type: 'hello', model_hash: 'bb', rate_hz: 25 })
    expect(client.phase).toBe('live')
    expect(warnings.some((w) => w.includes('model changed'))).toBe(true)
    expect(phases).toEqual(['connecting', 'live', 'disconnected', 'connecting', 'live'])
    client.close()
  })

  it('routes server errors to the handler', () => {
    const errors: string[] = []
    FakeSocket.instances = []
    const client = new TeleopClient(
      'ws://test',
      { onError: (code) => errors.push(code) },
      (u) => new FakeSocket(u) as unknown as WebSocket,
    )
    client.connect()
    const sock = FakeSocket.instances[0]
    sock.open()
    sock.emit({ type: 'error', code: 'unknown_site', detail: 'nope' })
    expect(errors).toEqual(['unknown_site'])
  })
})
