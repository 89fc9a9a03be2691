import { describe, expect, it } from 'vitest'

import { parseServerMsg, serialize } from '../src/protocol.js'

describe('parseServerMsg', () => {
  it('accepts a hello', () => {
    const m = parseServerMsg('{"type":"hello","model_hash":"abc","rate_hz":25}')
    expect(m).toEqual({ type: 'hello', model_hash: 'abc', rate_hz: 25 })
  })

  it('accepts a state broadcast', () => {
    const raw = JSON.stringify({
      type: 'state',
      tick: 3,
      t: 0.033,
      q: [0, 0.1],
      bodies: { base: { p: [0, 0, 0.1], q: [1, 0, 0, 0] } },
      sites: { grip: { p: [0.69, 0, 0.3], q: [1, 0, 0, 0] } },
      engaged: false,
      recording: true,
    })
    const m = parseServerMsg(raw)
    expect(m?.type).toBe('state')
    if (m?.type === 'state') {
      expect(m.sites.grip.p[0]).toBeCloseTo(0.69)
      expect(m.recording).toBe(true)
    }
  })

  it('accepts errors and normalizes detail', () => {
    const m = parseServerMsg('{"type":"error","code":"unknown_site"}')
    expect(m).toEqual({ type: 'error', code: 'unknown_site', detail: '' })
  })

  it('rejects garbage without throwing', () => {
    expect(parseServerMsg('not json')).toBeNull()
    expect(parseServerMsg('42')).toBeNull()
    expect(parseServerMsg('{"type":"state"}')).toBeNull()
    expect(parseServerMsg('{"type":"mystery"}')).toBeNull()
  })
})

describe('serialize', () => {
  it('round-trips a hand frame', () => {
    const pose = { p: [0.1, 0.2, 0.3] as [number, number, number], q: [1, 0, 0, 0] as [number, number, number, number] }
    const raw = serialize({ type: 'hand_frame', t: 1.5, wrist: pose, tips: [pose, pose, pose, pose, pose], curl: [0, 0, 1, 1, 1] })
    const parsed = JSON.parse(raw)
    expect(parsed.type).toBe('hand_frame')
    expect(parsed.curl).toEqual([0, 0, 1, 1, 1])
    expect(parsed.tips).toHaveLength(5)
  })
})
