// Against a live lucidforge server (spawned as a subprocess): connect and
// handshake, grasp toggle flips `engaged` within 2 broadcast ticks, reset
// restores the initial state, and a record cycle produces a loadable
// episode file.

import { spawn, ChildProcess } from 'node:child_process'
import { mkdtempSync, readdirSync, readFileSync, writeFileSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'
import { afterAll, beforeAll, describe, expect, it } from 'vitest'
import WebSocket from 'ws'

import { TeleopClient } from '../src/client.js'
import { EmulatedHand } from '../src/hand.js'
import type { StateMsg } from '../src/protocol.js'

const PORT = 8931
const URL = `ws://127.0.0.1:${PORT}`
let server: ChildProcess
let recordDir: string
let canConnect = false

function waitForState(client: TeleopClient, pred: (s: StateMsg) => boolean, timeoutMs = 5000): Promise<StateMsg> {
  return new Promise((resolve, reject) => {
    const t0 = Date.now()
    const poll = setInterval(() => {
      const s = client.latest.take()
      if (s && pred(s)) {
        clearInterval(poll)
        resolve(s)
      } else if (Date.now() - t0 > timeoutMs) {
        clearInterval(poll)
        reject(new Error('timed out waiting for state'))
      }
    }, 5)
  })
}

beforeAll(async () => {
  recordDir = mkdtempSync(join(tmpdir(), 'lf-ui-test-'))
  const modelPath = join(recordDir, 'model.xml')
  const model = spawn('python3', ['-c', 'from lucidforge.models import gripper_scene; print(gripper_scene())'])
  const xml: string = await new Promise((resolve, reject) => {
    let out = ''
    model.stdout.on('data', (d) => (out += d))
    model.on('exit', (code) => (code === 0 ? resolve(out) : reject(new Error(`model gen exit ${code}`))))
  })
  writeFileSync(modelPath, xml)
  server = spawn(
    'python3',
    ['-m', 'lucidforge.cli', 'serve', modelPath, '--port', String(PORT), '--record-dir', recordDir],
    { stdio: ['ignore', 'pipe', 'pipe'] },
  )
  // wait until the port accepts a websocket
  for (let i = 0; i < 100; i++) {
    try {
      await new Promise<void>((resolve, reject) => {
        const probe = new WebSocket(URL)
        probe.on('open', () => {
          probe.close()
          resolve()
        })
        probe.on('error', reject)
      })
      canConnect = true
      break
    } catch {
      await new Promise((r) => setTimeout(r, 100))
    }
  }
  if (!canConnect) throw new Error('server did not come up')
}, 30000)

afterAll(() => {
  server?.kill('SIGINT')
})

function connect(): Promise<TeleopClient> {
  const client = new TeleopClient(URL, {}, (u) => new WebSocket(u) as unknown as WebSocket)
  client.connect()
  return new Promise((resolve, reject) => {
    const t0 = Date.now()
    const poll = setInterval(() => {
      if (client.phase === 'live') {
        clearInterval(poll)
        resolve(client)
      } else if (Date.now() - t0 > 5000) {
        clearInterval(poll)
        reject(new Error('no hello'))
      }
    }, 5)
  })
}

describe('live server', () => {
  it('connects, handshakes, and streams state', async () => {
    const client = await connect()
    expect(client.hello?.rate_hz).toBe(25)
    expect(client.hello?.model_hash).toHaveLength(64)
    const st = await waitForState(client, (s) => s.tick > 0)
    expect(Object.keys(st.sites)).toContain('grip')
    client.close()
  })

  it('grasp toggle flips engaged within 2 broadcast ticks', async () => {
    const client = await connect()
    const hand = new EmulatedHand()
    hand.pos = [0.4, 0, 0.3]
    client.send(hand.frame(0))
    client.send({ type: 'select_site', site: 'grip' })
    const before = await waitForState(client, (s) => s.tick > 0)
    hand.toggleGrasp()
    client.send(hand.frame(0.1))
    const engaged = await waitForState(client, (s) => s.engaged)
    expect(engaged.tick - before.tick).toBeLessThanOrEqual(2 + 1) // one tick may already be in flight
    // toggle off releases within the same bound
    hand.toggleGrasp()
    client.send(hand.frame(0.2))
    const released = await waitForState(client, (s) => !s.engaged)
    expect(released.tick).toBeGreaterThan(engaged.tick)
    client.send({ type: 'reset' })
    client.close()
  })

  it('reset restores the initial configuration', async () => {
    const client = await connect()
    const initial = await waitForState(client, (s) => s.tick > 0)
    const hand = new EmulatedHand()
    hand.pos = [0.4, 0, 0.3]
    client.send(hand.frame(0))
    client.send({ type: 'select_site', site: 'grip' })
    hand.toggleGrasp()
    client.send(hand.frame(0.1))
    hand.drag(40, -30, [0, 1, 0], [0, 0, 1])
    client.send(hand.frame(0.2))
    await waitForState(client, (s) => s.q.some((x) => Math.abs(x) > 1e-4), 8000)
    client.send({ type: 'reset' })
    const after = await waitForState(client, (s) => s.q.every((x) => Math.abs(x) < 1e-12) && !s.engaged)
    expect(after.q).toEqual(initial.q)
    client.close()
  })

  it('a record cycle produces a loadable episode file', async () => {
    const client = await connect()
    const filesBefore = readdirSync(recordDir).filter((f) => f.endsWith('.jsonl'))
    client.send({ type: 'record_start' })
    await waitForState(client, (s) => s.recording)
    await new Promise((r) => setTimeout(r, 600))
    client.send({ type: 'record_stop' })
    await waitForState(client, (s) => !s.recording)
    // the server flushes on its tick loop; give it a moment
    let files: string[] = []
    for (let i = 0; i < 50; i++) {
      files = readdirSync(recordDir).filter((f) => f.endsWith('.jsonl'))
      if (files.length > filesBefore.length) break
      await new Promise((r) => setTimeout(r, 100))
    }
    expect(files.length).toBeGreaterThan(filesBefore.length)
    const newest = files.sort().at(-1)!
    const lines = readFileSync(join(recordDir, newest), 'utf-8').trimEnd().split('\n')
    const header = JSON.parse(lines[0])
    expect(header.lucidforge_episode).toBe(1)
    expect(header.rate_hz).toBe(25)
    expect(lines.length).toBeGreaterThan(8) // ~0.6 s at 25 Hz
    const frame = JSON.parse(lines[1])
    expect(frame).toHaveProperty('t')
    expect(frame).toHaveProperty('mocap')
    expect(frame.mocap.grip).toHaveLength(9)
    client.close()
  }, 15000)
})
