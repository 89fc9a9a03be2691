// Browser entry point: wires the websocket client, hand emulation, canvas
// renderer, and control panel together. Server URL comes from the `server`
// query parameter (default ws://localhost:8765).

import { TeleopClient } from './client.js'
import { CoalescingSender } from './coalesce.js'
import { DEFAULT_HAND_CONFIG, EmulatedHand } from './hand.js'
import type { HandFrameMsg } from './protocol.js'
import { Renderer, sitePositions } from './render.js'
import { DEFAULT_VIEW, hitTest, viewBasis } from './view.js'

const SEND_RATE_HZ = 60

function el<T extends HTMLElement>(id: string): T {
  const e = document.getElementById(id)
  if (!e) throw new Error(`missing #${id}`)
  return e as T
}

function main() {
  const params = new URLSearchParams(location.search)
  const url = params.get('server') ?? 'ws://localhost:8765'
  const expectedHash = params.get('model_hash')

  const canvas = el<HTMLCanvasElement>('scene')
  const ctx = canvas.getContext('2d')
  if (!ctx) throw new Error('canvas 2d unavailable')
  const renderer = new Renderer(ctx, canvas.width, canvas.height)
  const view = { ...DEFAULT_VIEW, cx: canvas.width / 2, cy: canvas.height / 2 }

  const statusEl = el<HTMLSpanElement>('status')
  const warnEl = el<HTMLDivElement>('warnings')
  const recBtn = el<HTMLButtonElement>('record')
  const resetBtn = el<HTMLButtonElement>('reset')
  const graspBtn = el<HTMLButtonElement>('grasp')
  const hudEl = el<HTMLSpanElement>('hud')

  const hand = new EmulatedHand(DEFAULT_HAND_CONFIG)
  let selectedSite: string | null = null
  let started = performance.now()

  const client = new TeleopClient(
    url,
    {
      onPhase: (p) => {
        statusEl.textContent = p
        statusEl.className = p
      },
      onHello: (h) => warn(`connected; model ${h.model_hash.slice(0, 12)}, record ${h.rate_hz} Hz`),
      onError: (code, detail) => warn(`server error ${code}: ${detail}`),
      onWarning: warn,
    },
    (u) => new WebSocket(u),
    expectedHash,
  )
  client.connect()

  function warn(text: string) {
    const div = document.createElement('div')
    div.textContent = text
    warnEl.prepend(div)
    while (warnEl.childElementCount > 6) warnEl.lastChild?.remove()
  }

  const sender = new CoalescingSender<HandFrameMsg>(
    SEND_RATE_HZ,
    () => hand.frame((performance.now() - started) / 1000),
    (f) => client.send(f),
  )

  // input: drag translates, shift+drag rotates, wheel curls, click selects
  let dragging = false
  let lastX = 0
  let lastY = 0
  let moved = 0
  canvas.addEventListener('mousedown', (ev) => {
    dragging = true
    moved = 0
    lastX = ev.offsetX
    lastY = ev.offsetY
  })
  window.addEventListener('mouseup', (ev) => {
    if (!dragging) return
    dragging = false
    if (moved < 4 && client.lastState) {
      const target = hitTest(view, sitePositions(client.lastState), lastX, lastY)
      if (target) {
        selectedSite = target
        client.send({ type: 'select_site', site: target })
      }
    }
  })
  canvas.addEventListener('mousemove', (ev) => {
    if (!dragging) return
    const dx = ev.offsetX - lastX
    const dy = ev.offsetY - lastY
    lastX = ev.offsetX
    lastY = ev.offsetY
    moved += Math.abs(dx) + Math.abs(dy)
    const basis = viewBasis(view)
    if (ev.shiftKey) hand.rotateDrag(dx, dy)
    else hand.drag(dx, dy, basis.right, basis.up)
    sender.poke()
  })
  canvas.addEventListener('wheel', (ev) => {
    ev.preventDefault()
    hand.scrollCurl(ev.deltaY > 0 ? -1 : 1)
    sender.poke()
  })
  graspBtn.addEventListener('click', () => {
    hand.toggleGrasp()
    graspBtn.classList.toggle('active', hand.grasping)
    sender.poke()
  })
  resetBtn.addEventListener('click', () => client.send({ type: 'reset' }))
  recBtn.addEventListener('click', () => {
    const recording = client.lastState?.recording ?? false
    client.send({ type: recording ? 'record_stop' : 'record_start' })
  })
  window.addEventListener('keydown', (ev) => {
    if (ev.key === 'g') graspBtn.click()
    if (ev.key === 'r') resetBtn.click()
  })

  function loop() {
    // heartbeat keeps the hand stream alive even with no input
    if (client.phase === 'live') sender.tick()
    const state = client.latest.take() ?? client.lastState
    renderer.draw(view, state, { pos: hand.pos, quat: hand.quat, grasping: hand.grasping }, selectedSite)
    if (state) {
      recBtn.textContent = state.recording ? 'stop recording' : 'record'
      recBtn.classList.toggle('active', state.recording)
      hudEl.textContent =
        `fps ${renderer.fps.toFixed(0)} | tick ${state.tick} | ` +
        `engaged ${state.engaged} | recording ${state.recording}`
    }
    requestAnimationFrame(loop)
  }
  requestAnimationFrame(loop)
}

main()
