// Canvas renderer: bodies as axis triads, sites as clickable discs, the
// emulated hand as a crosshair. Primitive wireframe drawing is enough to
// steer by; the server remains the only authority on robot state.

import type { StateMsg, Vec3, WirePose } from './protocol.js'
import { rotateVec } from './hand.js'
import type { Quat } from './protocol.js'
import { ViewParams, project } from './view.js'

const AXIS_LEN = 0.06
const AXIS_COLORS = ['#e05252', '#4caf50', '#3f7fd6'] // x, y, z

export interface HandView {
  pos: Vec3
  quat: Quat
  grasping: boolean
}

export function sitePositions(state: StateMsg): Record<string, Vec3> {
  const out: Record<string, Vec3> = {}
  for (const [name, pose] of Object.entries(state.sites)) out[name] = pose.p
  return out
}

export class Renderer {
  fps = 0
  private frames = 0
  private windowStart = 0

  constructor(
    private ctx: CanvasRenderingContext2D,
    private width: number,
    private height: number,
  ) {}

  draw(view: ViewParams, state: StateMsg | null, hand: HandView | null, selectedSite: string | null) {
    const g = this.ctx
    g.fillStyle = '#14161a'
    g.fillRect(0, 0, this.width, this.height)
    this.drawGrid(view)
    if (state) {
      for (const pose of Object.values(state.bodies)) this.drawTriad(view, pose)
      for (const [name, pose] of Object.entries(state.sites)) this.drawSite(view, name, pose, name === selectedSite)
    }
    if (hand) this.drawHand(view, hand)
    this.countFrame()
  }

  private drawGrid(view: ViewParams) {
    const g = this.ctx
    g.strokeStyle = '#23272e'
    g.lineWidth = 1
    for (let i = -5; i <= 5; i++) {
      this.line(view, [i * 0.2, -1, 0], [i * 0.2, 1, 0])
      this.line(view, [-1, i * 0.2, 0], [1, i * 0.2, 0])
    }
  }

  private drawTriad(view: ViewParams, pose: WirePose) {
    const g = this.ctx
    const axes: Vec3[] = [
      [AXIS_LEN, 0, 0],
      [0, AXIS_LEN, 0],
      [0, 0, AXIS_LEN],
    ]
    axes.forEach((a, i) => {
      const tip = rotateVec(pose.q, a)
      g.strokeStyle = AXIS_COLORS[i]
      g.lineWidth = 2
      this.line(view, pose.p, [pose.p[0] + tip[0], pose.p[1] + tip[1], pose.p[2] + tip[2]])
    })
  }

  private drawSite(view: ViewParams, name: string, pose: WirePose, selected: boolean) {
    const g = this.ctx
    const s = project(view, pose.p)
    g.beginPath()
    g.arc(s.x, s.y, selected ? 8 : 5, 0, 2 * Math.PI)
    g.fillStyle = selected ? '#ffd54a' : '#9ecbff'
    g.fill()
    g.fillStyle = '#c8ccd4'
    g.font = '11px sans-serif'
    g.fillText(name, s.x + 9, s.y - 6)
  }

  private drawHand(view: ViewParams, hand: HandView) {
    const g = this.ctx
    const s = project(view, hand.pos)
    g.strokeStyle = hand.grasping ? '#ffb020' : '#e8e8e8'
    g.lineWidth = 2
    g.beginPath()
    g.arc(s.x, s.y, 10, 0, 2 * Math.PI)
    g.stroke()
    g.beginPath()
    g.moveTo(s.x - 14, s.y)
    g.lineTo(s.x + 14, s.y)
    g.moveTo(s.x, s.y - 14)
    g.lineTo(s.x, s.y + 14)
    g.stroke()
  }

  private line(view: ViewParams, a: Vec3, b: Vec3) {
    const g = this.ctx
    const pa = project(view, a)
    const pb = project(view, b)
    g.beginPath()
    g.moveTo(pa.x, pa.y)
    g.lineTo(pb.x, pb.y)
    g.stroke()
  }

  private countFrame(now: () => number = () => performance.now()) {
    const t = now()
    this.frames += 1
    if (t - this.windowStart >= 1000) {
      this.fps = (this.frames * 1000) / (t - this.windowStart)
      this.frames = 0
      this.windowStart = t
    }
  }
}
