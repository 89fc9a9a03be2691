// Orthographic view math, kept DOM-free so projection and site hit-testing
// are unit-testable.

import type { Vec3 } from './protocol.js'

export interface ViewParams {
  yaw: number // rad about world z
  pitch: number // rad above the horizon
  scale: number // px per meter
  cx: number // screen center px
  cy: number
  targetZ: number // world z that maps to screen center
}

export const DEFAULT_VIEW: ViewParams = {
  yaw: Math.PI / 6,
  pitch: Math.PI / 7,
  scale: 420,
  cx: 480,
  cy: 300,
  targetZ: 0.25,
}

/** Camera basis vectors (right, up, forward) for the yaw/pitch orbit. */
export function viewBasis(v: ViewParams): { right: Vec3; up: Vec3; fwd: Vec3 } {
  const cy = Math.cos(v.yaw)
  const sy = Math.sin(v.yaw)
  const cp = Math.cos(v.pitch)
  const sp = Math.sin(v.pitch)
  const fwd: Vec3 = [cp * cy, cp * sy, -sp] // looking slightly downward
  const right: Vec3 = [-sy, cy, 0]
  const up: Vec3 = [-sp * cy, -sp * sy, -cp].map((x) => -x) as Vec3
  return { right, up, fwd }
}

export function project(v: ViewParams, p: Vec3): { x: number; y: number; depth: number } {
  const { right, up, fwd } = viewBasis(v)
  const q: Vec3 = [p[0], p[1], p[2] - v.targetZ]
  const x = q[0] * right[0] + q[1] * right[1] + q[2] * right[2]
  const y = q[0] * up[0] + q[1] * up[1] + q[2] * up[2]
  const d = q[0] * fwd[0] + q[1] * fwd[1] + q[2] * fwd[2]
  return { x: v.cx + v.scale * x, y: v.cy - v.scale * y, depth: d }
}

/** Nearest named point within `radiusPx` of a click, or null. */
export function hitTest(
  v: ViewParams,
  points: Record<string, Vec3>,
  clickX: number,
  clickY: number,
  radiusPx = 12,
): string | null {
  let best: string | null = null
  let bestD = radiusPx
  for (const [name, p] of Object.entries(points)) {
    const s = project(v, p)
    const d = Math.hypot(s.x - clickX, s.y - clickY)
    if (d <= bestD) {
      best = name
      bestD = d
    }
  }
  return best
}
