// Mouse/keyboard emulation of a tracked hand: drag translates, shift+drag
// rotates, scroll adjusts the lower-three-finger curl, and a grasp toggle
// snaps those curls across the server's hysteresis thresholds.

import type { HandFrameMsg, Quat, Vec3, WirePose } from './protocol.js'

export function quatMul(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a
  const [bw, bx, by, bz] = b
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ]
}

export function quatFromAxisAngle(axis: Vec3, angle: number): Quat {
  const n = Math.hypot(axis[0], axis[1], axis[2])
  if (n === 0 || angle === 0) return [1, 0, 0, 0]
  const s = Math.sin(angle / 2) / n
  return [Math.cos(angle / 2), axis[0] * s, axis[1] * s, axis[2] * s]
}

export function quatNormalize(q: Quat): Quat {
  const n = Math.hypot(q[0], q[1], q[2], q[3])
  const inv = n > 0 ? 1 / n : 1
  const out: Quat = [q[0] * inv, q[1] * inv, q[2] * inv, q[3] * inv]
  return out[0] < 0 ? [-out[0], -out[1], -out[2], -out[3]] : out
}

export function rotateVec(q: Quat, v: Vec3): Vec3 {
  const [w, x, y, z] = q
  const tx = 2 * (y * v[2] - z * v[1])
  const ty = 2 * (z * v[0] - x * v[2])
  const tz = 2 * (x * v[1] - y * v[0])
  return [
    v[0] + w * tx + y * tz - z * ty,
    v[1] + w * ty + z * tx - x * tz,
    v[2] + w * tz + x * ty - y * tx,
  ]
}

export interface HandConfig {
  translateScale: number // m per px of drag
  rotateScale: number // rad per px of shift+drag
  curlStep: number // curl per scroll notch
  fingerSpread: number // m between emulated fingertips
  graspOnCurl: number // above the engage threshold (0.7)
  graspOffCurl: number // below the release threshold (0.3)
}

export const DEFAULT_HAND_CONFIG: HandConfig = {
  translateScale: 0.002,
  rotateScale: 0.008,
  curlStep: 0.05,
  fingerSpread: 0.03,
  graspOnCurl: 1.0,
  graspOffCurl: 0.0,
}

export class EmulatedHand {
  pos: Vec3 = [0.4, 0, 0.3]
  quat: Quat = [1, 0, 0, 0]
  lowerCurl = 0 // middle/ring/pinky, the grasp gesture fingers
  grasping = false

  constructor(private cfg: HandConfig = DEFAULT_HAND_CONFIG) {}

  // view-plane drag: right is +right basis, up is +up basis of the view
  drag(dxPx: number, dyPx: number, right: Vec3, up: Vec3) {
    const s = this.cfg.translateScale
    this.pos = [
      this.pos[0] + s * (dxPx * right[0] - dyPx * up[0]),
      this.pos[1] + s * (dxPx * right[1] - dyPx * up[1]),
      this.pos[2] + s * (dxPx * right[2] - dyPx * up[2]),
    ]
  }

  rotateDrag(dxPx: number, dyPx: number) {
    const yaw = quatFromAxisAngle([0, 0, 1], -dxPx * this.cfg.rotateScale)
    const pitch = quatFromAxisAngle([0, 1, 0], -dyPx * this.cfg.rotateScale)
    this.quat = quatNormalize(quatMul(yaw, quatMul(pitch, this.quat)))
  }

  scrollCurl(notches: number) {
    this.lowerCurl = Math.min(1, Math.max(0, this.lowerCurl + notches * this.cfg.curlStep))
    this.grasping = this.lowerCurl >= 0.5
  }

  toggleGrasp() {
    this.grasping = !this.grasping
    this.lowerCurl = this.grasping ? this.cfg.graspOnCurl : this.cfg.graspOffCurl
  }

  frame(t: number): HandFrameMsg {
    const wrist: WirePose = { p: [...this.pos] as Vec3, q: [...this.quat] as Quat }
    const tips = [0, 1, 2, 3, 4].map((i) => {
      const local: Vec3 = [0.08, (i - 2) * this.cfg.fingerSpread, 0]
      const world = rotateVec(this.quat, local)
      return {
        p: [this.pos[0] + world[0], this.pos[1] + world[1], this.pos[2] + world[2]] as Vec3,
        q: [...this.quat] as Quat,
      }
    }) as HandFrameMsg['tips']
    const c = this.lowerCurl
    return { type: 'hand_frame', t, wrist, tips, curl: [0, 0, c, c, c] }
  }
}
