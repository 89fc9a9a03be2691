import { describe, expect, it } from 'vitest'

import { DEFAULT_HAND_CONFIG, EmulatedHand, quatMul, quatNormalize, rotateVec } from '../src/hand.js'

describe('quaternion helpers', () => {
  it('identity rotation leaves vectors alone', () => {
    expect(rotateVec([1, 0, 0, 0], [1, 2, 3])).toEqual([1, 2, 3])
  })

  it('90 degree rotation about z maps x to y', () => {
    const q = quatNormalize([Math.SQRT1_2, 0, 0, Math.SQRT1_2])
    const v = rotateVec(q, [1, 0, 0])
    expect(v[0]).toBeCloseTo(0, 12)
    expect(v[1]).toBeCloseTo(1, 12)
  })

  it('product of a quaternion and its conjugate is identity', () => {
    const q = quatNormalize([0.8, 0.1, -0.3, 0.5])
    const conj: [number, number, number, number] = [q[0], -q[1], -q[2], -q[3]]
    const r = quatMul(q, conj)
    expect(r[0]).toBeCloseTo(1, 12)
    expect(Math.abs(r[1]) + Math.abs(r[2]) + Math.abs(r[3])).toBeLessThan(1e-12)
  })
})

describe('EmulatedHand', () => {
  it('grasp toggle snaps lower-three curls across the hysteresis thresholds', () => {
    const hand = new EmulatedHand()
    let f = hand.frame(0)
    expect(f.curl).toEqual([0, 0, 0, 0, 0])
    hand.toggleGrasp()
    f = hand.frame(0.1)
    expect(f.curl).toEqual([0, 0, 1, 1, 1]) // above engage threshold 0.7
    hand.toggleGrasp()
    f = hand.frame(0.2)
    expect(f.curl).toEqual([0, 0, 0, 0, 0]) // below release threshold 0.3
  })

  it('scroll clamps curl to [0, 1]', () => {
    const hand = new EmulatedHand()
    hand.scrollCurl(100)
    expect(hand.lowerCurl).toBe(1)
    hand.scrollCurl(-300)
    expect(hand.lowerCurl).toBe(0)
  })

  it('drag moves along the view basis', () => {
    const hand = new EmulatedHand()
    const before = [...hand.pos]
    hand.drag(10, 0, [0, 1, 0], [0, 0, 1])
    expect(hand.pos[1]).toBeCloseTo(before[1] + 10 * DEFAULT_HAND_CONFIG.translateScale, 12)
    expect(hand.pos[0]).toBe(before[0])
  })

  it('rotate drag keeps the quaternion unit norm', () => {
    const hand = new EmulatedHand()
    for (let i = 0; i < 500; i++) hand.rotateDrag(3, -2)
    const n = Math.hypot(...hand.quat)
    expect(n).toBeCloseTo(1, 9)
  })

  it('fingertips ride the wrist frame', () => {
    const hand = new EmulatedHand()
    hand.pos = [1, 2, 3]
    const f = hand.frame(0)
    // middle tip sits straight ahead of the wrist along +x
    expect(f.tips[2].p[0]).toBeCloseTo(1.08, 12)
    expect(f.tips[2].p[1]).toBeCloseTo(2, 12)
    // unchanged-pose frames keep the same wrist (heartbeat anchoring)
    const g = hand.frame(1)
    expect(g.wrist).toEqual(f.wrist)
  })
})
