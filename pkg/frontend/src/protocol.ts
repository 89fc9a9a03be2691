// Wire protocol shared with the teleop server: one JSON object per text
// message, discriminated by "type". Poses are {p: [x,y,z], q: [w,x,y,z]}.

export type Vec3 = [number, number, number]
export type Quat = [number, number, number, number] // w, x, y, z

export interface WirePose {
  p: Vec3
  q: Quat
}

export interface HelloMsg {
  type: 'hello'
  model_hash: string
  rate_hz: number
}

export interface StateMsg {
  type: 'state'
  tick: number
  t: number
  q: number[]
  bodies: Record<string, WirePose>
  sites: Record<string, WirePose>
  engaged: boolean
  recording: boolean
}

export interface ErrorMsg {
  type: 'error'
  code: string
  detail: string
}

export type ServerMsg = HelloMsg | StateMsg | ErrorMsg

export interface HandFrameMsg {
  type: 'hand_frame'
  t: number
  wrist: WirePose
  tips: [WirePose, WirePose, WirePose, WirePose, WirePose]
  curl: [number, number, number, number, number]
}

export interface SelectSiteMsg {
  type: 'select_site'
  site: string
}

export type SimpleMsg = { type: 'reset' } | { type: 'record_start' } | { type: 'record_stop' }
export type ClientMsg = HandFrameMsg | SelectSiteMsg | SimpleMsg

export function parseServerMsg(raw: string): ServerMsg | null {
  let data: unknown
  try {
    data = JSON.parse(raw)
  } catch {
    return null
  }
  if (typeof data !== 'object' || data === null) return null
  const m = data as Record<string, unknown>
  switch (m.type) {
    case 'hello':
      if (typeof m.model_hash === 'string' && typeof m.rate_hz === 'number') return m as unknown as HelloMsg
      return null
    case 'state':
      if (
        typeof m.tick === 'number' &&
        typeof m.t === 'number' &&
        Array.isArray(m.q) &&
        typeof m.bodies === 'object' &&
        typeof m.sites === 'object' &&
        typeof m.engaged === 'boolean' &&
        typeof m.recording === 'boolean'
      )
        return m as unknown as StateMsg
      return null
    case 'error':
      if (typeof m.code === 'string') return { type: 'error', code: m.code, detail: String(m.detail ?? '') }
      return null
    default:
      return null
  }
}

export function serialize(msg: ClientMsg): string {
  return JSON.stringify(msg)
}
