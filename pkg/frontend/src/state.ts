/**
 * Studio state and its mapping onto the relight request body.
 *
 * The mapping is a pure function: the same state always yields the same
 * body (and the same JSON text), so the backend cache/determinism story
 * holds end to end.
 */

export type LightMode = "points" | "sh";
export type LayerView = "relight" | "albedo" | "coarse" | "sp" | "sg";

export interface PointSourceState {
  azimuthDeg: number;
  elevationDeg: number;
  distance: number;
  intensity: number;
}

export interface StudioState {
  mode: LightMode;
  sources: PointSourceState[];
  sh: number[];
  wp: number;
  wg: number;
  exposure: number;
  layer: LayerView;
}

export interface ModelInfo {
  width: number;
  height: number;
}

export const WEIGHT_MIN = 0;
export const WEIGHT_MAX = 2;
export const EXPOSURE_MIN = 0.05;
export const EXPOSURE_MAX = 8;

const clampNum = (v: number, lo: number, hi: number) =>
  Math.min(hi, Math.max(lo, Number.isFinite(v) ? v : lo));

export function defaultState(): StudioState {
  const sources: PointSourceState[] = [
    { azimuthDeg: 0, elevationDeg: 90, distance: 300, intensity: 1 },
    { azimuthDeg: 0, elevationDeg: 30, distance: 300, intensity: 0.4 },
    { azimuthDeg: 90, elevationDeg: 30, distance: 300, intensity: 0.4 },
    { azimuthDeg: 180, elevationDeg: 30, distance: 300, intensity: 0.4 },
    { azimuthDeg: 270, elevationDeg: 30, distance: 300, intensity: 0.4 },
  ];
  const sh = [1, 0, 0, 0, 0, 0, 0, 0, 0];
  return { mode: "sh", sources, sh, wp: 1, wg: 1, exposure: 1, layer: "relight" };
}

/** Clamp every slider-backed value into its legal range. */
export function clampState(state: StudioState): StudioState {
  return {
    mode: state.mode === "points" ? "points" : "sh",
    sources: state.sources.slice(0, 5).map((s) => ({
      azimuthDeg: clampNum(s.azimuthDeg, -360, 360),
      elevationDeg: clampNum(s.elevationDeg, 0, 90),
      distance: clampNum(s.distance, 1, 100000),
      intensity: clampNum(s.intensity, 0, 100),
    })),
    sh: state.sh.slice(0, 9).map((c) => clampNum(c, -5, 5)),
    wp: clampNum(state.wp, WEIGHT_MIN, WEIGHT_MAX),
    wg: clampNum(state.wg, WEIGHT_MIN, WEIGHT_MAX),
    exposure: clampNum(state.exposure, EXPOSURE_MIN, EXPOSURE_MAX),
    layer: state.layer,
  };
}

/** Spherical source controls to pixel-space position about the centroid. */
export function sourcePosition(
  s: PointSourceState,
  model: ModelInfo,
): [number, number, number] {
  const cx = (model.width - 1) / 2;
  const cy = (model.height - 1) / 2;
  const az = (s.azimuthDeg * Math.PI) / 180;
  const el = (s.elevationDeg * Math.PI) / 180;
  return [
    cx + s.distance * Math.cos(el) * Math.cos(az),
    cy + s.distance * Math.cos(el) * Math.sin(az),
    s.distance * Math.sin(el),
  ];
}

export interface RelightBody {
  light:
    | { type: "points"; sources: { position: number[]; intensity: number }[] }
    | { type: "sh"; coefficients: number[] };
  wp: number;
  wg: number;
  exposure: number;
}

export function toRelightBody(state: StudioState, model: ModelInfo): RelightBody {
  const s = clampState(state);
  const light =
    s.mode === "points"
      ? {
          type: "points" as const,
          sources: s.sources.map((src) => ({
            position: sourcePosition(src, model),
            intensity: src.intensity,
          })),
        }
      : { type: "sh" as const, coefficients: s.sh.slice() };
  return { light, wp: s.wp, wg: s.wg, exposure: s.exposure };
}
