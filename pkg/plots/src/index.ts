export {
  SCALE_COLUMNS,
  SchemaError,
  loadBaseline,
  loadScaleCsv,
  loadTraceCsv,
  okRows,
  parseScaleCsv,
  parseTraceCsv,
} from "./csv.js";
export type { ScaleRow, TracePoint } from "./csv.js";
export { renderScaling, scalingSeries } from "./scaling.js";
export type { ScalingOptions } from "./scaling.js";
export { phaseBars, renderPhases } from "./phases.js";
export type { PhaseBar, PhasesOptions } from "./phases.js";
export { renderPower } from "./power.js";
export type { PowerOptions } from "./power.js";
export { main } from "./cli.js";
export { PALETTE, Svg, linearScale, logScale } from "./svg.js";
export type { Scale } from "./svg.js";
