/**
 * Power-excursion figure: excess power over the idle baseline through a
 * run, on a log time axis by default so the startup transient stays
 * readable next to a long tail.
 */

import type { TracePoint } from "./csv.js";
import {
  DEFAULT_HEIGHT,
  DEFAULT_WIDTH,
  PALETTE,
  Svg,
  axisBottom,
  axisLeft,
  gridHorizontal,
  label,
  linearScale,
  logScale,
} from "./svg.js";

export interface PowerOptions {
  baseline: number;
  logTime?: boolean;
  title?: string;
}

const MARGIN = { top: 30, right: 150, bottom: 50, left: 65 };

export function renderPower(points: TracePoint[], opts: PowerOptions): string {
  if (!Number.isFinite(opts.baseline)) {
    throw new RangeError(`baseline must be finite, got ${opts.baseline}`);
  }
  const logTime = opts.logTime ?? true;
  // excess is plotted unclamped so sub-baseline dips stay visible
  let usable = points.map((p) => ({ t: p.t, excess: p.p - opts.baseline }));
  if (logTime) {
    usable = usable.filter((p) => p.t > 0);
  }
  if (usable.length < 2) {
    throw new RangeError(`need at least 2 plottable samples, got ${usable.length}`);
  }

  const ts = usable.map((p) => p.t);
  const es = usable.map((p) => p.excess);
  const eLo = Math.min(0, ...es);
  const eHi = Math.max(0, ...es);

  const svg = new Svg(DEFAULT_WIDTH, DEFAULT_HEIGHT);
  const x0 = MARGIN.left;
  const x1 = DEFAULT_WIDTH - MARGIN.right;
  const y0 = DEFAULT_HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;

  const xDomain: [number, number] = [Math.min(...ts), Math.max(...ts)];
  const xs = logTime ? logScale(xDomain, [x0, x1]) : linearScale(xDomain, [x0, x1]);
  const ys = linearScale([eLo, eHi], [y0, y1]);

  gridHorizontal(svg, ys, x0, x1);
  axisBottom(svg, xs, y0, "time (s)");
  axisLeft(svg, ys, x0, "power above baseline (W)");
  svg.text((x0 + x1) / 2, MARGIN.top - 12, opts.title ?? "power excursion", {
    "text-anchor": "middle",
    "font-weight": "bold",
  });

  // the baseline itself: excess == 0
  const zy = ys.map(0);
  svg.el("line", {
    x1: x0,
    y1: zy,
    x2: x1,
    y2: zy,
    stroke: "#888888",
    "stroke-width": "1",
    "stroke-dasharray": "6 4",
  });
  svg.text(x1 - 4, zy - 5, `baseline (${label(opts.baseline)} W)`, {
    "text-anchor": "end",
    fill: "#888888",
  });

  const color = PALETTE[0] as string;
  svg.polyline(
    usable.map((p) => [xs.map(p.t), ys.map(p.excess)] as [number, number]),
    color,
  );

  return svg.render();
}
