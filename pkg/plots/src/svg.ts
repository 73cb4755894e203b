/**
 * Minimal deterministic SVG scene builder: no DOM, no randomness, no
 * timestamps. Coordinates render with two fixed decimals so a byte-equal
 * input always produces a byte-equal file.
 */

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export const DEFAULT_WIDTH = 800;
export const DEFAULT_HEIGHT = 500;

/** Shared curve/series palette (colorblind-tolerant, fixed order). */
export const PALETTE = [
  "#1f77b4",
  "#ff7f0e",
  "#2ca02c",
  "#d62728",
  "#9467bd",
  "#8c564b",
  "#e377c2",
  "#7f7f7f",
];

export const FONT = 'font-family="sans-serif"';

export function fmt(x: number): string {
  const s = x.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

/** Tick label: integers as-is, everything else trimmed of trailing zeros. */
export function label(v: number): string {
  if (Number.isInteger(v) && Math.abs(v) < 1e15) return String(v);
  const s = v.toPrecision(4);
  return String(Number(s));
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export class Svg {
  private parts: string[] = [];

  constructor(
    readonly width: number = DEFAULT_WIDTH,
    readonly height: number = DEFAULT_HEIGHT,
  ) {}

  el(tag: string, attrs: Record<string, string | number>): void {
    const body = Object.entries(attrs)
      .map(([k, v]) => `${k}="${typeof v === "number" ? fmt(v) : v}"`)
      .join(" ");
    this.parts.push(`<${tag} ${body}/>`);
  }

  text(x: number, y: number, content: string, attrs: Record<string, string> = {}): void {
    const extra = Object.entries(attrs)
      .map(([k, v]) => ` ${k}="${v}"`)
      .join("");
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" ${FONT} font-size="12"${extra}>${esc(content)}</text>`,
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, extra = ""): void {
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="1.5"${extra}/>`,
    );
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
      `<rect x="0" y="0" width="${this.width}" height="${this.height}" fill="#ffffff"/>`,
      ...this.parts,
      "</svg>",
    ].join("\n");
  }
}

export interface Scale {
  map(v: number): number;
  ticks(): number[];
  readonly domain: [number, number];
  readonly range: [number, number];
  readonly log: boolean;
}

/** Round a raw interval up to the usual 1/2/5 ladder. */
function niceStep(raw: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const frac = raw / mag;
  if (frac <= 1) return mag;
  if (frac <= 2) return 2 * mag;
  if (frac <= 5) return 5 * mag;
  return 10 * mag;
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  let [lo, hi] = domain;
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const k = (range[1] - range[0]) / (hi - lo);
  return {
    domain: [lo, hi],
    range,
    log: false,
    map: (v) => range[0] + (v - lo) * k,
    ticks: () => {
      const step = niceStep((hi - lo) / 5);
      const out: number[] = [];
      for (let t = Math.ceil(lo / step) * step; t <= hi + step * 1e-9; t += step) {
        // snap away accumulated float error so labels stay clean
        out.push(Number(t.toPrecision(12)));
      }
      return out;
    },
  };
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  let [lo, hi] = domain;
  if (lo <= 0) throw new RangeError(`log scale needs a positive domain, got [${lo}, ${hi}]`);
  if (lo === hi) {
    lo /= 2;
    hi *= 2;
  }
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const k = (range[1] - range[0]) / (lhi - llo);
  return {
    domain: [lo, hi],
    range,
    log: true,
    map: (v) => range[0] + (Math.log10(v) - llo) * k,
    ticks: () => {
      const out: number[] = [];
      for (let e = Math.ceil(llo - 1e-9); e <= Math.floor(lhi + 1e-9); e += 1) {
        out.push(Math.pow(10, e));
      }
      if (out.length >= 2) return out;
      // a sub-decade domain: fall back to 1-2-5 within it
      const fine: number[] = [];
      for (let e = Math.floor(llo) - 1; e <= Math.ceil(lhi); e += 1) {
        for (const m of [1, 2, 5]) {
          const v = m * Math.pow(10, e);
          if (v >= lo - 1e-12 && v <= hi + 1e-12) fine.push(Number(v.toPrecision(12)));
        }
      }
      return fine;
    },
  };
}

export function axisBottom(svg: Svg, scale: Scale, y: number, title: string): void {
  const [x0, x1] = scale.range;
  svg.el("line", { x1: x0, y1: y, x2: x1, y2: y, stroke: "#333333", "stroke-width": "1" });
  for (const t of scale.ticks()) {
    const x = scale.map(t);
    svg.el("line", { x1: x, y1: y, x2: x, y2: y + 5, stroke: "#333333", "stroke-width": "1" });
    svg.text(x, y + 18, label(t), { "text-anchor": "middle" });
  }
  svg.text((x0 + x1) / 2, y + 36, title, { "text-anchor": "middle", "font-weight": "bold" });
}

export function axisLeft(svg: Svg, scale: Scale, x: number, title: string): void {
  const [y0, y1] = scale.range; // y0 is the bottom pixel, y1 the top
  svg.el("line", { x1: x, y1: y0, x2: x, y2: y1, stroke: "#333333", "stroke-width": "1" });
  for (const t of scale.ticks()) {
    const y = scale.map(t);
    svg.el("line", { x1: x - 5, y1: y, x2: x, y2: y, stroke: "#333333", "stroke-width": "1" });
    svg.text(x - 8, y + 4, label(t), { "text-anchor": "end" });
  }
  const cy = (y0 + y1) / 2;
  svg.text(x - 45, cy, title, {
    "text-anchor": "middle",
    "font-weight": "bold",
    transform: `rotate(-90 ${fmt(x - 45)} ${fmt(cy)})`,
  });
}

export function gridHorizontal(svg: Svg, scale: Scale, x0: number, x1: number): void {
  for (const t of scale.ticks()) {
    const y = scale.map(t);
    svg.el("line", {
      x1: x0,
      y1: y,
      x2: x1,
      y2: y,
      stroke: "#dddddd",
      "stroke-width": "1",
    });
  }
}
