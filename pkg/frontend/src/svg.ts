/** Minimal SVG document builder for static figures. */

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export class LinearScale {
  constructor(
    readonly domain: [number, number],
    readonly range: [number, number],
  ) {}

  apply(value: number): number {
    const [d0, d1] = this.domain;
    const [r0, r1] = this.range;
    if (d1 === d0) return (r0 + r1) / 2;
    return r0 + ((value - d0) / (d1 - d0)) * (r1 - r0);
  }

  ticks(count = 5): number[] {
    const [d0, d1] = this.domain;
    const span = d1 - d0;
    if (span <= 0) return [d0];
    const step = Math.pow(10, Math.floor(Math.log10(span / count)));
    const err = (span / count) / step;
    const factor = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
    const s = step * factor;
    const start = Math.ceil(d0 / s) * s;
    const out: number[] = [];
    for (let v = start; v <= d1 + 1e-12 * Math.abs(s); v += s) out.push(Number(v.toPrecision(12)));
    return out;
  }
}

const esc = (s: string) => s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export class Svg {
  private parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {}

  add(fragment: string): void {
    this.parts.push(fragment);
  }

  circle(cx: number, cy: number, r: number, style: string): void {
    this.add(`<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(r)}" style="${style}"/>`);
  }

  line(x1: number, y1: number, x2: number, y2: number, style: string): void {
    this.add(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" style="${style}"/>`,
    );
  }

  polyline(points: Array<[number, number]>, style: string): void {
    const attr = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.add(`<polyline points="${attr}" style="${style}" fill="none"/>`);
  }

  text(x: number, y: number, content: string, style: string): void {
    this.add(`<text x="${fmt(x)}" y="${fmt(y)}" style="${style}">${esc(content)}</text>`);
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" ` +
      `viewBox="0 0 ${this.width} ${this.height}">\n<rect width="100%" height="100%" fill="white"/>\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

function fmt(v: number): string {
  return Number.isFinite(v) ? v.toFixed(2) : "0";
}

export interface Frame {
  svg: Svg;
  x: LinearScale;
  y: LinearScale;
}

/** Axes, tick marks and labels for a data rectangle; returns the scales. */
export function makeFrame(
  width: number,
  height: number,
  xDomain: [number, number],
  yDomain: [number, number],
  xLabel: string,
  yLabel: string,
  margin: Margin = { top: 20, right: 20, bottom: 45, left: 60 },
): Frame {
  const svg = new Svg(width, height);
  const x = new LinearScale(xDomain, [margin.left, width - margin.right]);
  const y = new LinearScale(yDomain, [height - margin.bottom, margin.top]);
  const axisStyle = "stroke:#333;stroke-width:1";
  const tickStyle = "font:11px sans-serif;fill:#333";
  const labelStyle = "font:13px sans-serif;fill:#111";
  svg.line(margin.left, height - margin.bottom, width - margin.right, height - margin.bottom, axisStyle);
  svg.line(margin.left, margin.top, margin.left, height - margin.bottom, axisStyle);
  for (const t of x.ticks()) {
    const px = x.apply(t);
    svg.line(px, height - margin.bottom, px, height - margin.bottom + 4, axisStyle);
    svg.text(px - 10, height - margin.bottom + 16, trimTick(t), tickStyle);
  }
  for (const t of y.ticks()) {
    const py = y.apply(t);
    svg.line(margin.left - 4, py, margin.left, py, axisStyle);
    svg.text(8, py + 4, trimTick(t), tickStyle);
  }
  svg.text(width / 2 - 30, height - 8, xLabel, labelStyle);
  svg.text(12, margin.top - 6, yLabel, labelStyle);
  return { svg, x, y };
}

function trimTick(v: number): string {
  const s = v.toPrecision(4);
  return String(Number(s));
}
