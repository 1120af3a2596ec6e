/** The three figure kinds: data + ridge + band envelope, empirical sup-law
 * CDF against its limit, and the log-log rate fit. */

import {
  BandDoc,
  EstimateDoc,
  GaussFieldDoc,
  Point,
  RateDoc,
  limitLawCdf,
} from "./data.js";
import { makeFrame } from "./svg.js";

const W = 720;
const H = 540;

function bounds(points: Point[], pad: number): { x: [number, number]; y: [number, number] } {
  let xMin = Infinity,
    xMax = -Infinity,
    yMin = Infinity,
    yMax = -Infinity;
  for (const [x, y] of points) {
    xMin = Math.min(xMin, x);
    xMax = Math.max(xMax, x);
    yMin = Math.min(yMin, y);
    yMax = Math.max(yMax, y);
  }
  const px = pad * (xMax - xMin || 1);
  const py = pad * (yMax - yMin || 1);
  return { x: [xMin - px, xMax + px], y: [yMin - py, yMax + py] };
}

/** Scatter of the sample, ridge polyline, and one disk per vertex with the
 * band radius.  The envelope is drawn in data units, so the x and y scales
 * share one unit-per-pixel factor. */
export function renderBandOverlay(points: Point[], estimate: EstimateDoc, band: BandDoc): string {
  const all = points.concat(band.polyline);
  const box = bounds(all, 0.06);
  // equalize units per pixel across axes so radii are circles
  const plotW = W - 80;
  const plotH = H - 65;
  const uppX = (box.x[1] - box.x[0]) / plotW;
  const uppY = (box.y[1] - box.y[0]) / plotH;
  const upp = Math.max(uppX, uppY);
  const growX = (upp * plotW - (box.x[1] - box.x[0])) / 2;
  const growY = (upp * plotH - (box.y[1] - box.y[0])) / 2;
  const frame = makeFrame(
    W,
    H,
    [box.x[0] - growX, box.x[1] + growX],
    [box.y[0] - growY, box.y[1] + growY],
    "x",
    "y",
  );
  const { svg, x, y } = frame;
  const pxPerUnit = Math.abs(x.apply(1) - x.apply(0));
  for (const [px, py] of points) {
    svg.circle(x.apply(px), y.apply(py), 1.3, "fill:#9aa7b1;fill-opacity:0.55;stroke:none");
  }
  band.polyline.forEach(([vx, vy], i) => {
    svg.circle(
      x.apply(vx),
      y.apply(vy),
      band.radii[i] * pxPerUnit,
      "fill:#e4572e;fill-opacity:0.16;stroke:#e4572e;stroke-opacity:0.45;stroke-width:0.7",
    );
  });
  svg.polyline(
    band.polyline.map(([vx, vy]) => [x.apply(vx), y.apply(vy)] as [number, number]),
    "stroke:#17446b;stroke-width:2",
  );
  band.polyline.forEach(([vx, vy]) => {
    svg.circle(x.apply(vx), y.apply(vy), 2.2, "fill:#17446b;stroke:none");
  });
  svg.text(
    W - 330,
    28,
    `n=${band.n}  h=${band.h.toFixed(3)}  z=${band.z.toFixed(3)}  b_h=${band.b_h.toFixed(3)}`,
    "font:12px sans-serif;fill:#333",
  );
  return svg.render();
}

/** Empirical P(sup < b_h(z)) per bandwidth with the limiting curve. */
export function renderGumbelFit(doc: GaussFieldDoc): string {
  const zs = Object.keys(doc.per_h[0].p_at_z)
    .map(Number)
    .sort((a, b) => a - b);
  const zLo = Math.min(-2.5, zs[0]);
  const zHi = Math.max(4.5, zs[zs.length - 1]);
  const frame = makeFrame(W, H, [zLo, zHi], [0, 1.02], "z", "P(sup < b_h(z))");
  const { svg, x, y } = frame;
  const curve: Array<[number, number]> = [];
  for (let z = zLo; z <= zHi; z += (zHi - zLo) / 240) {
    curve.push([x.apply(z), y.apply(limitLawCdf(z))]);
  }
  svg.polyline(curve, "stroke:#111;stroke-width:2;stroke-dasharray:none");
  svg.text(x.apply(zHi) - 150, y.apply(limitLawCdf(zHi)) + 16, "limit exp(-2e^-z)", "font:12px sans-serif;fill:#111");
  const colors = ["#b2182b", "#ef8a62", "#2166ac", "#67a9cf", "#1b7837"];
  doc.per_h.forEach((ph, i) => {
    const color = colors[i % colors.length];
    const pts = zs.map(
      (z) => [x.apply(z), y.apply(ph.p_at_z[String(z)] ?? ph.p_at_z[z.toFixed(1)] ?? 0)] as [
        number,
        number,
      ],
    );
    svg.polyline(pts, `stroke:${color};stroke-width:1.4;stroke-dasharray:4 3`);
    for (const [px, py] of pts) svg.circle(px, py, 3, `fill:${color};stroke:none`);
    svg.text(
      68,
      30 + 16 * i,
      `h=${ph.h}  KS=${ph.ks_distance.toFixed(3)}`,
      `font:12px sans-serif;fill:${color}`,
    );
  });
  // reference marker at z=0: the limit passes through exp(-2)
  svg.circle(x.apply(0), y.apply(limitLawCdf(0)), 4, "fill:none;stroke:#111;stroke-width:1.2");
  return svg.render();
}

/** Median sup path error against the theoretical rate, log-log, with fit. */
export function renderRateSlope(doc: RateDoc): string {
  const xs = doc.per_n.map((p) => Math.log(p.rate_value));
  const ys = doc.per_n.map((p) => Math.log(p.median_sup));
  const padX = 0.12 * (Math.max(...xs) - Math.min(...xs) || 1);
  const padY = 0.2 * (Math.max(...ys) - Math.min(...ys) || 1);
  const frame = makeFrame(
    W,
    H,
    [Math.min(...xs) - padX, Math.max(...xs) + padX],
    [Math.min(...ys) - padY, Math.max(...ys) + padY],
    "log rate value",
    "log median sup error",
  );
  const { svg, x, y } = frame;
  const [d0, d1] = [Math.min(...xs) - padX, Math.max(...xs) + padX];
  svg.polyline(
    [
      [x.apply(d0), y.apply(doc.intercept + doc.slope * d0)],
      [x.apply(d1), y.apply(doc.intercept + doc.slope * d1)],
    ],
    "stroke:#b2182b;stroke-width:1.6",
  );
  doc.per_n.forEach((p, i) => {
    svg.circle(x.apply(xs[i]), y.apply(ys[i]), 4.5, "fill:#17446b;stroke:none");
    svg.text(
      x.apply(xs[i]) + 8,
      y.apply(ys[i]) - 8,
      `n=${p.n}`,
      "font:12px sans-serif;fill:#17446b",
    );
  });
  svg.text(
    68,
    30,
    `fitted slope ${doc.slope.toFixed(3)}`,
    "font:13px sans-serif;fill:#b2182b",
  );
  return svg.render();
}
