/** Readers for the result documents emitted by the estimation CLI.
 *
 * Each loader checks the document's schema identifier and the handful of
 * fields the figures consume; anything else fails loudly so a figure never
 * renders from the wrong document kind.
 */

import { readFileSync } from "node:fs";

export type Point = [number, number];

export interface EstimateDoc {
  schema: "ridgeband/estimate/v1";
  n: number;
  h: number;
  polyline: Point[];
  starts: Point[];
}

export interface BandDoc {
  schema: "ridgeband/band/v1";
  n: number;
  h: number;
  z: number;
  c: number;
  b_h: number;
  polyline: Point[];
  radii: number[];
}

export interface GaussFieldPerH {
  h: number;
  ks_distance: number;
  p_at_z: Record<string, number>;
  limit_at_z: Record<string, number>;
}

export interface GaussFieldDoc {
  schema: "ridgeband/experiment/v1";
  kind: "gaussfield";
  c: number;
  per_h: GaussFieldPerH[];
}

export interface RatePerN {
  n: number;
  h: number;
  median_sup: number;
  rate_value: number;
}

export interface RateDoc {
  schema: "ridgeband/experiment/v1";
  kind: "mc_rate";
  slope: number;
  intercept: number;
  per_n: RatePerN[];
}

export class SchemaMismatchError extends Error {}

function loadJson(path: string): unknown {
  return JSON.parse(readFileSync(path, "utf-8"));
}

function expect(cond: boolean, message: string): asserts cond {
  if (!cond) throw new SchemaMismatchError(message);
}

function isPointArray(value: unknown): value is Point[] {
  return (
    Array.isArray(value) &&
    value.every(
      (p) => Array.isArray(p) && p.length === 2 && p.every((v) => typeof v === "number"),
    )
  );
}

export function loadEstimate(path: string): EstimateDoc {
  const doc = loadJson(path) as Record<string, unknown>;
  expect(doc.schema === "ridgeband/estimate/v1", `${path}: not an estimate document`);
  expect(typeof doc.n === "number" && typeof doc.h === "number", `${path}: missing n or h`);
  expect(isPointArray(doc.polyline), `${path}: malformed polyline`);
  expect(isPointArray(doc.starts), `${path}: malformed starts`);
  return doc as unknown as EstimateDoc;
}

export function loadBand(path: string): BandDoc {
  const doc = loadJson(path) as Record<string, unknown>;
  expect(doc.schema === "ridgeband/band/v1", `${path}: not a band document`);
  expect(isPointArray(doc.polyline), `${path}: malformed polyline`);
  expect(
    Array.isArray(doc.radii) && doc.radii.every((r) => typeof r === "number" && r > 0),
    `${path}: malformed radii`,
  );
  expect(
    (doc.radii as number[]).length === (doc.polyline as Point[]).length,
    `${path}: radii/polyline length mismatch`,
  );
  return doc as unknown as BandDoc;
}

export function loadGaussField(path: string): GaussFieldDoc {
  const doc = loadJson(path) as Record<string, unknown>;
  expect(doc.schema === "ridgeband/experiment/v1", `${path}: not an experiment document`);
  expect(doc.kind === "gaussfield", `${path}: not a gaussfield experiment`);
  expect(Array.isArray(doc.per_h) && doc.per_h.length > 0, `${path}: missing per_h`);
  for (const ph of doc.per_h as Array<Record<string, unknown>>) {
    expect(
      typeof ph.h === "number" && typeof ph.ks_distance === "number" && !!ph.p_at_z,
      `${path}: malformed per_h entry`,
    );
  }
  return doc as unknown as GaussFieldDoc;
}

export function loadRate(path: string): RateDoc {
  const doc = loadJson(path) as Record<string, unknown>;
  expect(doc.schema === "ridgeband/experiment/v1", `${path}: not an experiment document`);
  expect(doc.kind === "mc_rate", `${path}: not a rate experiment`);
  expect(typeof doc.slope === "number" && typeof doc.intercept === "number", `${path}: no fit`);
  expect(Array.isArray(doc.per_n) && doc.per_n.length >= 2, `${path}: missing per_n`);
  return doc as unknown as RateDoc;
}

export function loadPointsCsv(path: string): Point[] {
  const lines = readFileSync(path, "utf-8").split(/\r?\n/);
  const out: Point[] = [];
  lines.forEach((line, idx) => {
    if (!line.trim()) return;
    const cols = line.split(",");
    if (cols.length !== 2) throw new SchemaMismatchError(`${path}:${idx + 1}: expected 2 columns`);
    const x = Number(cols[0]);
    const y = Number(cols[1]);
    if (Number.isNaN(x) || Number.isNaN(y)) {
      if (idx === 0) return; // header line
      throw new SchemaMismatchError(`${path}:${idx + 1}: non-numeric row`);
    }
    out.push([x, y]);
  });
  if (out.length === 0) throw new SchemaMismatchError(`${path}: no data rows`);
  return out;
}

/** The limiting law of the standardized sup deviation. */
export function limitLawCdf(z: number): number {
  return Math.exp(-2.0 * Math.exp(-z));
}
