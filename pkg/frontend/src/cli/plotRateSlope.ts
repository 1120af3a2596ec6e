// Usage: plotRateSlope <rate.json> <out.svg>
import { writeFileSync } from "node:fs";
import { loadRate } from "../data.js";
import { renderRateSlope } from "../figures.js";

const [docPath, outPath] = process.argv.slice(2);
if (!docPath || !outPath) {
  console.error("usage: plotRateSlope <rate.json> <out.svg>");
  process.exit(1);
}
try {
  writeFileSync(outPath, renderRateSlope(loadRate(docPath)), "utf-8");
  console.log(`wrote ${outPath}`);
} catch (err) {
  console.error(String(err));
  process.exit(2);
}
