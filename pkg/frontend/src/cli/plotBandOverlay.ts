// Usage: plotBandOverlay <points.csv> <estimate.json> <band.json> <out.svg>
import { writeFileSync } from "node:fs";
import { loadBand, loadEstimate, loadPointsCsv } from "../data.js";
import { renderBandOverlay } from "../figures.js";

const [pointsPath, estimatePath, bandPath, outPath] = process.argv.slice(2);
if (!pointsPath || !estimatePath || !bandPath || !outPath) {
  console.error("usage: plotBandOverlay <points.csv> <estimate.json> <band.json> <out.svg>");
  process.exit(1);
}
try {
  const svg = renderBandOverlay(loadPointsCsv(pointsPath), loadEstimate(estimatePath), loadBand(bandPath));
  writeFileSync(outPath, svg, "utf-8");
  console.log(`wrote ${outPath}`);
} catch (err) {
  console.error(String(err));
  process.exit(2);
}
