// Usage: plotGumbelFit <gaussfield.json> <out.svg>
import { writeFileSync } from "node:fs";
import { loadGaussField } from "../data.js";
import { renderGumbelFit } from "../figures.js";

const [docPath, outPath] = process.argv.slice(2);
if (!docPath || !outPath) {
  console.error("usage: plotGumbelFit <gaussfield.json> <out.svg>");
  process.exit(1);
}
try {
  writeFileSync(outPath, renderGumbelFit(loadGaussField(docPath)), "utf-8");
  console.log(`wrote ${outPath}`);
} catch (err) {
  console.error(String(err));
  process.exit(2);
}
