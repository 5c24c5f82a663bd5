#!/usr/bin/env node
/**
 * Overlaid histograms of gradient magnitudes per model from a gradient-scan
 * CSV (columns model, init, magnitude); shared linear bins, translucent fills.
 *
 * Usage: node plotGradients.js <gradscan.csv> <out.svg>
 */
import * as fs from "fs";

import { distinct, numeric, readCsv, requireColumns } from "./csv";
import { DEFAULT_FRAME, SvgDoc, colorFor, drawLegend, fmt } from "./svg";

const BINS = 20;

export function renderGradients(csvPath: string): string {
  const table = readCsv(csvPath);
  requireColumns(table, ["model", "init", "magnitude"]);
  const models = distinct(table.rows, "model");
  if (table.rows.length === 0) {
    throw new Error("no rows in gradient-scan CSV");
  }
  const magnitudes = table.rows.map((r) => numeric(r, "magnitude"));
  const maxMag = Math.max(...magnitudes, 1e-12);
  const binWidth = maxMag / BINS;

  const histogram = (model: string): number[] => {
    const counts = new Array(BINS).fill(0);
    for (const row of table.rows) {
      if (row.model !== model) continue;
      const k = Math.min(Math.floor(numeric(row, "magnitude") / binWidth), BINS - 1);
      counts[k] += 1;
    }
    return counts;
  };

  const hists = models.map(histogram);
  const maxCount = Math.max(...hists.flat(), 1);

  const frame = DEFAULT_FRAME;
  const doc = new SvgDoc(frame);
  const plotWidth = frame.width - frame.left - frame.right;
  const plotHeight = frame.height - frame.top - frame.bottom;
  const baseline = frame.height - frame.bottom;

  doc.line(frame.left, frame.top, frame.left, baseline);
  doc.line(frame.left, baseline, frame.width - frame.right, baseline);
  for (let tick = 0; tick <= 4; tick += 1) {
    const count = (maxCount * tick) / 4;
    const y = baseline - (plotHeight * tick) / 4;
    doc.line(frame.left - 4, y, frame.left, y);
    doc.text(frame.left - 8, y + 4, fmt(count), 'text-anchor="end"');
  }
  for (let tick = 0; tick <= 4; tick += 1) {
    const x = frame.left + (plotWidth * tick) / 4;
    doc.text(x, baseline + 18, ((maxMag * tick) / 4).toExponential(1), 'text-anchor="middle"');
  }
  doc.text(frame.left + plotWidth / 2, frame.height - 16, "gradient magnitude",
    'text-anchor="middle"');
  doc.raw(
    `<text x="16" y="${fmt(frame.top + plotHeight / 2)}" text-anchor="middle" ` +
      `transform="rotate(-90 16 ${fmt(frame.top + plotHeight / 2)})">count</text>`,
  );

  models.forEach((model, mi) => {
    const color = colorFor(model, mi);
    const counts = hists[mi];
    doc.raw(`<g class="hist model-${model}" fill="${color}" fill-opacity="0.45">`);
    counts.forEach((count, k) => {
      if (count === 0) return;
      const x = frame.left + (plotWidth * k) / BINS;
      const h = (plotHeight * count) / maxCount;
      doc.rect(x, baseline - h, plotWidth / BINS - 1, h, color,
        `fill-opacity="0.45" class="hist-bar model-${model}" stroke="${color}"`);
    });
    doc.raw("</g>");
  });
  drawLegend(doc, models.map((m, i) => ({ label: m, color: colorFor(m, i) })));
  return doc.finish();
}

export function main(argv: string[]): number {
  if (argv.length !== 2) {
    process.stderr.write("usage: plotGradients <gradscan.csv> <out.svg>\n");
    return 2;
  }
  try {
    fs.writeFileSync(argv[1], renderGradients(argv[0]));
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
