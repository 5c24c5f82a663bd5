#!/usr/bin/env node
/**
 * Line chart of KL-divergence rate against training data size for one process
 * order: per model a solid line (true) and a dashed line (empirical), log y.
 *
 * Usage: node plotDatasize.js <benchmark.csv> <out.svg> [order]
 */
import * as fs from "fs";

import { distinct, median, numeric, readCsv, requireColumns } from "./csv";
import { DEFAULT_FRAME, LogScale, SvgDoc, colorFor, drawLegend, drawLogAxis } from "./svg";

export function renderDatasize(csvPath: string, orderFilter?: string): string {
  const table = readCsv(csvPath);
  requireColumns(table, ["order", "T", "model", "kl_true_nats", "kl_empirical_nats", "status"]);
  let rows = table.rows.filter((r) => r.status === "ok");
  const order = orderFilter ?? distinct(rows, "order")[0];
  rows = rows.filter((r) => r.order === order);
  if (rows.length === 0) {
    throw new Error(`no ok rows for order ${order}`);
  }
  const sizes = distinct(rows, "T").sort((a, b) => Number(a) - Number(b));
  const models = distinct(rows, "model");

  const cell = (size: string, model: string, column: string): number =>
    median(
      rows.filter((r) => r.T === size && r.model === model).map((r) => numeric(r, column)),
    );

  const values: number[] = [];
  for (const size of sizes) {
    for (const model of models) {
      values.push(cell(size, model, "kl_true_nats"), cell(size, model, "kl_empirical_nats"));
    }
  }

  const frame = DEFAULT_FRAME;
  const doc = new SvgDoc(frame);
  const scale = new LogScale(values, frame);
  drawLogAxis(doc, scale, "KL-divergence rate (nats)");

  const plotWidth = frame.width - frame.left - frame.right;
  const xOf = (i: number): number =>
    frame.left + plotWidth * (sizes.length === 1 ? 0.5 : 0.08 + (0.84 * i) / (sizes.length - 1));

  sizes.forEach((size, i) => {
    doc.text(xOf(i), frame.height - frame.bottom + 18, `T=${size}`,
      'text-anchor="middle" class="size-label"');
  });
  doc.text(frame.left + plotWidth / 2, frame.height - 16, "training data size",
    'text-anchor="middle"');

  models.forEach((model, mi) => {
    const color = colorFor(model, mi);
    const truePts: [number, number][] = sizes.map((s, i) => [
      xOf(i), scale.y(cell(s, model, "kl_true_nats")),
    ]);
    doc.polyline(truePts, color, `class="line line-true model-${model}"`);
    const empPts: [number, number][] = sizes.map((s, i) => [
      xOf(i), scale.y(cell(s, model, "kl_empirical_nats")),
    ]);
    doc.polyline(empPts, color,
      `stroke-dasharray="7,5" class="line line-empirical model-${model}"`);
  });
  doc.text(frame.width - frame.right - 4, frame.top - 12, `order N=${order}`,
    'text-anchor="end"');
  drawLegend(doc, models.map((m, i) => ({ label: m, color: colorFor(m, i) })));
  return doc.finish();
}

export function main(argv: string[]): number {
  if (argv.length < 2 || argv.length > 3) {
    process.stderr.write("usage: plotDatasize <benchmark.csv> <out.svg> [order]\n");
    return 2;
  }
  try {
    fs.writeFileSync(argv[1], renderDatasize(argv[0], argv[2]));
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
