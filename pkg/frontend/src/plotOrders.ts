#!/usr/bin/env node
/**
 * Grouped bar chart of KL-divergence rates per process order: one group per
 * order, one bar pair per model (true = solid, empirical = hatched), log y.
 *
 * Usage: node plotOrders.js <benchmark.csv> <out.svg>
 */
import * as fs from "fs";

import { distinct, median, numeric, readCsv, requireColumns } from "./csv";
import { DEFAULT_FRAME, LogScale, SvgDoc, colorFor, drawLegend, drawLogAxis } from "./svg";

export function renderOrders(csvPath: string): string {
  const table = readCsv(csvPath);
  requireColumns(table, ["order", "model", "kl_true_nats", "kl_empirical_nats", "status"]);
  const rows = table.rows.filter((r) => r.status === "ok");
  if (rows.length === 0) {
    throw new Error("no ok rows in benchmark CSV");
  }
  const orders = distinct(rows, "order").sort((a, b) => Number(a) - Number(b));
  const models = distinct(rows, "model");

  // median over replicas per (order, model)
  const cell = (order: string, model: string, column: string): number =>
    median(
      rows
        .filter((r) => r.order === order && r.model === model)
        .map((r) => numeric(r, column)),
    );

  const values: number[] = [];
  for (const order of orders) {
    for (const model of models) {
      values.push(cell(order, model, "kl_true_nats"), cell(order, model, "kl_empirical_nats"));
    }
  }

  const frame = DEFAULT_FRAME;
  const doc = new SvgDoc(frame);
  const scale = new LogScale(values, frame);
  models.forEach((model, i) => doc.hatchPattern(`hatch-${model}`, colorFor(model, i)));
  drawLogAxis(doc, scale, "KL-divergence rate (nats)");

  const plotWidth = frame.width - frame.left - frame.right;
  const groupWidth = plotWidth / orders.length;
  const barWidth = (groupWidth * 0.8) / (models.length * 2);
  const baseline = frame.height - frame.bottom;

  orders.forEach((order, gi) => {
    const groupLeft = frame.left + gi * groupWidth + groupWidth * 0.1;
    models.forEach((model, mi) => {
      const color = colorFor(model, mi);
      const pairLeft = groupLeft + mi * 2 * barWidth;
      const trueY = scale.y(cell(order, model, "kl_true_nats"));
      doc.rect(pairLeft, trueY, barWidth, baseline - trueY, color,
        `class="bar bar-true model-${model}" stroke="${color}"`);
      const empY = scale.y(cell(order, model, "kl_empirical_nats"));
      doc.rect(pairLeft + barWidth, empY, barWidth, baseline - empY, `url(#hatch-${model})`,
        `class="bar bar-empirical model-${model}" stroke="${color}"`);
    });
    doc.text(frame.left + gi * groupWidth + groupWidth / 2, baseline + 18,
      `N=${order}`, 'text-anchor="middle" class="group-label"');
  });
  doc.text(frame.left + plotWidth / 2, frame.height - 16, "process order",
    'text-anchor="middle"');
  drawLegend(doc, models.map((m, i) => ({ label: m, color: colorFor(m, i) })));
  return doc.finish();
}

export function main(argv: string[]): number {
  if (argv.length !== 2) {
    process.stderr.write("usage: plotOrders <benchmark.csv> <out.svg>\n");
    return 2;
  }
  try {
    fs.writeFileSync(argv[1], renderOrders(argv[0]));
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
