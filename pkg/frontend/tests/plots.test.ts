import assert = require("node:assert");
import { test } from "node:test";
import * as fs from "fs";
import * as path from "path";
import * as os from "os";

import { renderOrders, main as ordersMain } from "../src/plotOrders";
import { renderDatasize, main as datasizeMain } from "../src/plotDatasize";
import { renderGradients, main as gradientsMain } from "../src/plotGradients";
import { readCsv, requireColumns, median } from "../src/csv";

const FIXTURES = path.join(__dirname, "..", "..", "tests", "fixtures");
const BENCH = path.join(FIXTURES, "benchmark_orders.csv");
const SIZES = path.join(FIXTURES, "benchmark_sizes.csv");
const GRADSCAN = path.join(FIXTURES, "gradscan.csv");

function tmpFile(name: string): string {
  return path.join(fs.mkdtempSync(path.join(os.tmpdir(), "qseq-plots-")), name);
}

function count(haystack: string, pattern: RegExp): number {
  return (haystack.match(pattern) ?? []).length;
}

test("orders chart renders 6 groups x 3 models with paired bars", () => {
  const svg = renderOrders(BENCH);
  assert.ok(svg.startsWith("<svg"));
  assert.strictEqual(count(svg, /class="group-label"/g), 6);
  assert.strictEqual(count(svg, /bar bar-true/g), 18);
  assert.strictEqual(count(svg, /bar bar-empirical/g), 18);
  for (const model of ["recurrent1", "recurrent2", "born"]) {
    assert.strictEqual(count(svg, new RegExp(`bar bar-true model-${model}`, "g")), 6);
  }
  assert.ok(svg.includes("KL-divergence rate (nats)"));
  assert.ok(count(svg, /1e-?\d+</g) >= 2, "log-scale decade labels present");
});

test("orders chart is deterministic and written by main", () => {
  const out = tmpFile("orders.svg");
  assert.strictEqual(ordersMain([BENCH, out]), 0);
  const first = fs.readFileSync(out);
  assert.ok(first.length > 0);
  assert.strictEqual(ordersMain([BENCH, out]), 0);
  assert.deepStrictEqual(fs.readFileSync(out), first);
});

test("orders chart fails loudly on a missing column", () => {
  const broken = tmpFile("broken.csv");
  const rows = fs.readFileSync(BENCH, "utf-8").trim().split("\n");
  const cut = rows.map((line) => line.split(",").slice(0, 5).join(","));
  fs.writeFileSync(broken, cut.join("\n") + "\n");
  try {
    renderOrders(broken);
    assert.fail("expected missing-column error");
  } catch (err) {
    assert.match((err as Error).message, /missing column: kl_/);
  }
  const out = tmpFile("broken.svg");
  assert.notStrictEqual(ordersMain([broken, out]), 0);
});

test("datasize chart renders two lines per model over the size grid", () => {
  const svg = renderDatasize(SIZES, "5");
  assert.strictEqual(count(svg, /line line-true/g), 3);
  assert.strictEqual(count(svg, /line line-empirical/g), 3);
  assert.strictEqual(count(svg, /class="size-label"/g), 3);
  assert.ok(svg.includes("T=500") && svg.includes("T=5000") && svg.includes("T=50000"));
  assert.ok(svg.includes("order N=5"));
  const dashed = count(svg, /stroke-dasharray="7,5"/g);
  assert.strictEqual(dashed, 3, "empirical lines are dashed");
});

test("datasize chart defaults to the first order and is deterministic", () => {
  const out = tmpFile("sizes.svg");
  assert.strictEqual(datasizeMain([SIZES, out]), 0);
  const first = fs.readFileSync(out);
  assert.strictEqual(datasizeMain([SIZES, out]), 0);
  assert.deepStrictEqual(fs.readFileSync(out), first);
  assert.notStrictEqual(datasizeMain([SIZES, out, "99"]), 0); // absent order
});

test("gradient histogram overlays one series per model", () => {
  const svg = renderGradients(GRADSCAN);
  const models = new Set(
    readCsv(GRADSCAN).rows.map((r) => r.model),
  );
  assert.strictEqual(count(svg, /<g class="hist model-/g), models.size);
  for (const model of models) {
    assert.ok(count(svg, new RegExp(`hist-bar model-${model}`, "g")) > 0);
  }
  assert.ok(svg.includes("gradient magnitude"));
});

test("gradient histogram deterministic output via main", () => {
  const out = tmpFile("grad.svg");
  assert.strictEqual(gradientsMain([GRADSCAN, out]), 0);
  const first = fs.readFileSync(out);
  assert.strictEqual(gradientsMain([GRADSCAN, out]), 0);
  assert.deepStrictEqual(fs.readFileSync(out), first);
});

test("csv helpers: schema check and median", () => {
  const table = readCsv(BENCH);
  requireColumns(table, ["order", "model"]);
  assert.throws(() => requireColumns(table, ["nonexistent"]), /missing column: nonexistent/);
  assert.strictEqual(median([3, 1, 2]), 2);
  assert.strictEqual(median([4, 1, 2, 3]), 2.5);
});

test("usage errors return exit code 2", () => {
  assert.strictEqual(ordersMain([]), 2);
  assert.strictEqual(datasizeMain(["only-one"]), 2);
  assert.strictEqual(gradientsMain(["a", "b", "c"]), 2);
});
