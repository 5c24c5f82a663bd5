/**
 * Deterministic SVG assembly: fixed styles, fixed float formatting, no
 * timestamps, so identical inputs produce identical bytes.
 */

export const MODEL_COLORS: Record<string, string> = {
  recurrent1: "#2b6cb0",
  recurrent2: "#2f855a",
  born: "#dd6b20",
};

export function colorFor(model: string, index: number): string {
  const fallback = ["#2b6cb0", "#2f855a", "#dd6b20", "#805ad5", "#b83280"];
  return MODEL_COLORS[model] ?? fallback[index % fallback.length];
}

export function fmt(x: number): string {
  return Number.isInteger(x) ? String(x) : x.toFixed(2);
}

export function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface Frame {
  width: number;
  height: number;
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export const DEFAULT_FRAME: Frame = {
  width: 720,
  height: 440,
  left: 70,
  right: 20,
  top: 30,
  bottom: 60,
};

export class SvgDoc {
  private parts: string[] = [];

  constructor(readonly frame: Frame) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${frame.width}" ` +
        `height="${frame.height}" viewBox="0 0 ${frame.width} ${frame.height}" ` +
        `font-family="Helvetica, Arial, sans-serif" font-size="12">`,
    );
    this.parts.push(`<rect width="${frame.width}" height="${frame.height}" fill="white"/>`);
  }

  raw(fragment: string): void {
    this.parts.push(fragment);
  }

  rect(x: number, y: number, w: number, h: number, fill: string, extra = ""): void {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" ` +
        `fill="${fill}"${extra ? " " + extra : ""}/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke = "#444", extra = ""): void {
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
        `stroke="${stroke}"${extra ? " " + extra : ""}/>`,
    );
  }

  polyline(points: [number, number][], stroke: string, extra = ""): void {
    const path = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${path}" fill="none" stroke="${stroke}" stroke-width="2"` +
        `${extra ? " " + extra : ""}/>`,
    );
  }

  text(x: number, y: number, content: string, extra = ""): void {
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}"${extra ? " " + extra : ""}>` +
        `${escapeXml(content)}</text>`,
    );
  }

  /** Diagonal-hatch pattern used for "empirical" (crossed) bars. */
  hatchPattern(id: string, color: string): void {
    this.parts.push(
      `<pattern id="${id}" width="6" height="6" patternUnits="userSpaceOnUse" ` +
        `patternTransform="rotate(45)">` +
        `<rect width="6" height="6" fill="white"/>` +
        `<line x1="0" y1="0" x2="0" y2="6" stroke="${color}" stroke-width="2.5"/>` +
        `</pattern>`,
    );
  }

  finish(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

/** Log-scale y mapping covering [min, max] with decade ticks. */
export class LogScale {
  readonly lo: number;
  readonly hi: number;

  constructor(values: number[], readonly frame: Frame, floor = 1e-6) {
    const positive = values.filter((v) => v > 0);
    const min = positive.length ? Math.min(...positive) : floor;
    const max = positive.length ? Math.max(...positive) : 1;
    this.lo = Math.floor(Math.log10(Math.max(min, floor)));
    this.hi = Math.ceil(Math.log10(max * 1.0001));
    if (this.hi <= this.lo) {
      this.hi = this.lo + 1;
    }
  }

  y(value: number, floor = 1e-6): number {
    const v = Math.log10(Math.max(value, floor));
    const span = this.hi - this.lo;
    const usable = this.frame.height - this.frame.top - this.frame.bottom;
    return this.frame.height - this.frame.bottom - ((v - this.lo) / span) * usable;
  }

  ticks(): number[] {
    const out: number[] = [];
    for (let d = this.lo; d <= this.hi; d += 1) {
      out.push(d);
    }
    return out;
  }
}

export function drawLogAxis(doc: SvgDoc, scale: LogScale, label: string): void {
  const f = doc.frame;
  doc.line(f.left, f.top, f.left, f.height - f.bottom);
  doc.line(f.left, f.height - f.bottom, f.width - f.right, f.height - f.bottom);
  for (const d of scale.ticks()) {
    const y = scale.y(10 ** d);
    doc.line(f.left - 4, y, f.left, y);
    doc.line(f.left, y, f.width - f.right, y, "#ddd", 'stroke-dasharray="2,4"');
    doc.text(f.left - 8, y + 4, `1e${d}`, 'text-anchor="end"');
  }
  doc.raw(
    `<text x="16" y="${fmt((f.top + f.height - f.bottom) / 2)}" text-anchor="middle" ` +
      `transform="rotate(-90 16 ${fmt((f.top + f.height - f.bottom) / 2)})">` +
      `${escapeXml(label)}</text>`,
  );
}

export function drawLegend(
  doc: SvgDoc,
  entries: { label: string; color: string; dashed?: boolean }[],
): void {
  const f = doc.frame;
  let x = f.left + 10;
  const y = f.top - 12;
  for (const entry of entries) {
    doc.line(x, y, x + 22, y, entry.color,
      `stroke-width="3"${entry.dashed ? ' stroke-dasharray="6,4"' : ""}`);
    doc.text(x + 27, y + 4, entry.label);
    x += 27 + entry.label.length * 7 + 18;
  }
}
