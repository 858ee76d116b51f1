import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { Sfc32 } from "../src/rng.js";

export function mkTmp(): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), "logprob-exporter-"));
}

export interface CorpusLine {
  id: string;
  domain: string;
  split: string;
  text: string;
  [key: string]: unknown;
}

export function writeJsonl(dir: string, name: string, rows: unknown[]): string {
  const p = path.join(dir, name);
  fs.writeFileSync(p, rows.map((r) => JSON.stringify(r) + "\n").join(""));
  return p;
}

/** Seeded synthetic corpus: word tokens drawn uniformly from a small vocab. */
export function syntheticCorpus(
  seed: number,
  n: number,
  opts: { vocab?: number; lenMin?: number; lenMax?: number } = {},
): CorpusLine[] {
  const { vocab = 80, lenMin = 8, lenMax = 40 } = opts;
  const rng = new Sfc32(seed);
  const rows: CorpusLine[] = [];
  for (let i = 0; i < n; i++) {
    const len = lenMin + rng.nextInt(lenMax - lenMin + 1);
    const words: string[] = [];
    for (let j = 0; j < len; j++) words.push(`w${rng.nextInt(vocab)}`);
    rows.push({
      id: `inst-${String(i).padStart(3, "0")}`,
      domain: "synthetic",
      split: i % 2 === 0 ? "train" : "test",
      text: words.join(" "),
    });
  }
  return rows;
}
