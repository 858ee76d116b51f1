/**
 * Export pipeline: instance JSONL in, per-token log-probability record
 * JSONL out, one record per instance in input order.
 */

import * as fs from "node:fs";
import * as zlib from "node:zlib";
import { z } from "zod";

import { FfnnLm } from "./model.js";
import { LogProbRecord, recordToLine, topEntries, validateRecord } from "./records.js";
import { buildVocab, tokenize } from "./tokenizer.js";

export const exportConfigSchema = z.object({
  model: z.string().min(1).default("tiny"),
  device: z.literal("cpu").default("cpu"),
  // covers the widest top-k distribution the downstream metrics consume
  kRecord: z.number().int().min(1).default(25),
  maxSeqLen: z.number().int().min(1).default(512),
  batchSize: z.number().int().min(1).default(8),
});

export type ExportConfig = z.infer<typeof exportConfigSchema>;

export function makeConfig(overrides: Partial<ExportConfig> = {}): ExportConfig {
  return exportConfigSchema.parse(overrides);
}

const instanceSchema = z.looseObject({
  id: z.string().min(1),
  domain: z.string(),
  split: z.enum(["train", "validation", "test"]),
  text: z.string(),
});

export type ExportInstance = z.infer<typeof instanceSchema>;

function readText(path: string): string {
  const raw = fs.readFileSync(path);
  const bytes = path.endsWith(".gz") ? zlib.gunzipSync(raw) : raw;
  return bytes.toString("utf-8");
}

function writeText(path: string, text: string): void {
  const bytes = Buffer.from(text, "utf-8");
  fs.writeFileSync(path, path.endsWith(".gz") ? zlib.gzipSync(bytes) : bytes);
}

/** Parse instance JSONL (optionally gzipped); blank lines are skipped. */
export function readInstances(path: string): ExportInstance[] {
  const instances: ExportInstance[] = [];
  const lines = readText(path).split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch (err) {
      throw new Error(`${path} line ${i + 1}: invalid JSON (${(err as Error).message})`);
    }
    const parsed = instanceSchema.safeParse(obj);
    if (!parsed.success) {
      const issue = parsed.error.issues[0];
      throw new Error(`${path} line ${i + 1}: ${issue.path.join(".")}: ${issue.message}`);
    }
    instances.push(parsed.data);
  }
  return instances;
}

/**
 * Score every instance under the configured model. Each record carries, per
 * token position, the log-probability of the actual token given its context
 * plus the top-kRecord slice of the same distribution. Instances longer
 * than maxSeqLen are truncated and flagged. Inference runs in batches of
 * batchSize but output order always matches input order.
 */
export function exportRecords(instances: ExportInstance[], config: ExportConfig): LogProbRecord[] {
  const tokenLists = instances.map((inst) => {
    const tokens = tokenize(inst.text);
    if (tokens.length === 0) {
      throw new Error(`instance ${JSON.stringify(inst.id)} has no tokens; records need at least one`);
    }
    return tokens;
  });
  const vocab = buildVocab(tokenLists);
  const counts = new Float64Array(vocab.size);
  for (const tokens of tokenLists) {
    for (const t of tokens) counts[vocab.id(t)] += 1;
  }
  const model = FfnnLm.build(config.model, vocab, counts);

  const records: LogProbRecord[] = [];
  const dist = new Float64Array(vocab.size);
  for (let start = 0; start < instances.length; start += config.batchSize) {
    const stop = Math.min(start + config.batchSize, instances.length);
    for (let n = start; n < stop; n++) {
      const truncated = tokenLists[n].length > config.maxSeqLen;
      const tokens = truncated ? tokenLists[n].slice(0, config.maxSeqLen) : tokenLists[n];
      const ids = Int32Array.from(tokens, (t) => vocab.id(t));
      const logprobs: number[] = new Array(tokens.length);
      const topk: LogProbRecord["topk"] = new Array(tokens.length);
      for (let pos = 0; pos < tokens.length; pos++) {
        model.positionLogProbs(ids, pos, dist);
        logprobs[pos] = dist[ids[pos]];
        topk[pos] = topEntries(dist, vocab, config.kRecord);
      }
      const record: LogProbRecord = {
        instanceId: instances[n].id,
        tokens,
        logprobs,
        topk,
        truncated,
      };
      validateRecord(record);
      records.push(record);
    }
  }
  return records;
}

/** Serialize records as JSONL (gzipped when the path ends in .gz). */
export function writeRecordsFile(records: LogProbRecord[], path: string): void {
  writeText(path, records.map((r) => recordToLine(r) + "\n").join(""));
}

/** Full pipeline over files; returns the number of records written. */
export function runExport(instancesPath: string, outPath: string, config: ExportConfig): number {
  const instances = readInstances(instancesPath);
  const records = exportRecords(instances, config);
  writeRecordsFile(records, outPath);
  return records.length;
}
