/**
 * Wire types, invariants, and serialization for per-token log-probability
 * records. The JSONL layout (key names and key order) is the contamkit
 * toolkit's record format and must not drift.
 */

import type { Vocab } from "./tokenizer.js";

export interface TopEntry {
  t: string;
  lp: number;
}

export interface LogProbRecord {
  instanceId: string;
  tokens: string[];
  logprobs: number[];
  topk: TopEntry[][];
  truncated: boolean;
}

/**
 * The k most probable entries of one position's log distribution, sorted by
 * descending log-probability; equal values fall back to ascending token id.
 */
export function topEntries(dist: Float64Array, vocab: Vocab, k: number): TopEntry[] {
  const order = Array.from(dist.keys());
  order.sort((a, b) => (dist[b] !== dist[a] ? dist[b] - dist[a] : a - b));
  const width = Math.min(k, dist.length);
  const out: TopEntry[] = new Array(width);
  for (let i = 0; i < width; i++) {
    const id = order[i];
    out[i] = { t: vocab.token(id), lp: dist[id] };
  }
  return out;
}

/** Mirror of the toolkit loader's record invariants; throws on violation. */
export function validateRecord(rec: LogProbRecord): void {
  const rid = rec.instanceId;
  if (!rid) throw new Error("record has an empty instance_id");
  if (rec.tokens.length !== rec.logprobs.length) {
    throw new Error(`record ${rid}: ${rec.tokens.length} tokens but ${rec.logprobs.length} logprobs`);
  }
  if (rec.tokens.length === 0) throw new Error(`record ${rid} is empty`);
  for (let i = 0; i < rec.logprobs.length; i++) {
    const lp = rec.logprobs[i];
    if (!Number.isFinite(lp) || lp > 0) {
      throw new Error(`record ${rid} position ${i}: logprob ${lp} must be finite and <= 0`);
    }
  }
  if (rec.topk.length !== rec.tokens.length) {
    throw new Error(`record ${rid}: topk has ${rec.topk.length} positions, expected ${rec.tokens.length}`);
  }
  const width = rec.topk[0].length;
  for (let i = 0; i < rec.topk.length; i++) {
    const entries = rec.topk[i];
    if (entries.length !== width) {
      throw new Error(`record ${rid} position ${i}: topk length ${entries.length} differs from position 0 length ${width}`);
    }
    let prev = Infinity;
    for (const e of entries) {
      if (!Number.isFinite(e.lp) || e.lp > 0) {
        throw new Error(`record ${rid} position ${i}: topk logprob ${e.lp} must be finite and <= 0`);
      }
      if (e.lp > prev) {
        throw new Error(`record ${rid} position ${i}: topk logprobs not in non-increasing order`);
      }
      prev = e.lp;
    }
  }
}

/** One JSON line in the toolkit's record format; key order is part of the format. */
export function recordToLine(rec: LogProbRecord): string {
  const obj: Record<string, unknown> = {
    instance_id: rec.instanceId,
    tokens: rec.tokens,
    logprobs: rec.logprobs,
    topk: rec.topk.map((pos) => pos.map((e) => ({ t: e.t, lp: e.lp }))),
  };
  if (rec.truncated) obj.truncated = true;
  return JSON.stringify(obj);
}
