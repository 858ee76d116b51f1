/**
 * Small feed-forward causal LM used as a deterministic stand-in for an
 * external neural model.
 *
 * The last `contextSize` token embeddings are concatenated, passed through
 * one tanh layer, and a linear head produces logits over the vocabulary.
 * The head bias is set to smoothed corpus log-unigrams so the distribution
 * reflects the data without a training loop. All weights come from an sfc32
 * stream seeded by the model identifier, so the same identifier over the
 * same corpus always yields bit-identical outputs.
 */

import { Sfc32, fnv1a } from "./rng.js";
import type { Vocab } from "./tokenizer.js";

export interface ModelPreset {
  embedDim: number;
  hiddenDim: number;
  contextSize: number;
}

export const PRESETS: Record<string, ModelPreset> = {
  tiny: { embedDim: 12, hiddenDim: 24, contextSize: 3 },
  base: { embedDim: 24, hiddenDim: 48, contextSize: 5 },
};

/**
 * Map an identifier like "tiny" or "tiny#v2" to its architecture preset.
 * Anything after "#" only salts the weight seed.
 */
export function resolvePreset(identifier: string): ModelPreset {
  const name = identifier.split("#", 1)[0];
  const preset = PRESETS[name];
  if (!preset) {
    throw new Error(
      `unknown model identifier ${JSON.stringify(identifier)}; ` +
        `expected one of: ${Object.keys(PRESETS).join(", ")} (optionally with a #salt suffix)`,
    );
  }
  return preset;
}

function fill(rng: Sfc32, n: number, scale: number): Float64Array {
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) out[i] = rng.gaussian() * scale;
  return out;
}

export class FfnnLm {
  readonly vocab: Vocab;
  readonly preset: ModelPreset;
  private readonly bosId: number; // extra embedding row for left padding
  private readonly embedding: Float64Array; // (vocabSize + 1, embedDim)
  private readonly hiddenW: Float64Array; // (hiddenDim, contextSize * embedDim)
  private readonly hiddenB: Float64Array; // (hiddenDim,)
  private readonly headW: Float64Array; // (vocabSize, hiddenDim)
  private readonly headB: Float64Array; // (vocabSize,)

  private constructor(
    vocab: Vocab,
    preset: ModelPreset,
    embedding: Float64Array,
    hiddenW: Float64Array,
    hiddenB: Float64Array,
    headW: Float64Array,
    headB: Float64Array,
  ) {
    this.vocab = vocab;
    this.preset = preset;
    this.bosId = vocab.size;
    this.embedding = embedding;
    this.hiddenW = hiddenW;
    this.hiddenB = hiddenB;
    this.headW = headW;
    this.headB = headB;
  }

  /**
   * Instantiate weights for an identifier over a vocabulary; `counts[v]` is
   * the corpus frequency of token v and shapes the head bias.
   */
  static build(identifier: string, vocab: Vocab, counts: Float64Array): FfnnLm {
    const preset = resolvePreset(identifier);
    const v = vocab.size;
    if (v < 1) throw new Error("cannot build a model over an empty vocabulary");
    if (counts.length !== v) {
      throw new Error(`counts has ${counts.length} entries, expected ${v}`);
    }
    const { embedDim, hiddenDim, contextSize } = preset;
    const rng = new Sfc32(fnv1a(identifier));
    const embedding = fill(rng, (v + 1) * embedDim, 0.5);
    const hiddenW = fill(rng, hiddenDim * contextSize * embedDim, 1 / Math.sqrt(contextSize * embedDim));
    const hiddenB = new Float64Array(hiddenDim);
    const headW = fill(rng, v * hiddenDim, 1 / Math.sqrt(hiddenDim));
    // add-0.5 smoothed log-unigrams keep every token reachable
    const headB = new Float64Array(v);
    let total = 0;
    for (let i = 0; i < v; i++) total += counts[i];
    const denom = total + 0.5 * v;
    for (let i = 0; i < v; i++) headB[i] = Math.log((counts[i] + 0.5) / denom);
    return new FfnnLm(vocab, preset, embedding, hiddenW, hiddenB, headW, headB);
  }

  /**
   * Natural-log distribution over the vocabulary for position `pos`,
   * conditioned on the BOS-padded previous `contextSize` ids. Every entry
   * is finite and <= 0 because the max logit contributes exactly exp(0)
   * to the normalizer.
   */
  positionLogProbs(ids: Int32Array, pos: number, out: Float64Array): void {
    const { embedDim, hiddenDim, contextSize } = this.preset;
    const v = this.vocab.size;
    const ctxDim = contextSize * embedDim;
    const ctx = new Float64Array(ctxDim);
    for (let c = 0; c < contextSize; c++) {
      const p = pos - contextSize + c;
      const id = p >= 0 ? ids[p] : this.bosId;
      ctx.set(this.embedding.subarray(id * embedDim, (id + 1) * embedDim), c * embedDim);
    }
    const hidden = new Float64Array(hiddenDim);
    for (let j = 0; j < hiddenDim; j++) {
      let acc = this.hiddenB[j];
      const row = j * ctxDim;
      for (let m = 0; m < ctxDim; m++) acc += this.hiddenW[row + m] * ctx[m];
      hidden[j] = Math.tanh(acc);
    }
    let max = -Infinity;
    for (let t = 0; t < v; t++) {
      let acc = this.headB[t];
      const row = t * hiddenDim;
      for (let j = 0; j < hiddenDim; j++) acc += this.headW[row + j] * hidden[j];
      out[t] = acc;
      if (acc > max) max = acc;
    }
    let sumExp = 0;
    for (let t = 0; t < v; t++) sumExp += Math.exp(out[t] - max);
    const logZ = max + Math.log(sumExp);
    for (let t = 0; t < v; t++) out[t] -= logZ;
  }
}
