/**
 * Whitespace tokenizer and the vocabulary built over an export corpus.
 *
 * The exported records carry these tokens verbatim, so downstream tooling
 * treats them as authoritative regardless of its own tokenizer.
 */

export function tokenize(text: string): string[] {
  return text.split(/\s+/).filter((t) => t.length > 0);
}

/** Token-to-id table; ids are assigned in first-seen order and never change. */
export class Vocab {
  private readonly ids = new Map<string, number>();
  private readonly tokens: string[] = [];

  add(token: string): number {
    const existing = this.ids.get(token);
    if (existing !== undefined) return existing;
    const id = this.tokens.length;
    this.ids.set(token, id);
    this.tokens.push(token);
    return id;
  }

  id(token: string): number {
    const id = this.ids.get(token);
    if (id === undefined) throw new Error(`token ${JSON.stringify(token)} is not in the vocabulary`);
    return id;
  }

  token(id: number): string {
    return this.tokens[id];
  }

  get size(): number {
    return this.tokens.length;
  }
}

/** Build the vocabulary over every token the export will have to score. */
export function buildVocab(tokenLists: Iterable<string[]>): Vocab {
  const vocab = new Vocab();
  for (const tokens of tokenLists) {
    for (const t of tokens) vocab.add(t);
  }
  return vocab;
}
