#!/usr/bin/env node
/**
 * Command line wrapper; flags mirror the export config one to one.
 *
 * Exit codes: 0 success, 2 usage error, 1 any load or export failure.
 */

import * as path from "node:path";
import { parseArgs } from "node:util";
import { fileURLToPath } from "node:url";
import { ZodError } from "zod";

import { makeConfig, runExport } from "./export.js";

const USAGE = `usage: logprob-export --instances <corpus.jsonl> --out <records.jsonl>
                      [--model tiny] [--device cpu] [--k-record 25]
                      [--max-seq-len 512] [--batch-size 8]

Scores each instance with the configured model and writes one log-probability
record per instance, in input order, in contamkit's record JSONL format.
Paths ending in .gz are read/written gzip-compressed.`;

function parseIntFlag(name: string, value: string): number {
  const n = Number(value);
  if (!Number.isInteger(n)) throw new RangeError(`--${name} must be an integer, got ${JSON.stringify(value)}`);
  return n;
}

export function main(argv: string[]): number {
  let args;
  try {
    args = parseArgs({
      args: argv,
      options: {
        instances: { type: "string" },
        out: { type: "string" },
        model: { type: "string" },
        device: { type: "string" },
        "k-record": { type: "string" },
        "max-seq-len": { type: "string" },
        "batch-size": { type: "string" },
        help: { type: "boolean", default: false },
      },
      allowPositionals: false,
    }).values;
  } catch (err) {
    console.error(`usage error: ${(err as Error).message}`);
    console.error(USAGE);
    return 2;
  }
  if (args.help) {
    console.log(USAGE);
    return 0;
  }
  if (!args.instances || !args.out) {
    console.error("usage error: --instances and --out are required");
    console.error(USAGE);
    return 2;
  }
  try {
    const config = makeConfig({
      ...(args.model !== undefined && { model: args.model }),
      ...(args.device !== undefined && { device: args.device as "cpu" }),
      ...(args["k-record"] !== undefined && { kRecord: parseIntFlag("k-record", args["k-record"]) }),
      ...(args["max-seq-len"] !== undefined && { maxSeqLen: parseIntFlag("max-seq-len", args["max-seq-len"]) }),
      ...(args["batch-size"] !== undefined && { batchSize: parseIntFlag("batch-size", args["batch-size"]) }),
    });
    const count = runExport(args.instances, args.out, config);
    console.log(`wrote ${count} records to ${args.out}`);
    return 0;
  } catch (err) {
    if (err instanceof RangeError || err instanceof ZodError) {
      const message =
        err instanceof ZodError
          ? err.issues.map((i) => `${i.path.join(".")}: ${i.message}`).join("; ")
          : err.message;
      console.error(`usage error: ${message}`);
      return 2;
    }
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

// argv check keeps the module importable from tests without side effects
if (process.argv[1] && fileURLToPath(import.meta.url) === path.resolve(process.argv[1])) {
  process.exit(main(process.argv.slice(2)));
}
