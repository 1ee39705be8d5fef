#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { adapterConfigSchema, runAdapter } from "./adapter";

export interface CliIo {
  out: (line: string) => void;
  err: (line: string) => void;
}

/** Returns the process exit code: 0 on success, 1 on any fatal error. */
export function runCli(argv: string[], io: CliIo = { out: console.log, err: console.error }): number {
  const args = yargs(argv)
    .scriptName("detector-adapter")
    .usage("$0 --root <dir> --out <dir> [--conf 0.5]")
    .option("root", { type: "string", demandOption: true, describe: "dataset root with <scenario>/frames/" })
    .option("out", { type: "string", demandOption: true, describe: "directory for <scenario>.json sidecars" })
    .option("conf", { type: "number", default: 0.5, describe: "confidence threshold, in (0, 1)" })
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      throw err ?? new Error(msg);
    })
    .help();

  let parsed;
  try {
    parsed = args.parseSync();
  } catch (err) {
    io.err(`error: ${(err as Error).message}`);
    return 1;
  }
  if (parsed.help) {
    return 0;
  }

  try {
    const config = adapterConfigSchema.parse({
      root: parsed.root,
      out: parsed.out,
      confidenceThreshold: parsed.conf,
    });
    const outcomes = runAdapter(config, io.err);
    for (const o of outcomes) {
      const skipped = o.skippedFrames > 0 ? ` (${o.skippedFrames} frame(s) skipped)` : "";
      io.out(`${o.scenarioId}: ${o.detections} detection(s) over ${o.frames} frame(s)${skipped} -> ${o.outFile}`);
    }
    return 0;
  } catch (err) {
    io.err(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(runCli(hideBin(process.argv)));
}
