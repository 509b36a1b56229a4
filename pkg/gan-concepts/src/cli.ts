#!/usr/bin/env node
/** CLI wrapper: `gan-concepts augment --input data.csv --target y ...` */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { JOB_DEFAULTS, augment } from "./augment.js";

export async function main(argv: string[]): Promise<number> {
  const parser = yargs(argv)
    .scriptName("gan-concepts")
    .command(
      "augment",
      "train one generative model per concept chunk and export concept CSVs",
      (y) =>
        y
          .option("input", { type: "string", demandOption: true })
          .option("target", { type: "string", demandOption: true })
          .option("concepts", { type: "number", demandOption: true })
          .option("rows-per-concept", { type: "number", demandOption: true })
          .option("epochs", { type: "number", default: JOB_DEFAULTS.epochs })
          .option("batch-size", { type: "number", default: JOB_DEFAULTS.batchSize })
          .option("learning-rate", { type: "number", default: JOB_DEFAULTS.learningRate })
          .option("seed", { type: "number", default: JOB_DEFAULTS.seed })
          .option("out-dir", { type: "string", demandOption: true }),
    )
    .demandCommand(1)
    .strict()
    .fail((msg, err) => {
      throw err ?? new Error(msg);
    });

  const args = await parser.parse();
  const result = augment({
    input: args.input as string,
    target: args.target as string,
    numConcepts: args.concepts as number,
    rowsPerConcept: args["rows-per-concept"] as number,
    epochs: args.epochs as number,
    batchSize: args["batch-size"] as number,
    learningRate: args["learning-rate"] as number,
    seed: args.seed as number,
    outDir: args["out-dir"] as string,
  });
  for (const w of result.warnings) console.warn(`warning: ${w}`);
  console.log(
    `wrote ${result.conceptPaths.length} concept files and ${result.manifestPath}`,
  );
  return 0;
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.ts") || entry.endsWith("cli.js")) {
  main(hideBin(process.argv))
    .then((code) => process.exit(code))
    .catch((err) => {
      console.error(`error: ${err.message ?? err}`);
      process.exit(err.exitCode ?? 1);
    });
}
