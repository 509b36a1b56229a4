/** Chunk-train-sample pipeline: one generative model per concept chunk,
 * one schema-identical CSV per concept, plus a provenance manifest. */

import fs from "node:fs";
import path from "node:path";

import { ConditionalGan, GAN_DEFAULTS, GanConfig } from "./gan.js";
import { Rng } from "./rng.js";
import {
  Column,
  Table,
  chunkByFeature,
  loadTable,
  selectDriftingFeature,
  writeTable,
} from "./table.js";

export interface AugmentJob {
  input: string;
  target: string;
  numConcepts: number;
  rowsPerConcept: number;
  epochs: number;
  batchSize: number;
  learningRate: number;
  seed: number;
  outDir: string;
}

export const JOB_DEFAULTS = {
  epochs: 300,
  batchSize: 500,
  learningRate: 0.001,
  seed: 0,
};

export interface ConceptReport {
  file: string;
  rows: number;
  training_rows: number;
  training_feature_mean: number;
  generated_feature_mean: number;
}

export interface AugmentResult {
  manifestPath: string;
  conceptPaths: string[];
  warnings: string[];
}

interface NumericScale {
  index: number;
  min: number;
  max: number;
}

function mean(values: number[]): number {
  return values.reduce((a, b) => a + b, 0) / values.length;
}

function numericScales(columns: Column[], rows: (number | string)[][]): NumericScale[] {
  const scales: NumericScale[] = [];
  columns.forEach((col, j) => {
    if (col.kind !== "numeric") return;
    let lo = Infinity;
    let hi = -Infinity;
    for (const row of rows) {
      const v = row[j] as number;
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
    scales.push({ index: j, min: lo, max: hi });
  });
  return scales;
}

function encodeRow(
  row: (number | string)[],
  scales: NumericScale[],
  catIndex: Map<number, Map<string, number>>,
  condDim: number,
): { nums: Float64Array; cond: Float64Array } {
  const nums = new Float64Array(scales.length);
  scales.forEach((s, k) => {
    const span = s.max - s.min;
    nums[k] = span > 0 ? (2 * ((row[s.index] as number) - s.min)) / span - 1 : 0;
  });
  const cond = new Float64Array(condDim);
  let offset = 0;
  for (const [j, codes] of catIndex) {
    const code = codes.get(String(row[j]));
    if (code !== undefined) cond[offset + code] = 1;
    offset += codes.size;
  }
  return { nums, cond };
}

function trainAndSample(
  columns: Column[],
  chunk: (number | string)[][],
  rowsOut: number,
  cfg: GanConfig,
  rng: Rng,
): (number | string)[][] {
  const scales = numericScales(columns, chunk);
  const catIndex = new Map<number, Map<string, number>>();
  columns.forEach((col, j) => {
    if (col.kind !== "categorical") return;
    const codes = new Map<string, number>();
    for (const row of chunk) {
      const key = String(row[j]);
      if (!codes.has(key)) codes.set(key, codes.size);
    }
    catIndex.set(j, codes);
  });
  const condDim = [...catIndex.values()].reduce((a, m) => a + m.size, 0);

  const encoded = chunk.map((row) => encodeRow(row, scales, catIndex, condDim));
  const gan = new ConditionalGan(scales.length, condDim, cfg, rng);

  const order = new Int32Array(chunk.length).map((_, i) => i);
  for (let epoch = 0; epoch < cfg.epochs; epoch++) {
    rng.shuffle(order);
    for (let at = 0; at < order.length; at += cfg.batchSize) {
      const idx = order.subarray(at, Math.min(at + cfg.batchSize, order.length));
      gan.trainBatch(
        Array.from(idx, (i) => encoded[i].nums),
        Array.from(idx, (i) => encoded[i].cond),
      );
    }
  }

  const out: (number | string)[][] = [];
  for (let r = 0; r < rowsOut; r++) {
    // training-by-sampling in reverse: condition on an empirical row's categories
    const template = chunk[rng.int(chunk.length)];
    const { cond } = encodeRow(template, scales, catIndex, condDim);
    const nums = gan.generate(cond);
    const row: (number | string)[] = new Array(columns.length);
    scales.forEach((s, k) => {
      const span = s.max - s.min;
      row[s.index] = span > 0 ? s.min + ((nums[k] + 1) / 2) * span : s.min;
    });
    columns.forEach((col, j) => {
      if (col.kind === "categorical") row[j] = template[j];
    });
    out.push(row);
  }
  return out;
}

export function augment(job: AugmentJob): AugmentResult {
  const table: Table = loadTable(job.input);
  const feature = selectDriftingFeature(table, job.target);
  const fIdx = table.columns.findIndex((c) => c.name === feature);
  const chunks = chunkByFeature(table, feature, job.numConcepts);

  // value-ordered chunking guarantees monotone training means
  const trainingMeans = chunks.map((c) => mean(c.map((r) => r[fIdx] as number)));
  for (let i = 1; i < trainingMeans.length; i++) {
    if (trainingMeans[i] < trainingMeans[i - 1]) {
      throw new Error("internal error: training chunk means not monotone");
    }
  }

  fs.mkdirSync(job.outDir, { recursive: true });
  const cfg: GanConfig = {
    ...GAN_DEFAULTS,
    epochs: job.epochs,
    batchSize: job.batchSize,
    learningRate: job.learningRate,
  };

  const warnings: string[] = [];
  const reports: ConceptReport[] = [];
  const conceptPaths: string[] = [];
  chunks.forEach((chunk, c) => {
    const rng = new Rng(job.seed * 7919 + c + 1);
    const rows = trainAndSample(table.columns, chunk, job.rowsPerConcept, cfg, rng);
    const file = path.join(job.outDir, `concept_${String(c).padStart(2, "0")}.csv`);
    writeTable(file, table.columns, rows);
    conceptPaths.push(file);
    reports.push({
      file: path.basename(file),
      rows: rows.length,
      training_rows: chunk.length,
      training_feature_mean: trainingMeans[c],
      generated_feature_mean: mean(rows.map((r) => r[fIdx] as number)),
    });
  });

  for (let i = 1; i < reports.length; i++) {
    if (reports[i].generated_feature_mean < reports[i - 1].generated_feature_mean) {
      warnings.push(
        `generated means not monotone between concept ${i - 1} and ${i} ` +
          `(${reports[i - 1].generated_feature_mean} -> ${reports[i].generated_feature_mean})`,
      );
    }
  }

  const manifest = {
    tool: "gan-concepts",
    source: job.input,
    target: job.target,
    drifting_feature: feature,
    num_concepts: job.numConcepts,
    rows_per_concept: job.rowsPerConcept,
    epochs: job.epochs,
    batch_size: job.batchSize,
    learning_rate: job.learningRate,
    seed: job.seed,
    model: {
      kind: "conditional-gan",
      z_dim: cfg.zDim,
      hidden: cfg.hidden,
      adam_beta1: 0.5,
      adam_beta2: 0.999,
    },
    schema: {
      columns: table.columns.map((c) => ({ name: c.name, kind: c.kind })),
      target: job.target,
    },
    source_rows: table.rows.length,
    source_rejected_rows: table.rejected,
    concepts: reports,
    warnings,
  };
  const manifestPath = path.join(job.outDir, "manifest.json");
  fs.writeFileSync(manifestPath, JSON.stringify(manifest, null, 2) + "\n", "utf-8");
  return { manifestPath, conceptPaths, warnings };
}
