import { existsSync, readFileSync } from 'node:fs';

import { CorpusInvalid } from './errors.js';
import { writeDataset } from './manifest.js';
import { PromptSpec, applyTemplate, validatePromptSpec } from './prompt.js';
import type { InferenceBackend } from './backends/types.js';

export interface ExportOptions {
  corpusPath: string;
  spec: PromptSpec;
  outDir: string;
  backend: InferenceBackend;
  stem?: string;
  batchSize?: number;
}

export interface ExportResult {
  manifestPath: string;
  n: number;
  d: number;
  c: number;
  backendId: string;
}

export function readCorpus(path: string): string[] {
  if (!existsSync(path)) {
    throw new CorpusInvalid(`corpus file not found: ${path}`);
  }
  const lines = readFileSync(path, 'utf-8')
    .split(/\r?\n/)
    .map((line) => line.trim())
    .filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new CorpusInvalid(`corpus file is empty: ${path}`);
  }
  return lines;
}

function softmax(logits: number[]): number[] {
  const max = Math.max(...logits);
  const exps = logits.map((l) => Math.exp(l - max));
  const sum = exps.reduce((acc, e) => acc + e, 0);
  return exps.map((e) => e / sum);
}

/**
 * One sample per corpus line: the sentence embedding of the raw text, the
 * class distribution (softmax over label-word logits at the mask), and the
 * raw vocabulary-level probability of each label word.
 */
export async function exportCorpus(options: ExportOptions): Promise<ExportResult> {
  const { spec, backend } = options;
  validatePromptSpec(spec);
  const lines = readCorpus(options.corpusPath);
  const batchSize = options.batchSize ?? 64;

  const c = spec.verbalizer.length;
  const n = lines.length;
  const embeddings: Float32Array[] = [];
  const classProbRows: number[][] = [];
  const rawProbRows: number[][] = [];

  for (let start = 0; start < n; start += batchSize) {
    const batch = lines.slice(start, start + batchSize);
    const prompts = batch.map((line) => applyTemplate(spec.template, line));
    const vectors = await backend.embed(batch);
    const scores = await backend.scoreMask(prompts, spec.verbalizer);
    embeddings.push(...vectors);
    for (const { labelLogits, rawProbs } of scores) {
      classProbRows.push(softmax(labelLogits));
      rawProbRows.push(rawProbs.map((p) => Math.min(1, Math.max(0, p))));
    }
  }

  const d = embeddings[0].length;
  const flatEmb = new Float64Array(n * d);
  embeddings.forEach((vec, i) => flatEmb.set(vec, i * d));
  const flatClass = new Float64Array(n * c);
  classProbRows.forEach((row, i) => flatClass.set(row, i * c));
  const flatRaw = new Float64Array(n * c);
  rawProbRows.forEach((row, i) => flatRaw.set(row, i * c));

  const manifestPath = writeDataset(
    { n, d, c, embeddings: flatEmb, classProbs: flatClass, rawLabelProbs: flatRaw },
    options.outDir,
    options.stem ?? 'dataset'
  );
  return { manifestPath, n, d, c, backendId: backend.id };
}
