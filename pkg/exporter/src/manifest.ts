import { mkdirSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';

/**
 * Binary interchange payload: headerless little-endian float32, row-major,
 * with all shape metadata in a key/value manifest.  This is the consuming
 * engine's native dataset format.
 */
export interface ExportMatrices {
  n: number;
  d: number;
  c: number;
  /** n*d values, row-major */
  embeddings: Float64Array | Float32Array | number[];
  /** n*c values, row-major */
  classProbs: Float64Array | Float32Array | number[];
  /** n*c values, row-major */
  rawLabelProbs: Float64Array | Float32Array | number[];
}

/** Encode as float32 little-endian regardless of platform byte order. */
export function toFloat32LE(values: ArrayLike<number>): Buffer {
  const buf = Buffer.alloc(values.length * 4);
  for (let i = 0; i < values.length; i++) {
    buf.writeFloatLE(Math.fround(values[i]), i * 4);
  }
  return buf;
}

export function writeDataset(
  matrices: ExportMatrices,
  outDir: string,
  stem = 'dataset'
): string {
  const { n, d, c } = matrices;
  if (matrices.embeddings.length !== n * d) {
    throw new Error(`embeddings length ${matrices.embeddings.length} != n*d = ${n * d}`);
  }
  if (matrices.classProbs.length !== n * c || matrices.rawLabelProbs.length !== n * c) {
    throw new Error('probability payload length does not match n*c');
  }
  mkdirSync(outDir, { recursive: true });

  const names = {
    embedding_path: `${stem}.embeddings.f32`,
    prob_path: `${stem}.class_probs.f32`,
    raw_prob_path: `${stem}.raw_label_probs.f32`,
  };
  writeFileSync(join(outDir, names.embedding_path), toFloat32LE(matrices.embeddings));
  writeFileSync(join(outDir, names.prob_path), toFloat32LE(matrices.classProbs));
  writeFileSync(join(outDir, names.raw_prob_path), toFloat32LE(matrices.rawLabelProbs));

  const manifestPath = join(outDir, `${stem}.manifest`);
  const lines = [
    `n = ${n}`,
    `d = ${d}`,
    `c = ${c}`,
    'dtype = f32le',
    'layout = row-major',
    `embedding_path = ${names.embedding_path}`,
    `prob_path = ${names.prob_path}`,
    `raw_prob_path = ${names.raw_prob_path}`,
  ];
  writeFileSync(manifestPath, lines.join('\n') + '\n');
  return manifestPath;
}
