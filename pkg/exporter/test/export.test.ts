import { mkdtempSync, readFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

import { beforeAll, describe, expect, it } from 'vitest';

import { createHashedBackend, hashEmbed } from '../src/backends/hashed.js';
import { CorpusInvalid } from '../src/errors.js';
import { exportCorpus, readCorpus } from '../src/export.js';
import type { ExportResult } from '../src/export.js';

const HERE = dirname(fileURLToPath(import.meta.url));
const CORPUS = join(HERE, 'fixtures', 'toy_news.txt');
const NEWS_SPEC = {
  template: '[MASK] News: <S>',
  verbalizer: ['World', 'Sports', 'Business', 'Tech'],
};

function readFloat32LE(path: string): Float32Array {
  const buf = readFileSync(path);
  const out = new Float32Array(buf.length / 4);
  for (let i = 0; i < out.length; i++) out[i] = buf.readFloatLE(i * 4);
  return out;
}

function parseManifest(path: string): Record<string, string> {
  const entries: Record<string, string> = {};
  for (const line of readFileSync(path, 'utf-8').split('\n')) {
    const trimmed = line.trim();
    if (!trimmed) continue;
    const eq = trimmed.indexOf('=');
    entries[trimmed.slice(0, eq).trim()] = trimmed.slice(eq + 1).trim();
  }
  return entries;
}

describe('hashEmbed', () => {
  it('is deterministic and unit-normalized', () => {
    const a = hashEmbed('quarterly earnings beat forecasts', 128);
    const b = hashEmbed('quarterly earnings beat forecasts', 128);
    expect(Buffer.from(a.buffer).equals(Buffer.from(b.buffer))).toBe(true);
    const norm = Math.sqrt(a.reduce((acc, v) => acc + v * v, 0));
    expect(norm).toBeCloseTo(1.0, 6);
  });

  it('maps empty text to a fixed unit vector', () => {
    const v = hashEmbed('', 16);
    expect(v[0]).toBe(1);
    expect(v.slice(1).every((x) => x === 0)).toBe(true);
  });
});

describe('exportCorpus on the 100-line toy corpus', () => {
  let outDir: string;
  let result: ExportResult;

  beforeAll(async () => {
    outDir = mkdtempSync(join(tmpdir(), 'export-'));
    result = await exportCorpus({
      corpusPath: CORPUS,
      spec: NEWS_SPEC,
      outDir,
      backend: createHashedBackend(64),
    });
  });

  it('covers every corpus line', () => {
    expect(result.n).toBe(100);
    expect(result.c).toBe(4);
    expect(result.d).toBe(64);
  });

  it('declares shapes that match payload byte lengths', () => {
    const manifest = parseManifest(result.manifestPath);
    expect(manifest.dtype).toBe('f32le');
    expect(manifest.layout).toBe('row-major');
    const embBytes = readFileSync(join(outDir, manifest.embedding_path)).length;
    expect(embBytes).toBe(100 * 64 * 4);
    const probBytes = readFileSync(join(outDir, manifest.prob_path)).length;
    expect(probBytes).toBe(100 * 4 * 4);
  });

  it('writes class probability rows that sum to one within 1e-5', () => {
    const manifest = parseManifest(result.manifestPath);
    const probs = readFloat32LE(join(outDir, manifest.prob_path));
    for (let row = 0; row < 100; row++) {
      let sum = 0;
      for (let j = 0; j < 4; j++) sum += probs[row * 4 + j];
      expect(Math.abs(sum - 1)).toBeLessThanOrEqual(1e-5);
      for (let j = 0; j < 4; j++) expect(probs[row * 4 + j]).toBeGreaterThanOrEqual(0);
    }
  });

  it('writes raw label probabilities inside [0, 1], unnormalized', () => {
    const manifest = parseManifest(result.manifestPath);
    const raw = readFloat32LE(join(outDir, manifest.raw_prob_path));
    let sawSubUnitRow = false;
    for (let row = 0; row < 100; row++) {
      let sum = 0;
      for (let j = 0; j < 4; j++) {
        const v = raw[row * 4 + j];
        expect(v).toBeGreaterThanOrEqual(0);
        expect(v).toBeLessThanOrEqual(1);
        sum += v;
      }
      if (sum < 0.999) sawSubUnitRow = true;
    }
    expect(sawSubUnitRow).toBe(true);
  });

  it('re-exports byte-identically', async () => {
    const again = mkdtempSync(join(tmpdir(), 'export-again-'));
    const rerun = await exportCorpus({
      corpusPath: CORPUS,
      spec: NEWS_SPEC,
      outDir: again,
      backend: createHashedBackend(64),
    });
    const first = parseManifest(result.manifestPath);
    const second = parseManifest(rerun.manifestPath);
    for (const key of ['embedding_path', 'prob_path', 'raw_prob_path'] as const) {
      const a = readFileSync(join(outDir, first[key]));
      const b = readFileSync(join(again, second[key]));
      expect(a.equals(b)).toBe(true);
    }
  });

  it('produces distinguishable class distributions across topics', () => {
    const manifest = parseManifest(result.manifestPath);
    const probs = readFloat32LE(join(outDir, manifest.prob_path));
    const argmaxes = new Set<number>();
    for (let row = 0; row < 100; row++) {
      let best = 0;
      for (let j = 1; j < 4; j++) {
        if (probs[row * 4 + j] > probs[row * 4 + best]) best = j;
      }
      argmaxes.add(best);
    }
    expect(argmaxes.size).toBeGreaterThan(1);
  });
});

describe('readCorpus', () => {
  it('rejects a missing file', () => {
    expect(() => readCorpus('/nonexistent/corpus.txt')).toThrow(CorpusInvalid);
  });
});
