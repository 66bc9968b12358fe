import { MASK_PLACEHOLDER } from '../prompt.js';
import type { InferenceBackend, MaskScores } from './types.js';

/**
 * Deterministic offline backend: signed character-trigram feature hashing
 * for embeddings, cosine similarity against hashed label-word vectors for
 * mask scores.  No model downloads, byte-exact across runs and platforms,
 * which makes it the backend of record for tests and air-gapped use.
 */

const LOGIT_SCALE = 4.0;

function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

export function hashEmbed(text: string, dims: number): Float32Array {
  const padded = `${text.toLowerCase()}`;
  const acc = new Float64Array(dims);
  for (let i = 0; i + 3 <= padded.length; i++) {
    const h = fnv1a(padded.slice(i, i + 3));
    const sign = (h & 0x80000000) !== 0 ? -1 : 1;
    acc[h % dims] += sign;
  }
  let norm = 0;
  for (let i = 0; i < dims; i++) norm += acc[i] * acc[i];
  norm = Math.sqrt(norm);
  const out = new Float32Array(dims);
  if (norm === 0) {
    out[0] = 1;
    return out;
  }
  for (let i = 0; i < dims; i++) out[i] = Math.fround(acc[i] / norm);
  return out;
}

function cosine(a: Float32Array, b: Float32Array): number {
  let dot = 0;
  let na = 0;
  let nb = 0;
  for (let i = 0; i < a.length; i++) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (Math.sqrt(na) * Math.sqrt(nb));
}

export function createHashedBackend(dims = 256): InferenceBackend {
  return {
    id: `hashed-trigram-${dims}`,
    dims,

    async embed(texts: string[]): Promise<Float32Array[]> {
      return texts.map((t) => hashEmbed(t, dims));
    },

    async scoreMask(prompts: string[], labelWords: string[]): Promise<MaskScores[]> {
      const wordVectors = labelWords.map((w) => hashEmbed(w, dims));
      // vocabulary mass not covered by the label words; keeps raw
      // probabilities strictly below 1 and unnormalized across classes
      const filler = Math.exp(LOGIT_SCALE);
      return prompts.map((prompt) => {
        const context = prompt.split(MASK_PLACEHOLDER).join(' ');
        const contextVector = hashEmbed(context, dims);
        const labelLogits = wordVectors.map(
          (wv) => LOGIT_SCALE * cosine(contextVector, wv)
        );
        const expSum = labelLogits.reduce((acc, l) => acc + Math.exp(l), 0);
        const rawProbs = labelLogits.map((l) => Math.exp(l) / (expSum + filler));
        return { labelLogits, rawProbs };
      });
    },
  };
}
