import { ModelLoadFailure, TemplateInvalid } from '../errors.js';
import { MASK_PLACEHOLDER } from '../prompt.js';
import type { InferenceBackend, MaskScores } from './types.js';

export interface TransformersBackendOptions {
  /** sentence-encoder model id (feature extraction, mean pooled) */
  embedModel?: string;
  /** masked language model id used for mask scoring */
  mlmModel?: string;
}

const DEFAULT_EMBED_MODEL = 'Xenova/all-MiniLM-L6-v2';
const DEFAULT_MLM_MODEL = 'Xenova/distilroberta-base';

/**
 * Real-model backend on top of @huggingface/transformers (optional peer
 * dependency).  Embeddings come from a mean-pooled sentence encoder; mask
 * scores are the MLM logits of each label word at the mask position, with
 * raw probabilities read off the full-vocabulary softmax.  Requires either
 * network access to the model hub or a local model cache.
 */
export async function createTransformersBackend(
  options: TransformersBackendOptions = {}
): Promise<InferenceBackend> {
  let hf: any;
  try {
    // @ts-ignore optional peer dependency, resolved only at runtime
    hf = await import('@huggingface/transformers');
  } catch (err) {
    throw new ModelLoadFailure(
      `@huggingface/transformers is not available (install it to use this backend): ${String(err)}`
    );
  }

  const embedModel = options.embedModel ?? DEFAULT_EMBED_MODEL;
  const mlmModel = options.mlmModel ?? DEFAULT_MLM_MODEL;

  let extractor: any;
  let tokenizer: any;
  let model: any;
  try {
    extractor = await hf.pipeline('feature-extraction', embedModel);
    tokenizer = await hf.AutoTokenizer.from_pretrained(mlmModel);
    model = await hf.AutoModelForMaskedLM.from_pretrained(mlmModel);
  } catch (err) {
    throw new ModelLoadFailure(
      `cannot load models (${embedModel}, ${mlmModel}): ${String(err)}`
    );
  }

  const maskToken: string = tokenizer.mask_token;
  const maskTokenId: number = tokenizer.mask_token_id;

  function singleTokenId(word: string): number {
    // label words must map onto exactly one vocabulary token; try the bare
    // word first, then with a leading space (BPE vocabularies)
    for (const candidate of [word, ` ${word}`]) {
      const ids: number[] = Array.from(
        tokenizer(candidate, { add_special_tokens: false }).input_ids.data,
        Number
      );
      if (ids.length === 1) return ids[0];
    }
    throw new TemplateInvalid(`label word is not a single vocabulary token: ${word}`);
  }

  return {
    id: `transformers:${embedModel}+${mlmModel}`,
    dims: 0, // resolved from the first embedding batch

    async embed(texts: string[]): Promise<Float32Array[]> {
      const out: Float32Array[] = [];
      for (const text of texts) {
        const tensor = await extractor(text, { pooling: 'mean', normalize: true });
        const vec = Float32Array.from(tensor.data as Iterable<number>);
        if ((this as { dims: number }).dims === 0) {
          (this as { dims: number }).dims = vec.length;
        }
        out.push(vec);
      }
      return out;
    },

    async scoreMask(prompts: string[], labelWords: string[]): Promise<MaskScores[]> {
      const labelIds = labelWords.map(singleTokenId);
      const results: MaskScores[] = [];
      for (const prompt of prompts) {
        const text = prompt.split(MASK_PLACEHOLDER).join(maskToken);
        const encoded = tokenizer(text);
        const inputIds: number[] = Array.from(encoded.input_ids.data, Number);
        const maskPos = inputIds.indexOf(maskTokenId);
        if (maskPos === -1) {
          throw new TemplateInvalid(`mask token vanished after tokenization: ${text}`);
        }
        const output = await model(encoded);
        const [, seqLen, vocabSize] = output.logits.dims;
        const logits = output.logits.data as Float32Array;
        const rowStart = maskPos * vocabSize;
        void seqLen;

        let maxLogit = -Infinity;
        for (let v = 0; v < vocabSize; v++) {
          maxLogit = Math.max(maxLogit, logits[rowStart + v]);
        }
        let denom = 0;
        for (let v = 0; v < vocabSize; v++) {
          denom += Math.exp(logits[rowStart + v] - maxLogit);
        }
        const labelLogits = labelIds.map((id) => logits[rowStart + id]);
        const rawProbs = labelLogits.map((l) => Math.exp(l - maxLogit) / denom);
        results.push({ labelLogits, rawProbs });
      }
      return results;
    },
  };
}
