/** Scores produced for one prompt at its mask position. */
export interface MaskScores {
  /** one logit per label word; softmax over these gives the class distribution */
  labelLogits: number[];
  /** vocabulary-level probability of each label word, in [0, 1], unnormalized */
  rawProbs: number[];
}

export interface InferenceBackend {
  readonly id: string;
  /** embedding width this backend produces */
  readonly dims: number;
  /** sentence embeddings for raw sample texts */
  embed(texts: string[]): Promise<Float32Array[]>;
  /** mask-position scores for template-wrapped prompts */
  scoreMask(prompts: string[], labelWords: string[]): Promise<MaskScores[]>;
}
