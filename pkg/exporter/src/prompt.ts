import { readFileSync } from 'node:fs';

import { TemplateInvalid } from './errors.js';

/**
 * A cloze prompt: a template with one mask slot and at least one sample
 * slot, plus one label word per class.
 */
export interface PromptSpec {
  template: string;
  verbalizer: string[];
}

export const MASK_PLACEHOLDER = '[MASK]';
export const SAMPLE_PLACEHOLDER = '<S>';

function countOccurrences(haystack: string, needle: string): number {
  let count = 0;
  let pos = haystack.indexOf(needle);
  while (pos !== -1) {
    count += 1;
    pos = haystack.indexOf(needle, pos + needle.length);
  }
  return count;
}

export function validatePromptSpec(spec: PromptSpec): void {
  const masks = countOccurrences(spec.template, MASK_PLACEHOLDER);
  if (masks !== 1) {
    throw new TemplateInvalid(
      `template must contain exactly one ${MASK_PLACEHOLDER} placeholder, found ${masks}`
    );
  }
  if (countOccurrences(spec.template, SAMPLE_PLACEHOLDER) < 1) {
    throw new TemplateInvalid(
      `template must contain the sample placeholder ${SAMPLE_PLACEHOLDER}`
    );
  }
  if (spec.verbalizer.length < 2) {
    throw new TemplateInvalid(
      `verbalizer needs at least 2 label words, found ${spec.verbalizer.length}`
    );
  }
  const seen = new Set<string>();
  for (const word of spec.verbalizer) {
    if (!word || !word.trim()) {
      throw new TemplateInvalid('verbalizer contains an empty label word');
    }
    if (seen.has(word)) {
      throw new TemplateInvalid(`verbalizer label words must be distinct: ${word}`);
    }
    seen.add(word);
  }
}

/** Substitute the sample text into every sample slot; the mask slot stays. */
export function applyTemplate(template: string, sample: string): string {
  return template.split(SAMPLE_PLACEHOLDER).join(sample);
}

export function loadPromptSpec(path: string): PromptSpec {
  let parsed: unknown;
  try {
    parsed = JSON.parse(readFileSync(path, 'utf-8'));
  } catch (err) {
    throw new TemplateInvalid(`cannot parse template file ${path}: ${String(err)}`);
  }
  const spec = parsed as Partial<PromptSpec>;
  if (typeof spec.template !== 'string' || !Array.isArray(spec.verbalizer)) {
    throw new TemplateInvalid(
      `template file ${path} must be JSON with "template" (string) and "verbalizer" (array)`
    );
  }
  const result: PromptSpec = {
    template: spec.template,
    verbalizer: spec.verbalizer.map(String),
  };
  validatePromptSpec(result);
  return result;
}
