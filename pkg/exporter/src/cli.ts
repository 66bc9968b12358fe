#!/usr/bin/env node
import { parseArgs } from 'node:util';

import { createHashedBackend } from './backends/hashed.js';
import { createTransformersBackend } from './backends/transformers.js';
import type { InferenceBackend } from './backends/types.js';
import { CorpusInvalid, ModelLoadFailure, TemplateInvalid } from './errors.js';
import { exportCorpus } from './export.js';
import { loadPromptSpec } from './prompt.js';

const USAGE = `usage: coldselect-export export --corpus FILE --template-file FILE --out DIR
                          [--stem NAME] [--backend hashed|transformers]
                          [--dims N] [--batch N] [--embed-model ID] [--mlm-model ID]

Writes <stem>.manifest plus float32 binaries consumable by the selection engine.
The template file is JSON: {"template": "[MASK] News: <S>", "verbalizer": ["World", ...]}.`;

async function resolveBackend(values: {
  backend?: string;
  dims?: string;
  'embed-model'?: string;
  'mlm-model'?: string;
}): Promise<InferenceBackend> {
  const kind = values.backend ?? 'hashed';
  if (kind === 'hashed') {
    return createHashedBackend(values.dims ? Number(values.dims) : 256);
  }
  if (kind === 'transformers') {
    return createTransformersBackend({
      embedModel: values['embed-model'],
      mlmModel: values['mlm-model'],
    });
  }
  throw new TemplateInvalid(`unknown backend ${kind} (use hashed or transformers)`);
}

export async function main(argv: string[]): Promise<number> {
  if (argv[0] !== 'export') {
    console.error(USAGE);
    return 2;
  }
  let values;
  try {
    ({ values } = parseArgs({
      args: argv.slice(1),
      options: {
        corpus: { type: 'string' },
        'template-file': { type: 'string' },
        out: { type: 'string' },
        stem: { type: 'string', default: 'dataset' },
        backend: { type: 'string', default: 'hashed' },
        dims: { type: 'string' },
        batch: { type: 'string' },
        'embed-model': { type: 'string' },
        'mlm-model': { type: 'string' },
      },
    }));
  } catch (err) {
    console.error(String(err));
    console.error(USAGE);
    return 2;
  }
  if (!values.corpus || !values['template-file'] || !values.out) {
    console.error('error: --corpus, --template-file and --out are required');
    console.error(USAGE);
    return 2;
  }

  try {
    const spec = loadPromptSpec(values['template-file']);
    const backend = await resolveBackend(values);
    const result = await exportCorpus({
      corpusPath: values.corpus,
      spec,
      outDir: values.out,
      backend,
      stem: values.stem,
      batchSize: values.batch ? Number(values.batch) : undefined,
    });
    console.log(
      `exported ${result.n} samples (d=${result.d}, c=${result.c}) ` +
        `via ${result.backendId} -> ${result.manifestPath}`
    );
    return 0;
  } catch (err) {
    if (err instanceof TemplateInvalid || err instanceof CorpusInvalid) {
      console.error(`error[validate] ${err.name}: ${err.message}`);
      return 2;
    }
    if (err instanceof ModelLoadFailure) {
      console.error(`error[model] ${err.name}: ${err.message}`);
      return 3;
    }
    console.error(`error: ${String(err)}`);
    return 3;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
