export class ExporterError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

/** Template or verbalizer fails structural validation. */
export class TemplateInvalid extends ExporterError {}

/** The corpus file is missing, unreadable, or empty. */
export class CorpusInvalid extends ExporterError {}

/** The inference backend (or its model weights) could not be loaded. */
export class ModelLoadFailure extends ExporterError {}
