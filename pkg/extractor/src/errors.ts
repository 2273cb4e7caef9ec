/** Error taxonomy. Every failure the CLI reports maps to one of these. */

export class ExtractError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

/** Encoder weights are neither cached locally nor downloadable here. */
export class ModelUnavailable extends ExtractError {}

/** The requested dataset or image folder cannot be read. */
export class DatasetUnavailable extends ExtractError {}

/** Filesystem trouble while writing the store. */
export class IoFailure extends ExtractError {}
