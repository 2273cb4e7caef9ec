/** Prompt construction for label text embeddings. */

export const DEFAULT_PROMPT = 'This is a photo of a {}';

/** Fill the {} placeholder; a template without one gets the name appended. */
export function renderPrompt(template: string, className: string): string {
  if (template.includes('{}')) {
    return template.replace('{}', className);
  }
  return `${template} ${className}`.trim();
}
