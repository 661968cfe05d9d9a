/**
 * Deterministic text vectors: hashed bag-of-words in a fixed dimension,
 * L2-normalized. Any checkpoint satisfying the response contracts could be
 * swapped in; this one needs no weights file and is fully reproducible.
 */

export const DIM = 256;
export const MAX_TEXT_LENGTH = 8192;

export function tokenize(text: string): string[] {
  return text
    .toLowerCase()
    .split(/[^a-z0-9]+/)
    .filter((t) => t.length > 0);
}

/** FNV-1a 32-bit hash; stable across platforms. */
export function fnv1a(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h >>> 0;
}

export function l2norm(v: number[]): number {
  let s = 0;
  for (const x of v) s += x * x;
  return Math.sqrt(s);
}

export function normalize(v: number[]): number[] {
  const n = l2norm(v);
  if (n === 0) {
    // empty text still gets a valid unit vector
    const out = new Array(v.length).fill(0);
    out[0] = 1;
    return out;
  }
  return v.map((x) => x / n);
}

export function embedOne(text: string): number[] {
  const v = new Array(DIM).fill(0);
  for (const token of tokenize(text)) {
    const h = fnv1a(token);
    const idx = h % DIM;
    // second hash bit picks the sign so common tokens do not all pile up
    const sign = (h >>> 16) & 1 ? 1 : -1;
    v[idx] += sign;
  }
  return normalize(v);
}

export function embed(texts: string[]): number[][] {
  return texts.map((t) => embedOne(t.slice(0, MAX_TEXT_LENGTH)));
}

export function cosine(a: number[], b: number[]): number {
  let s = 0;
  for (let i = 0; i < a.length; i++) s += a[i] * b[i];
  return s;
}

/** Relevance of each document to the query (cosine of unit vectors). */
export function rerank(query: string, documents: string[]): number[] {
  const q = embedOne(query);
  return documents.map((d) => cosine(q, embedOne(d)));
}

export function softmax(xs: number[]): number[] {
  const m = Math.max(...xs);
  const exps = xs.map((x) => Math.exp(x - m));
  const z = exps.reduce((a, b) => a + b, 0);
  return exps.map((e) => e / z);
}
