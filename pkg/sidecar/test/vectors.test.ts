import { describe, expect, it } from "vitest";

import { DIM, cosine, embed, embedOne, l2norm, rerank, softmax } from "../src/vectors";

describe("embed", () => {
  it("returns unit-norm vectors of the advertised dimension", () => {
    const vectors = embed(["what country borders France?", "a", ""]);
    expect(vectors).toHaveLength(3);
    for (const v of vectors) {
      expect(v).toHaveLength(DIM);
      expect(Math.abs(l2norm(v) - 1)).toBeLessThan(1e-6);
    }
  });

  it("is deterministic: identical texts give cosine 1", () => {
    const [a, b] = embed(["the Seine flows through Paris", "the Seine flows through Paris"]);
    expect(cosine(a, b)).toBeCloseTo(1, 10);
  });

  it("unrelated strings have cosine below 1", () => {
    const [a, b] = embed(["airports in Germany", "dirichlet uncertainty gate"]);
    expect(cosine(a, b)).toBeLessThan(1 - 1e-6);
  });

  it("tokenization is case and punctuation insensitive", () => {
    expect(cosine(embedOne("Berlin, Germany!"), embedOne("berlin germany"))).toBeCloseTo(1, 10);
  });
});

describe("rerank", () => {
  it("scores the query itself above distractors", () => {
    const query = "what team does the mascot Lou Seal represent";
    const scores = rerank(query, [
      "rivers of western Europe",
      query,
      "airports serving Nijmegen",
    ]);
    expect(scores[1]).toBeGreaterThan(scores[0]);
    expect(scores[1]).toBeGreaterThan(scores[2]);
  });

  it("is permutation equivariant", () => {
    const docs = ["alpha beta", "gamma delta", "epsilon zeta"];
    const forward = rerank("alpha epsilon", docs);
    const reversed = rerank("alpha epsilon", [...docs].reverse());
    expect(reversed).toEqual([...forward].reverse());
  });

  it("returns one score per document", () => {
    const docs = Array.from({ length: 15 }, (_, i) => `document ${i}`);
    expect(rerank("q", docs)).toHaveLength(15);
  });
});

describe("softmax", () => {
  it("sums to one and preserves order", () => {
    const out = softmax([3, 1, 2]);
    expect(out.reduce((a, b) => a + b, 0)).toBeCloseTo(1, 9);
    expect(out[0]).toBeGreaterThan(out[2]);
    expect(out[2]).toBeGreaterThan(out[1]);
  });
});
