import { describe, expect, it } from "vitest";

import { renderDiffText, wordDiff } from "../src/diff.js";

describe("wordDiff", () => {
  it("identical texts are one same-span", () => {
    const spans = wordDiff("the same text", "the same text");
    expect(spans).toEqual([{ kind: "same", text: "the same text" }]);
  });

  it("single word substitution", () => {
    const out = renderDiffText(wordDiff("ranked 40th in the world", "ranked 46th in the world"));
    expect(out).toBe("ranked [-40th-]{+46th+} in the world");
  });

  it("insertion and deletion at the edges", () => {
    expect(renderDiffText(wordDiff("b c", "a b c"))).toBe("{+a +}b c");
    expect(renderDiffText(wordDiff("a b c", "a b"))).toBe("a b[- c-]");
  });

  it("empty sides", () => {
    expect(wordDiff("", "abc")).toEqual([{ kind: "ins", text: "abc" }]);
    expect(wordDiff("abc", "")).toEqual([{ kind: "del", text: "abc" }]);
    expect(wordDiff("", "")).toEqual([]);
  });

  it("reconstructs both sides", () => {
    const before = "Jon Ram is on hole 16 after 2 strokes";
    const after = "Jon Rahm is on hole 9 after 2 strokes";
    const spans = wordDiff(before, after);
    const left = spans.filter((s) => s.kind !== "ins").map((s) => s.text).join("");
    const right = spans.filter((s) => s.kind !== "del").map((s) => s.text).join("");
    expect(left).toBe(before);
    expect(right).toBe(after);
  });
});
