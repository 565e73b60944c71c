// Word-level inline diff between the model's raw text and the edited text,
// so reviewers see exactly what correction and editing changed.

export interface DiffSpan {
  kind: "same" | "del" | "ins";
  text: string;
}

function tokens(text: string): string[] {
  return text.split(/(\s+)/).filter((t) => t.length > 0);
}

export function wordDiff(before: string, after: string): DiffSpan[] {
  const a = tokens(before);
  const b = tokens(after);
  const rows = a.length + 1;
  const cols = b.length + 1;
  const lcs: number[][] = Array.from({ length: rows }, () => new Array(cols).fill(0));
  for (let i = a.length - 1; i >= 0; i--) {
    for (let j = b.length - 1; j >= 0; j--) {
      lcs[i][j] =
        a[i] === b[j]
          ? lcs[i + 1][j + 1] + 1
          : Math.max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }
  const spans: DiffSpan[] = [];
  const push = (kind: DiffSpan["kind"], text: string) => {
    const last = spans[spans.length - 1];
    if (last && last.kind === kind) {
      last.text += text;
    } else {
      spans.push({ kind, text });
    }
  };
  let i = 0;
  let j = 0;
  while (i < a.length && j < b.length) {
    if (a[i] === b[j]) {
      push("same", a[i]);
      i++;
      j++;
    } else if (lcs[i + 1][j] >= lcs[i][j + 1]) {
      push("del", a[i]);
      i++;
    } else {
      push("ins", b[j]);
      j++;
    }
  }
  while (i < a.length) push("del", a[i++]);
  while (j < b.length) push("ins", b[j++]);
  return spans;
}

/** Plain-text projection of a diff, for tests and copy/paste. */
export function renderDiffText(spans: DiffSpan[]): string {
  return spans
    .map((span) => {
      if (span.kind === "del") return `[-${span.text}-]`;
      if (span.kind === "ins") return `{+${span.text}+}`;
      return span.text;
    })
    .join("");
}
