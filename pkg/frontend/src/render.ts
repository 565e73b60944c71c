// DOM construction helpers. All content goes through textContent, never
// innerHTML, so generated text cannot inject markup into the console.

import { ReviewItem, Verdict } from "./api.js";
import { DiffSpan } from "./diff.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

export function verdictBadge(verdict: Verdict): HTMLElement {
  const badge = el("span", `badge badge-${verdict.status}`);
  badge.textContent =
    verdict.status === "corrected"
      ? `${verdict.claim.surface} → ${verdict.correction}`
      : `${verdict.claim.surface}: ${verdict.status}`;
  badge.title = `${verdict.claim.kind} claim`;
  return badge;
}

export function queueRow(item: ReviewItem, selected: boolean): HTMLElement {
  const row = el("li", selected ? "queue-row selected" : "queue-row");
  row.dataset.contentId = item.content_id;
  row.append(
    el("span", "queue-id", item.content_id),
    el("span", "queue-rev", `r${item.revision}`),
    el(
      "span",
      item.corrected_claims ? "queue-flag warn" : "queue-flag",
      item.corrected_claims ? `${item.corrected_claims} corrected` : "clean",
    ),
  );
  return row;
}

export function diffView(spans: DiffSpan[]): HTMLElement {
  const container = el("div", "diff");
  for (const span of spans) {
    const node =
      span.kind === "del"
        ? el("del", "diff-del")
        : span.kind === "ins"
          ? el("ins", "diff-ins")
          : el("span", "diff-same");
    node.textContent = span.text;
    container.append(node);
  }
  return container;
}
