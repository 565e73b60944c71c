// Console wiring: review queue on the left, editor with inline diff and
// verdict badges in the middle, story composer on the right.

import { Client, StoryKind } from "./api.js";
import { ALL_KINDS, StoryComposer } from "./composer.js";
import { wordDiff } from "./diff.js";
import { diffView, el, queueRow, verdictBadge } from "./render.js";
import { ReviewQueue } from "./state.js";

function must<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export function startApp(): void {
  const token = new URLSearchParams(window.location.search).get("token") ?? "";
  const client = new Client("", token);
  const queue = new ReviewQueue(client);
  const composer = new StoryComposer(client);

  const queueList = must<HTMLUListElement>("queue");
  const editor = must<HTMLTextAreaElement>("editor");
  const rawText = must<HTMLPreElement>("raw-text");
  const diffPane = must<HTMLDivElement>("diff-pane");
  const verdictPane = must<HTMLDivElement>("verdicts");
  const statusLine = must<HTMLDivElement>("status");
  const conflictBanner = must<HTMLDivElement>("conflict-banner");

  function renderQueue(): void {
    queueList.replaceChildren();
    for (const entry of queue.entries.values()) {
      const row = queueRow(entry.item, entry.item.content_id === queue.selectedId);
      row.addEventListener("click", () => queue.select(entry.item.content_id));
      queueList.append(row);
    }
  }

  function renderEditor(): void {
    const entry = queue.selected;
    conflictBanner.hidden = !(entry && entry.conflicted);
    if (!entry) {
      editor.value = "";
      rawText.textContent = "";
      diffPane.replaceChildren();
      verdictPane.replaceChildren();
      return;
    }
    const draft = queue.displayText(entry);
    if (document.activeElement !== editor) editor.value = draft;
    rawText.textContent = entry.item.raw_text;
    diffPane.replaceChildren(diffView(wordDiff(entry.item.raw_text, draft)));
    verdictPane.replaceChildren(...entry.item.verdicts.map(verdictBadge));
  }

  queue.onChange(() => {
    renderQueue();
    renderEditor();
    statusLine.textContent = queue.lastError;
  });

  editor.addEventListener("input", () => {
    if (queue.selectedId) queue.updateDraft(queue.selectedId, editor.value);
  });
  must<HTMLButtonElement>("btn-refresh").addEventListener("click", () => void queue.refresh());
  must<HTMLButtonElement>("btn-save").addEventListener("click", () => {
    if (queue.selectedId) void queue.submitEdit(queue.selectedId);
  });
  must<HTMLButtonElement>("btn-approve").addEventListener("click", () => {
    if (queue.selectedId) void queue.approve(queue.selectedId);
  });
  must<HTMLButtonElement>("btn-reject").addEventListener("click", () => {
    if (queue.selectedId) void queue.reject(queue.selectedId);
  });
  must<HTMLButtonElement>("btn-reload").addEventListener("click", () => {
    if (queue.selectedId) void queue.reload(queue.selectedId);
  });

  // --- composer ---------------------------------------------------------

  const artistInput = must<HTMLInputElement>("composer-artist");
  const modeSelect = must<HTMLSelectElement>("composer-mode");
  const categoryInput = must<HTMLInputElement>("composer-category");
  const avoidInput = must<HTMLInputElement>("composer-avoid");
  const kindBoxes = must<HTMLDivElement>("composer-kinds");
  const previewPane = must<HTMLUListElement>("composer-preview");
  const resultsPane = must<HTMLDivElement>("composer-results");
  const composerStatus = must<HTMLDivElement>("composer-status");

  for (const kind of ALL_KINDS) {
    const label = el("label", "kind-box");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.value = kind;
    box.checked = kind === "summary";
    box.addEventListener("change", () => composer.toggleKind(kind as StoryKind));
    label.append(box, document.createTextNode(kind));
    kindBoxes.append(label);
  }

  function syncComposerState(): void {
    composer.state.artist = artistInput.value;
    composer.state.mode = modeSelect.value === "categorical" ? "categorical" : "free";
    composer.state.category = categoryInput.value;
    composer.state.avoidTopics = avoidInput.value
      .split(",")
      .map((t) => t.trim())
      .filter(Boolean);
    categoryInput.disabled = composer.state.mode !== "categorical";
  }
  modeSelect.addEventListener("change", syncComposerState);

  must<HTMLButtonElement>("composer-preview-btn").addEventListener("click", async () => {
    syncComposerState();
    const passages = await composer.loadPreview();
    composerStatus.textContent = composer.error;
    previewPane.replaceChildren(
      ...passages.map((p) =>
        el("li", "passage", `[${p.category ?? "uncategorized"}] ${p.text}`),
      ),
    );
  });

  must<HTMLButtonElement>("composer-submit").addEventListener("click", async () => {
    syncComposerState();
    const items = await composer.submit();
    composerStatus.textContent = composer.error;
    resultsPane.replaceChildren(
      ...items.map((item) => {
        const card = el("div", "result-card");
        card.append(
          el("h4", "", item.content_id),
          el("p", "", item.final_text || "(blocked - routed to review)"),
          el("small", "", `state: ${item.state}, revision ${item.revision}`),
        );
        return card;
      }),
    );
    await queue.refresh(); // generated stories land in the review queue
  });

  void queue.refresh();
}

declare global {
  interface Window {
    eventscribeConsole?: { start: () => void };
  }
}

if (typeof window !== "undefined") {
  window.eventscribeConsole = { start: startApp };
}
