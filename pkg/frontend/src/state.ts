// Review queue store.
//
// Edits are buffered locally per item until submit; the server's revision
// number rides along on every mutation, and a 409 flips the item into a
// conflict state that the UI surfaces as a reload prompt. Publication can
// only ever happen through approve() - no other code path calls the
// approve endpoint.

import { ConflictError, ReviewApi, ReviewItem } from "./api.js";

export type QueueListener = () => void;

export interface QueueEntry {
  item: ReviewItem;
  draft: string | null; // unsaved local edit, null when untouched
  conflicted: boolean;
}

export class ReviewQueue {
  entries = new Map<string, QueueEntry>();
  selectedId: string | null = null;
  lastError = "";
  private listeners: QueueListener[] = [];

  constructor(private client: ReviewApi) {}

  onChange(listener: QueueListener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  get selected(): QueueEntry | null {
    return this.selectedId ? this.entries.get(this.selectedId) ?? null : null;
  }

  async refresh(): Promise<void> {
    const items = await this.client.listReview("pending_review");
    const next = new Map<string, QueueEntry>();
    for (const item of items) {
      const existing = this.entries.get(item.content_id);
      // keep an unsaved draft across refreshes unless the item moved on
      const draft =
        existing && existing.item.revision === item.revision ? existing.draft : null;
      next.set(item.content_id, { item, draft, conflicted: false });
    }
    this.entries = next;
    if (this.selectedId && !this.entries.has(this.selectedId)) {
      this.selectedId = null;
    }
    this.notify();
  }

  select(contentId: string): void {
    if (this.entries.has(contentId)) {
      this.selectedId = contentId;
      this.notify();
    }
  }

  updateDraft(contentId: string, text: string): void {
    const entry = this.entries.get(contentId);
    if (!entry) return;
    entry.draft = text;
    this.notify();
  }

  displayText(entry: QueueEntry): string {
    return entry.draft ?? entry.item.final_text;
  }

  private async mutate(
    contentId: string,
    action: (entry: QueueEntry) => Promise<void>,
  ): Promise<boolean> {
    const entry = this.entries.get(contentId);
    if (!entry) return false;
    try {
      await action(entry);
      this.lastError = "";
      return true;
    } catch (error) {
      if (error instanceof ConflictError) {
        entry.conflicted = true;
        this.lastError = error.message;
        this.notify();
        return false;
      }
      throw error;
    }
  }

  /** Push the buffered edit; the server bumps the revision. */
  async submitEdit(contentId: string): Promise<boolean> {
    return this.mutate(contentId, async (entry) => {
      if (entry.draft === null) return;
      entry.item = await this.client.edit(
        contentId,
        entry.draft,
        entry.item.revision,
      );
      entry.draft = null;
      this.notify();
    });
  }

  /** Explicit publication; the only path to the published state. */
  async approve(contentId: string): Promise<boolean> {
    const ok = await this.mutate(contentId, async (entry) => {
      if (entry.draft !== null) {
        entry.item = await this.client.edit(contentId, entry.draft, entry.item.revision);
        entry.draft = null;
      }
      await this.client.approve(contentId, entry.item.revision);
    });
    if (ok) {
      this.entries.delete(contentId);
      if (this.selectedId === contentId) this.selectedId = null;
      this.notify();
    }
    return ok;
  }

  /** Reject and pick up the regenerated revision the server returns. */
  async reject(contentId: string): Promise<boolean> {
    return this.mutate(contentId, async (entry) => {
      const result = await this.client.reject(contentId, entry.item.revision);
      entry.item = result.item;
      entry.draft = null;
      entry.conflicted = false;
      this.notify();
    });
  }

  /** Resolve a conflict by reloading the server's current revision. */
  async reload(contentId: string): Promise<void> {
    const entry = this.entries.get(contentId);
    if (!entry) return;
    entry.item = await this.client.getReviewItem(contentId);
    entry.draft = null;
    entry.conflicted = false;
    this.notify();
  }
}
