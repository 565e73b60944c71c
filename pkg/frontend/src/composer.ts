// Story composer state: free vs categorical mode, output kinds, avoid
// topics, context preview. Validation mirrors the server's contract so the
// form can flag problems before a request is made; the server remains the
// authority.

import { Passage, ReviewItem, StoryApi, StoryKind, StoryMode } from "./api.js";

export const ALL_KINDS: StoryKind[] = ["headline", "bullets", "witty", "summary"];

export interface ComposerState {
  artist: string;
  mode: StoryMode;
  category: string;
  avoidTopics: string[];
  kinds: StoryKind[];
}

export function emptyComposer(): ComposerState {
  return { artist: "", mode: "free", category: "", avoidTopics: [], kinds: ["summary"] };
}

export function validateComposer(state: ComposerState): string[] {
  const problems: string[] = [];
  if (!state.artist.trim()) problems.push("artist is required");
  if (state.mode === "categorical" && !state.category.trim()) {
    problems.push("categorical mode requires a category");
  }
  if (state.mode === "free" && state.category.trim()) {
    problems.push("free mode must not carry a category");
  }
  if (state.kinds.length === 0) problems.push("select at least one output kind");
  for (const kind of state.kinds) {
    if (!ALL_KINDS.includes(kind)) problems.push(`unknown output kind: ${kind}`);
  }
  return problems;
}

export class StoryComposer {
  state: ComposerState = emptyComposer();
  preview: Passage[] = [];
  results: ReviewItem[] = [];
  error = "";

  constructor(private client: StoryApi) {}

  toggleKind(kind: StoryKind): void {
    if (this.state.kinds.includes(kind)) {
      this.state.kinds = this.state.kinds.filter((k) => k !== kind);
    } else {
      this.state.kinds = [...this.state.kinds, kind];
    }
  }

  async loadPreview(): Promise<Passage[]> {
    const problems = validateComposer({ ...this.state, kinds: ["summary"] });
    if (problems.length) {
      this.error = problems.join("; ");
      return [];
    }
    this.preview = await this.client.storyContext(
      this.state.artist,
      this.state.mode,
      this.state.mode === "categorical" ? this.state.category : undefined,
    );
    this.error = "";
    return this.preview;
  }

  async submit(): Promise<ReviewItem[]> {
    const problems = validateComposer(this.state);
    if (problems.length) {
      this.error = problems.join("; ");
      return [];
    }
    this.results = await this.client.createStory({
      artist: this.state.artist,
      mode: this.state.mode,
      category: this.state.mode === "categorical" ? this.state.category : undefined,
      avoid_topics: this.state.avoidTopics,
      kinds: this.state.kinds,
    });
    this.error = "";
    return this.results;
  }
}
