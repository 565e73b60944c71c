// Typed client for the pipeline's admin and consumer HTTP API.
// The console holds no business logic; every state transition happens
// server-side and this module only shapes requests and errors.

export interface Claim {
  kind: string;
  surface: string;
  value: unknown;
  start: number;
  end: number;
}

export interface Verdict {
  claim: Claim;
  status: "verified" | "corrected" | "unverifiable" | "blocked";
  correction: string | null;
}

export interface ReviewItem {
  content_id: string;
  source_event: string;
  raw_text: string;
  final_text: string;
  verdicts: Verdict[];
  state: "draft" | "pending_review" | "published" | "rejected";
  revision: number;
  corrected_claims: number;
}

export interface Passage {
  doc_id: string;
  text: string;
  category: string | null;
}

export type StoryMode = "free" | "categorical";
export type StoryKind = "headline" | "bullets" | "witty" | "summary";

export interface StoryRequest {
  artist: string;
  mode: StoryMode;
  category?: string;
  avoid_topics: string[];
  kinds: StoryKind[];
}

/** The queue store's view of the API. */
export interface ReviewApi {
  listReview(state?: string): Promise<ReviewItem[]>;
  getReviewItem(contentId: string): Promise<ReviewItem>;
  edit(contentId: string, finalText: string, revision: number): Promise<ReviewItem>;
  approve(contentId: string, revision: number): Promise<ReviewItem>;
  reject(
    contentId: string,
    revision: number,
  ): Promise<{ regenerated_from: string; item: ReviewItem }>;
}

/** The story composer's view of the API. */
export interface StoryApi {
  storyContext(artist: string, mode: StoryMode, category?: string): Promise<Passage[]>;
  createStory(request: StoryRequest): Promise<ReviewItem[]>;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

/** The item changed server-side; reload before retrying. */
export class ConflictError extends ApiError {
  constructor(message: string) {
    super(409, message);
  }
}

async function parseError(response: Response): Promise<string> {
  try {
    const body = await response.json();
    return typeof body.detail === "string" ? body.detail : JSON.stringify(body);
  } catch {
    return response.statusText;
  }
}

export class Client implements ReviewApi, StoryApi {
  constructor(
    private baseUrl: string = "",
    private token: string = "",
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init: RequestInit = {}): Promise<T> {
    const headers: Record<string, string> = {
      "content-type": "application/json",
      ...(init.headers as Record<string, string> | undefined),
    };
    if (this.token) headers["x-auth-token"] = this.token;
    const response = await this.fetchFn(this.baseUrl + path, { ...init, headers });
    if (response.status === 409) {
      throw new ConflictError(await parseError(response));
    }
    if (!response.ok) {
      throw new ApiError(response.status, await parseError(response));
    }
    return (await response.json()) as T;
  }

  listReview(state = "pending_review"): Promise<ReviewItem[]> {
    return this.request<{ items: ReviewItem[] }>(
      `/review?state=${encodeURIComponent(state)}`,
    ).then((body) => body.items);
  }

  getReviewItem(contentId: string): Promise<ReviewItem> {
    return this.request<ReviewItem>(`/review/${contentId}`);
  }

  getContent(contentId: string): Promise<ReviewItem> {
    return this.request<ReviewItem>(`/content/${contentId}`);
  }

  edit(contentId: string, finalText: string, revision: number): Promise<ReviewItem> {
    return this.request<ReviewItem>(`/review/${contentId}`, {
      method: "PUT",
      body: JSON.stringify({ final_text: finalText, revision }),
    });
  }

  approve(
    contentId: string,
    revision: number,
  ): Promise<ReviewItem & { purge_issued?: boolean }> {
    return this.request<ReviewItem & { purge_issued?: boolean }>(
      `/review/${contentId}/approve`,
      {
        method: "POST",
        body: JSON.stringify({ revision }),
      },
    );
  }

  reject(
    contentId: string,
    revision: number,
  ): Promise<{ regenerated_from: string; item: ReviewItem }> {
    return this.request(`/review/${contentId}/reject`, {
      method: "POST",
      body: JSON.stringify({ revision }),
    });
  }

  purge(keys: string[]): Promise<number> {
    return this.request<{ purged: number }>(`/purge`, {
      method: "POST",
      body: JSON.stringify({ keys }),
    }).then((body) => body.purged);
  }

  storyContext(artist: string, mode: StoryMode, category?: string): Promise<Passage[]> {
    const params = new URLSearchParams({ artist, mode });
    if (category) params.set("category", category);
    return this.request<{ passages: Passage[] }>(
      `/story/context?${params.toString()}`,
    ).then((body) => body.passages);
  }

  createStory(request: StoryRequest): Promise<ReviewItem[]> {
    return this.request<{ items: ReviewItem[] }>(`/story`, {
      method: "POST",
      body: JSON.stringify(request),
    }).then((body) => body.items);
  }
}
