import { describe, expect, it } from "vitest";

import { ApiError, Client, ConflictError, ReviewItem } from "../src/api.js";

function item(overrides: Partial<ReviewItem> = {}): ReviewItem {
  return {
    content_id: "tennis/set_end/a-v-b-s1",
    source_event: "ev-1",
    raw_text: "raw",
    final_text: "final",
    verdicts: [],
    state: "pending_review",
    revision: 0,
    corrected_claims: 0,
    ...overrides,
  };
}

function fakeFetch(
  handler: (url: string, init: RequestInit) => { status: number; body: unknown },
): typeof fetch {
  return (async (url: RequestInfo | URL, init?: RequestInit) => {
    const result = handler(String(url), init ?? {});
    return new Response(JSON.stringify(result.body), {
      status: result.status,
      headers: { "content-type": "application/json" },
    });
  }) as typeof fetch;
}

describe("Client", () => {
  it("lists the review queue with the state filter", async () => {
    const seen: string[] = [];
    const client = new Client("", "", fakeFetch((url) => {
      seen.push(url);
      return { status: 200, body: { items: [item()] } };
    }));
    const items = await client.listReview("pending_review");
    expect(items).toHaveLength(1);
    expect(seen[0]).toBe("/review?state=pending_review");
  });

  it("sends revision on approve and parses the item", async () => {
    const bodies: unknown[] = [];
    const client = new Client("", "", fakeFetch((url, init) => {
      bodies.push(JSON.parse(String(init.body)));
      expect(url).toBe("/review/tennis/set_end/a-v-b-s1/approve");
      return { status: 200, body: item({ state: "published" }) };
    }));
    const published = await client.approve("tennis/set_end/a-v-b-s1", 2);
    expect(published.state).toBe("published");
    expect(bodies[0]).toEqual({ revision: 2 });
  });

  it("maps 409 to ConflictError", async () => {
    const client = new Client("", "", fakeFetch(() => ({
      status: 409,
      body: { detail: "revision 0 is stale" },
    })));
    await expect(client.edit("x", "text", 0)).rejects.toBeInstanceOf(ConflictError);
  });

  it("maps other failures to ApiError with status", async () => {
    const client = new Client("", "", fakeFetch(() => ({
      status: 404,
      body: { detail: "nope" },
    })));
    const error = await client.getContent("missing").catch((e) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect(error.status).toBe(404);
  });

  it("carries the shared token on every request", async () => {
    let sawToken = "";
    const client = new Client("", "sekrit", fakeFetch((url, init) => {
      sawToken = (init.headers as Record<string, string>)["x-auth-token"];
      return { status: 200, body: { purged: 0 } };
    }));
    await client.purge([]);
    expect(sawToken).toBe("sekrit");
  });

  it("builds categorical story context queries", async () => {
    let seen = "";
    const client = new Client("", "", fakeFetch((url) => {
      seen = url;
      return { status: 200, body: { passages: [] } };
    }));
    await client.storyContext("Artist Name", "categorical", "GRAMMY Achievements");
    expect(seen).toBe(
      "/story/context?artist=Artist+Name&mode=categorical&category=GRAMMY+Achievements",
    );
  });
});
