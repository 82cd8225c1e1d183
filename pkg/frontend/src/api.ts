/** Typed client for the study service HTTP API. */

export type Choice = "left" | "right" | "same";

export interface PairPayload {
  pair_id: string;
  left_url: string;
  right_url: string;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class StudyApi {
  constructor(readonly baseUrl: string) {}

  async fetchPair(voterId: string): Promise<PairPayload> {
    const resp = await fetch(
      `${this.baseUrl}/api/pair?voter=${encodeURIComponent(voterId)}`
    );
    if (!resp.ok) {
      throw new ApiError(resp.status, `pair request failed (${resp.status})`);
    }
    return (await resp.json()) as PairPayload;
  }

  /** Resolves on 2xx, throws ApiError otherwise (409 = duplicate pair). */
  async submitVote(pairId: string, voterId: string, choice: Choice): Promise<void> {
    const resp = await fetch(`${this.baseUrl}/api/vote`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ pair_id: pairId, voter: voterId, choice }),
    });
    if (!resp.ok) {
      throw new ApiError(resp.status, `vote rejected (${resp.status})`);
    }
  }

  imageUrl(path: string): string {
    return `${this.baseUrl}${path}`;
  }
}
