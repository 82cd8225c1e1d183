/** Test helpers: in-memory session store, fake fetch, live service spawning. */

import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync, readFileSync, existsSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import type { KeyValueStore } from "../src/session.js";

export class MemoryStore implements KeyValueStore {
  private map = new Map<string, string>();
  getItem(key: string): string | null {
    return this.map.get(key) ?? null;
  }
  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }
}

export function jsonResponse(status: number, doc: unknown): Response {
  return new Response(JSON.stringify(doc), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export interface FakeService {
  fetchImpl: typeof fetch;
  posts: Array<{ pair_id: string; voter: string; choice: string }>;
  pairRequests: number;
  failNextVoteWith(status: number): void;
  failNextPairFetch(): void;
}

/** Scripted stand-in for the study service, no network involved. */
export function fakeService(): FakeService {
  let pairCounter = 0;
  let voteFailure: number | null = null;
  let pairFailure = false;
  const service: FakeService = {
    posts: [],
    pairRequests: 0,
    failNextVoteWith(status: number) {
      voteFailure = status;
    },
    failNextPairFetch() {
      pairFailure = true;
    },
    fetchImpl: (async (input: RequestInfo | URL, init?: RequestInit) => {
      const url = String(input);
      if (url.includes("/api/pair")) {
        if (pairFailure) {
          pairFailure = false;
          throw new TypeError("network down");
        }
        service.pairRequests += 1;
        pairCounter += 1;
        return jsonResponse(200, {
          pair_id: `pair-${pairCounter}`,
          left_url: `/img/left-${pairCounter}`,
          right_url: `/img/right-${pairCounter}`,
        });
      }
      if (url.includes("/api/vote")) {
        if (voteFailure !== null) {
          const status = voteFailure;
          voteFailure = null;
          return jsonResponse(status, { ok: false, message: "injected" });
        }
        service.posts.push(JSON.parse(String(init?.body)));
        return jsonResponse(200, { ok: true, message: "ok" });
      }
      throw new Error(`unexpected request: ${url}`);
    }) as typeof fetch,
  };
  return service;
}

export function fireLoad(root: HTMLElement): void {
  for (const img of Array.from(root.querySelectorAll("img"))) {
    img.dispatchEvent(new Event("load"));
  }
}

export function answerButtons(root: HTMLElement): HTMLButtonElement[] {
  return Array.from(root.querySelectorAll("button.answer"));
}

// one valid 1x1 PNG, reused for every test rendition
const TINY_PNG = Buffer.from(
  "iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR42mNkYPhfDwAChwGA60e6kgAAAABJRU5ErkJggg==",
  "base64"
);

export interface LiveService {
  baseUrl: string;
  storePath: string;
  manifest: Array<{ rendition_id: string; solution_id: string; scene_id: string }>;
  stop(): void;
  readStore(): Array<{
    vote_id: string;
    left: string;
    right: string;
    voter_id: string;
    choice: string;
    honeypot: boolean;
  }>;
}

/** Start the real Python study service on a free port with tiny fixtures. */
export async function startService(honeypotRate: number, seed: number): Promise<LiveService> {
  const dir = mkdtempSync(join(tmpdir(), "voting-ui-"));
  const manifest = [];
  for (const scene of ["sceneSecretA", "sceneSecretB"]) {
    for (const team of ["teamSecretX", "teamSecretY", "teamSecretZ"]) {
      const rid = `rendSecret-${scene}-${team}`;
      const imagePath = join(dir, `${rid}.png`);
      writeFileSync(imagePath, TINY_PNG);
      manifest.push({
        rendition_id: rid,
        solution_id: team,
        scene_id: scene,
        image_path: imagePath,
      });
    }
  }
  const manifestPath = join(dir, "manifest.json");
  writeFileSync(manifestPath, JSON.stringify(manifest));
  const storePath = join(dir, "votes.jsonl");

  const proc: ChildProcess = spawn("python3", [
    "-m", "nightisp.cli", "serve",
    "--images", manifestPath,
    "--port", "0",
    "--store", storePath,
    "--honeypot-rate", String(honeypotRate),
    "--seed", String(seed),
  ]);

  const baseUrl = await new Promise<string>((resolve, reject) => {
    let buffer = "";
    const timer = setTimeout(() => reject(new Error("service did not start")), 30_000);
    proc.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/study service on (http:\/\/[\d.]+:\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]);
      }
    });
    proc.stderr!.on("data", (chunk: Buffer) => {
      process.stderr.write(chunk);
    });
    proc.on("exit", (code) => reject(new Error(`service exited early (${code})`)));
  });

  return {
    baseUrl,
    storePath,
    manifest,
    stop() {
      proc.kill("SIGINT");
    },
    readStore() {
      if (!existsSync(storePath)) {
        return [];
      }
      return readFileSync(storePath, "utf-8")
        .split("\n")
        .filter((line) => line.trim())
        .map((line) => JSON.parse(line));
    },
  };
}
