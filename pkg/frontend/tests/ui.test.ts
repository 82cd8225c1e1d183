/** DOM behavior against a scripted fake service (no network). */

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import { mountApp, VotingApp } from "../src/main.js";
import { voterId } from "../src/session.js";
import { MemoryStore, answerButtons, fakeService, fireLoad, FakeService } from "./helpers.js";

let root: HTMLElement;
let service: FakeService;
let app: VotingApp;

beforeEach(async () => {
  root = document.createElement("div");
  document.body.appendChild(root);
  service = fakeService();
  vi.stubGlobal("fetch", service.fetchImpl);
  app = mountApp(root, "http://study.test", new MemoryStore());
  await app.start();
});

afterEach(() => {
  app.dispose();
  vi.unstubAllGlobals();
  root.remove();
});

describe("pair rendering", () => {
  it("shows two images and keeps answers disabled until both load", async () => {
    const imgs = root.querySelectorAll("img");
    expect(imgs).toHaveLength(2);
    expect(answerButtons(root).every((b) => b.disabled)).toBe(true);

    imgs[0].dispatchEvent(new Event("load"));
    expect(answerButtons(root).every((b) => b.disabled)).toBe(true);

    imgs[1].dispatchEvent(new Event("load"));
    expect(answerButtons(root).every((b) => !b.disabled)).toBe(true);
  });

  it("keeps answers disabled and offers retry when an image fails", async () => {
    const imgs = root.querySelectorAll("img");
    imgs[0].dispatchEvent(new Event("load"));
    imgs[1].dispatchEvent(new Event("error"));
    expect(answerButtons(root).every((b) => b.disabled)).toBe(true);
    expect(root.querySelector("button.retry")).not.toBeNull();
    expect(service.posts).toHaveLength(0);
  });

  it("shows an error banner and posts nothing when the service is offline", async () => {
    service.failNextPairFetch();
    await app.loadNextPair();
    expect(root.querySelector(".status")!.textContent).toContain("cannot reach");
    expect(root.querySelector("button.retry")).not.toBeNull();
    expect(service.posts).toHaveLength(0);
    // retry recovers
    (root.querySelector("button.retry") as HTMLButtonElement).click();
    await vi.waitFor(() => expect(app.pairShown()).toBe(true));
  });
});

describe("submitting", () => {
  it("posts the choice and advances to a fresh pair", async () => {
    fireLoad(root);
    await app.choose("left");
    expect(service.posts).toHaveLength(1);
    expect(service.posts[0]).toMatchObject({ pair_id: "pair-1", choice: "left" });
    expect(service.pairRequests).toBe(2); // the next pair arrived
  });

  it("ignores choices while images are still loading", async () => {
    await app.choose("left");
    expect(service.posts).toHaveLength(0);
  });

  it("sends exactly one vote per pair even on double activation", async () => {
    fireLoad(root);
    const first = app.choose("left");
    const second = app.choose("right"); // in-flight guard swallows this
    await Promise.all([first, second]);
    const pairOneVotes = service.posts.filter((p) => p.pair_id === "pair-1");
    expect(pairOneVotes).toHaveLength(1);
  });

  it("skips ahead without retrying on a 409", async () => {
    fireLoad(root);
    service.failNextVoteWith(409);
    await app.choose("same");
    // duplicate was not re-sent: no stored post for pair-1, next pair fetched
    expect(service.posts.filter((p) => p.pair_id === "pair-1")).toHaveLength(0);
    expect(service.pairRequests).toBe(2);
  });

  it("keeps the choice re-submittable after a server error", async () => {
    fireLoad(root);
    service.failNextVoteWith(500);
    await app.choose("left");
    expect(root.querySelector(".status")!.textContent).toContain("vote failed");
    expect(answerButtons(root).every((b) => !b.disabled)).toBe(true);
    await app.choose("left");
    expect(service.posts).toHaveLength(1);
    expect(service.posts[0].pair_id).toBe("pair-1");
  });
});

describe("keyboard", () => {
  it.each([
    ["ArrowLeft", "left"],
    ["ArrowRight", "right"],
    [" ", "same"],
  ])("maps %s to %s", async (key, choice) => {
    fireLoad(root);
    document.dispatchEvent(new KeyboardEvent("keydown", { key }));
    await vi.waitFor(() => expect(service.posts).toHaveLength(1));
    expect(service.posts[0].choice).toBe(choice);
  });
});

describe("session identity", () => {
  it("generates one voter token and reuses it", () => {
    const store = new MemoryStore();
    const first = voterId(store);
    const second = voterId(store);
    expect(first).toMatch(/^[0-9a-f]{32}$/);
    expect(second).toBe(first);
  });

  it("votes carry the session voter id", async () => {
    fireLoad(root);
    await app.choose("right");
    expect(service.posts[0].voter).toBe(app.voter);
  });
});
