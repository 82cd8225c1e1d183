/** Pairwise voting UI: show two renderings, capture left/right/same.
 *
 * The client only ever sees opaque pair ids and per-side image tokens;
 * nothing about renditions, solutions or pair provenance reaches the DOM.
 * One vote at most leaves the client per served pair, and the answer
 * controls unlock only once both images finished loading.
 */

import { ApiError, Choice, StudyApi } from "./api.js";
import { KeyValueStore, voterId } from "./session.js";

interface CurrentPair {
  pairId: string;
  leftLoaded: boolean;
  rightLoaded: boolean;
  failed: boolean;
  voted: boolean;
}

const TEMPLATE = `
  <h1 class="question">Which image is more pleasant?</h1>
  <div class="pair">
    <figure class="side"><img class="side-left" alt="left image"></figure>
    <figure class="side"><img class="side-right" alt="right image"></figure>
  </div>
  <div class="controls">
    <button type="button" class="answer" data-choice="left">left</button>
    <button type="button" class="answer" data-choice="same">they are the same</button>
    <button type="button" class="answer" data-choice="right">right</button>
  </div>
  <div class="status" role="status"></div>
  <p class="hint">keys: &larr; left &nbsp; &rarr; right &nbsp; space same</p>
`;

export class VotingApp {
  readonly voter: string;
  private current: CurrentPair | null = null;
  private pending = false;
  private readonly removers: Array<() => void> = [];
  private readonly leftImg: HTMLImageElement;
  private readonly rightImg: HTMLImageElement;
  private readonly buttons: HTMLButtonElement[];
  private readonly status: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: StudyApi,
    store: KeyValueStore
  ) {
    this.voter = voterId(store);
    root.innerHTML = TEMPLATE;
    this.leftImg = root.querySelector(".side-left") as HTMLImageElement;
    this.rightImg = root.querySelector(".side-right") as HTMLImageElement;
    this.status = root.querySelector(".status") as HTMLElement;
    this.buttons = Array.from(root.querySelectorAll("button.answer"));
    for (const button of this.buttons) {
      button.addEventListener("click", () => {
        void this.choose(button.dataset.choice as Choice);
      });
    }
    this.leftImg.addEventListener("load", () => this.markLoaded("left"));
    this.rightImg.addEventListener("load", () => this.markLoaded("right"));
    this.leftImg.addEventListener("error", () => this.markFailed());
    this.rightImg.addEventListener("error", () => this.markFailed());
    this.setAnswersEnabled(false);
  }

  /** Wire arrow/space keys onto a document; undone by dispose(). */
  attachKeyboard(doc: Document): void {
    const handler = (event: KeyboardEvent) => {
      const mapping: Record<string, Choice> = {
        ArrowLeft: "left",
        ArrowRight: "right",
        " ": "same",
      };
      const choice = mapping[event.key];
      if (choice) {
        event.preventDefault();
        void this.choose(choice);
      }
    };
    doc.addEventListener("keydown", handler);
    this.removers.push(() => doc.removeEventListener("keydown", handler));
  }

  /** Detach document-level listeners (used when unmounting). */
  dispose(): void {
    for (const remove of this.removers.splice(0)) {
      remove();
    }
  }

  async start(): Promise<void> {
    await this.loadNextPair();
  }

  /** Fetch and render the next pair; on failure show a retry prompt. */
  async loadNextPair(): Promise<void> {
    this.current = null;
    this.setAnswersEnabled(false);
    this.setStatus("loading pair…");
    try {
      const pair = await this.api.fetchPair(this.voter);
      this.current = {
        pairId: pair.pair_id,
        leftLoaded: false,
        rightLoaded: false,
        failed: false,
        voted: false,
      };
      this.leftImg.src = this.api.imageUrl(pair.left_url);
      this.rightImg.src = this.api.imageUrl(pair.right_url);
      this.setStatus("");
    } catch {
      this.current = null;
      this.showRetry("cannot reach the study service");
    }
  }

  /** Submit the choice for the current pair; at most one vote can leave. */
  async choose(choice: Choice): Promise<void> {
    const pair = this.current;
    if (!pair || pair.voted || this.pending || !this.bothLoaded()) {
      return;
    }
    this.pending = true;
    this.setAnswersEnabled(false);
    try {
      await this.api.submitVote(pair.pairId, this.voter, choice);
      pair.voted = true;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        pair.voted = true; // duplicate: skip ahead, never retry this pair
      } else {
        this.pending = false;
        this.setStatus("vote failed — please try again");
        this.setAnswersEnabled(true);
        return;
      }
    }
    this.pending = false;
    await this.loadNextPair();
  }

  pairShown(): boolean {
    return this.current !== null;
  }

  private bothLoaded(): boolean {
    return !!this.current && this.current.leftLoaded && this.current.rightLoaded
      && !this.current.failed;
  }

  private markLoaded(side: "left" | "right"): void {
    if (!this.current) {
      return;
    }
    if (side === "left") {
      this.current.leftLoaded = true;
    } else {
      this.current.rightLoaded = true;
    }
    if (this.bothLoaded()) {
      this.setAnswersEnabled(true);
    }
  }

  private markFailed(): void {
    if (!this.current) {
      return;
    }
    this.current.failed = true;
    this.setAnswersEnabled(false);
    this.showRetry("an image failed to load");
  }

  private setAnswersEnabled(enabled: boolean): void {
    for (const button of this.buttons) {
      button.disabled = !enabled;
    }
  }

  private setStatus(text: string): void {
    this.status.textContent = text;
    const old = this.status.querySelector("button");
    if (old) {
      old.remove();
    }
  }

  private showRetry(message: string): void {
    this.setStatus(message + " ");
    const retry = this.root.ownerDocument.createElement("button");
    retry.type = "button";
    retry.className = "retry";
    retry.textContent = "retry";
    retry.addEventListener("click", () => {
      void this.loadNextPair();
    });
    this.status.appendChild(retry);
  }
}

export function mountApp(
  root: HTMLElement,
  baseUrl: string,
  store: KeyValueStore
): VotingApp {
  const app = new VotingApp(root, new StudyApi(baseUrl), store);
  app.attachKeyboard(root.ownerDocument);
  return app;
}

// boot only on a real page that carries the mount point
if (typeof document !== "undefined") {
  const root = document.getElementById("voting-root");
  if (root) {
    const app = mountApp(root, "", window.localStorage);
    void app.start();
  }
}
