/** Anonymous voter identity, generated once and kept in local storage. */

const KEY = "voting-ui.voter-id";

export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

function randomToken(): string {
  const bytes = new Uint8Array(16);
  crypto.getRandomValues(bytes);
  return Array.from(bytes, (b) => b.toString(16).padStart(2, "0")).join("");
}

export function voterId(store: KeyValueStore): string {
  let id = store.getItem(KEY);
  if (!id) {
    id = randomToken();
    store.setItem(KEY, id);
  }
  return id;
}
