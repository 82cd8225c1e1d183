"""HTTP study service consumed by the voting frontend.

Endpoints:
    GET  /api/pair?voter=<id>  -> {"pair_id", "left_url", "right_url"}
    POST /api/vote             <- {"pair_id", "voter", "choice"}
    GET  /api/scores           -> current ScoreTable (bans + filtering applied)
    GET  /img/<token>          -> image bytes

Pair-side image URLs carry opaque per-side tokens, never rendition or
solution identifiers, so clients cannot tell a honeypot (the same file
served under two distinct tokens) from a real pair. Votes are appended
durably before the response is sent.
"""

from __future__ import annotations

import json
import mimetypes
import random
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .core import CHOICES, Rendition, VoteRecord, schedule_pair, score_study
from .store import VoteStore


@dataclass(frozen=True)
class PendingPair:
    pair_id: str
    voter_id: str
    left: Rendition
    right: Rendition
    honeypot: bool
    left_token: str
    right_token: str


class Study:
    """Scheduling and vote bookkeeping behind the HTTP handler."""

    def __init__(
        self,
        manifest: list[Rendition],
        store: VoteStore,
        honeypot_rate: float = 0.1,
        seed: int = 0,
        top_fraction: float = 1.0,
        mode: str = "literal",
    ):
        if not manifest:
            raise ValueError("manifest is empty")
        for r in manifest:
            if not Path(r.image_path).is_file():
                raise FileNotFoundError(f"rendition {r.rendition_id}: missing {r.image_path}")
        self.manifest = manifest
        self.store = store
        self.honeypot_rate = honeypot_rate
        self.top_fraction = top_fraction
        self.mode = mode
        self._rng = random.Random(seed)
        self._lock = threading.Lock()
        self._pending: dict[str, PendingPair] = {}
        self._tokens: dict[str, str] = {}  # side token -> image path
        self._voted: set[str] = store.voted_pair_ids()

    def next_pair(self, voter_id: str) -> PendingPair:
        with self._lock:
            left, right, honeypot = schedule_pair(self.manifest, self.honeypot_rate, self._rng)
            pair_id = f"{self._rng.getrandbits(64):016x}"
            lt = f"{self._rng.getrandbits(64):016x}"
            rt = f"{self._rng.getrandbits(64):016x}"
            pending = PendingPair(pair_id, voter_id, left, right, honeypot, lt, rt)
            self._pending[pair_id] = pending
            self._tokens[lt] = left.image_path
            self._tokens[rt] = right.image_path
            return pending

    def submit(self, pair_id: str, voter_id: str, choice: str) -> tuple[int, str]:
        """Record a vote; returns (http_status, message)."""
        if choice not in CHOICES:
            return 400, f"choice must be one of {CHOICES}"
        with self._lock:
            pending = self._pending.get(pair_id)
            if pending is None:
                return 404, "unknown pair_id"
            if pair_id in self._voted:
                return 409, "pair already voted"
            if pending.voter_id != voter_id:
                return 400, "pair was served to a different voter"
            self._voted.add(pair_id)
        vote = VoteRecord(
            vote_id=pair_id,
            left=pending.left.rendition_id,
            right=pending.right.rendition_id,
            voter_id=voter_id,
            choice=choice,
            honeypot=pending.honeypot,
            timestamp=time.time(),
        )
        self.store.append(vote)  # durable before the 200 goes out
        return 200, "ok"

    def scores(self) -> dict:
        table = score_study(
            self.store.load(), self.manifest, top_fraction=self.top_fraction, mode=self.mode
        )
        return table.to_dict()

    def image_path(self, token: str) -> str | None:
        with self._lock:
            return self._tokens.get(token)


class StudyHandler(BaseHTTPRequestHandler):
    study: Study  # set on the server class
    ui_dir: Path | None = None

    def log_message(self, fmt, *args):  # quiet by default; tests hate log spam
        pass

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_file(self, path: Path) -> None:
        data = path.read_bytes()
        ctype = mimetypes.guess_type(str(path))[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        if url.path == "/api/pair":
            voter = parse_qs(url.query).get("voter", [""])[0]
            if not voter:
                self._send_json(400, {"error": "missing voter parameter"})
                return
            pending = self.study.next_pair(voter)
            self._send_json(
                200,
                {
                    "pair_id": pending.pair_id,
                    "left_url": f"/img/{pending.left_token}",
                    "right_url": f"/img/{pending.right_token}",
                },
            )
        elif url.path == "/api/scores":
            self._send_json(200, self.study.scores())
        elif len(parts) == 2 and parts[0] == "img":
            path = self.study.image_path(parts[1])
            if path is None:
                self._send_json(404, {"error": "unknown image"})
            else:
                self._send_file(Path(path))
        elif self.ui_dir is not None:
            rel = url.path.lstrip("/") or "index.html"
            candidate = (self.ui_dir / rel).resolve()
            if candidate.is_file() and self.ui_dir.resolve() in candidate.parents:
                self._send_file(candidate)
            else:
                self._send_json(404, {"error": "not found"})
        else:
            self._send_json(404, {"error": "not found"})

    def do_POST(self):
        if urlparse(self.path).path != "/api/vote":
            self._send_json(404, {"error": "not found"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            doc = json.loads(self.rfile.read(length).decode("utf-8"))
            pair_id = str(doc["pair_id"])
            voter = str(doc["voter"])
            choice = str(doc["choice"])
        except (KeyError, ValueError, json.JSONDecodeError):
            self._send_json(400, {"error": "malformed vote"})
            return
        status, message = self.study.submit(pair_id, voter, choice)
        self._send_json(status, {"ok": status == 200, "message": message})


def make_server(
    manifest: list[Rendition],
    store: VoteStore,
    port: int = 0,
    honeypot_rate: float = 0.1,
    seed: int = 0,
    top_fraction: float = 1.0,
    mode: str = "literal",
    ui_dir: str | Path | None = None,
    host: str = "127.0.0.1",
) -> ThreadingHTTPServer:
    """Build the HTTP server; port 0 picks a free port (server.server_port)."""
    study = Study(
        manifest,
        store,
        honeypot_rate=honeypot_rate,
        seed=seed,
        top_fraction=top_fraction,
        mode=mode,
    )
    handler = type(
        "BoundStudyHandler",
        (StudyHandler,),
        {"study": study, "ui_dir": Path(ui_dir) if ui_dir else None},
    )
    return ThreadingHTTPServer((host, port), handler)
