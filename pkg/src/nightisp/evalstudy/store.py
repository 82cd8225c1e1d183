"""Append-only line-delimited JSON vote store.

One VoteRecord object per line; appends are flushed and fsynced before
the caller is acknowledged, so an acknowledged vote survives a crash.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path

from .core import VoteRecord


class VoteStore:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, vote: VoteRecord) -> None:
        line = json.dumps(vote.to_dict(), separators=(",", ":")) + "\n"
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())

    def load(self) -> list[VoteRecord]:
        if not self.path.exists():
            return []
        votes = []
        with self._lock, open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    votes.append(VoteRecord.from_dict(json.loads(line)))
        return votes

    def voted_pair_ids(self) -> set[str]:
        return {v.vote_id for v in self.load()}
