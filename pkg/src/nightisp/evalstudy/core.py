"""Vote aggregation: honeypot bans, voter filtering, scores, leaderboards.

The preference tensor entry A[i][j][t] is 1 when voter t preferred
rendition i over j on a pair vote and 0 otherwise ("same" contributes to
neither side, unvoted combinations contribute 0). Per-scene rendition
scores are wins / (N*T) in literal mode, with N the number of evaluated
solutions and T the number of retained voters, or wins over the voter's
actual comparison count in observed mode. A solution's score is the mean
of its per-scene rendition scores.

If a voter answers the same pair more than once, their effective stance
is the majority of their answers (ties collapse to "same"), so results
never depend on vote order.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from ..errors import EmptyPool, MissingTime, UnknownRendition

CHOICES = ("left", "right", "same")


@dataclass(frozen=True)
class Rendition:
    """One solution's rendering of one scene, the unit being compared."""

    rendition_id: str
    solution_id: str
    scene_id: str
    image_path: str = ""


@dataclass(frozen=True)
class VoteRecord:
    """One forced-choice answer by one voter on one served pair."""

    vote_id: str
    left: str
    right: str
    voter_id: str
    choice: str
    honeypot: bool = False
    timestamp: float = 0.0

    def __post_init__(self):
        if self.choice not in CHOICES:
            raise ValueError(f"choice must be one of {CHOICES}, got {self.choice!r}")
        if self.left == self.right and not self.honeypot:
            raise ValueError("identical pair sides are only allowed for honeypots")

    def to_dict(self) -> dict:
        return {
            "vote_id": self.vote_id,
            "left": self.left,
            "right": self.right,
            "voter_id": self.voter_id,
            "choice": self.choice,
            "honeypot": self.honeypot,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "VoteRecord":
        return cls(
            vote_id=str(doc["vote_id"]),
            left=str(doc["left"]),
            right=str(doc["right"]),
            voter_id=str(doc["voter_id"]),
            choice=str(doc["choice"]),
            honeypot=bool(doc.get("honeypot", False)),
            timestamp=float(doc.get("timestamp", 0.0)),
        )


@dataclass(frozen=True)
class ScoreTable:
    """Per-rendition and per-solution preference scores."""

    rendition_scores: dict[str, float]
    solution_scores: dict[str, float]
    n: int  # evaluated solutions
    t: int  # retained voters
    banned_voters: frozenset[str] = field(default_factory=frozenset)
    mode: str = "literal"

    def to_dict(self) -> dict:
        return {
            "renditions": dict(sorted(self.rendition_scores.items())),
            "solutions": dict(sorted(self.solution_scores.items())),
            "n": self.n,
            "t": self.t,
            "banned_voters": sorted(self.banned_voters),
            "mode": self.mode,
        }


@dataclass(frozen=True)
class LeaderboardEntry:
    solution_id: str
    mean_score: float
    time_seconds: float  # math.inf marks an unbounded (manual) solution
    quality_rank: int
    efficiency_rank: int | None = None  # set only for the quality top-5

    def to_dict(self) -> dict:
        return {
            "solution_id": self.solution_id,
            "mean_score": self.mean_score,
            "time_seconds": "inf" if math.isinf(self.time_seconds) else self.time_seconds,
            "quality_rank": self.quality_rank,
            "efficiency_rank": self.efficiency_rank,
        }


def load_manifest(path: str | Path) -> list[Rendition]:
    """Read a rendition manifest (JSON list) and check uniqueness."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, list):
        raise ValueError("manifest must be a JSON list of rendition objects")
    renditions = [
        Rendition(
            rendition_id=str(e["rendition_id"]),
            solution_id=str(e["solution_id"]),
            scene_id=str(e["scene_id"]),
            image_path=str(e.get("image_path", "")),
        )
        for e in doc
    ]
    _check_manifest(renditions)
    return renditions


def _check_manifest(renditions: Sequence[Rendition]) -> None:
    ids = Counter(r.rendition_id for r in renditions)
    dupes = [rid for rid, c in ids.items() if c > 1]
    if dupes:
        raise ValueError(f"duplicate rendition_ids in manifest: {dupes}")
    pairs = Counter((r.solution_id, r.scene_id) for r in renditions)
    dupes = [p for p, c in pairs.items() if c > 1]
    if dupes:
        raise ValueError(f"duplicate (solution, scene) pairs in manifest: {dupes}")


def schedule_pair(
    pool: Sequence[Rendition], honeypot_rate: float, rng: random.Random
) -> tuple[Rendition, Rendition, bool]:
    """Draw the next comparison: a same-scene pair, or a flagged honeypot.

    With probability honeypot_rate the pair is one rendition shown twice.
    Otherwise a scene with at least two renditions is drawn uniformly and
    an unordered pair from it, side order randomized. Deterministic for a
    seeded ``rng``.
    """
    if not (0.0 <= honeypot_rate <= 1.0):
        raise ValueError(f"honeypot_rate must be in [0, 1], got {honeypot_rate}")
    if not pool:
        raise EmptyPool("no renditions to schedule")
    by_scene: dict[str, list[Rendition]] = defaultdict(list)
    for r in pool:
        by_scene[r.scene_id].append(r)
    if rng.random() < honeypot_rate:
        scene = rng.choice(sorted(by_scene))
        r = rng.choice(by_scene[scene])
        return r, r, True
    eligible = sorted(s for s, rs in by_scene.items() if len(rs) >= 2)
    if not eligible:
        raise EmptyPool("no scene has two renditions to compare")
    scene = rng.choice(eligible)
    left, right = rng.sample(by_scene[scene], 2)
    return left, right, False


def apply_bans(votes: Sequence[VoteRecord]) -> tuple[list[VoteRecord], frozenset[str]]:
    """Ban voters who answered left/right on any honeypot.

    A banned voter's entire history is removed, before and after the
    offense. Idempotent.
    """
    banned = frozenset(
        v.voter_id for v in votes if v.honeypot and v.choice in ("left", "right")
    )
    clean = [v for v in votes if v.voter_id not in banned]
    return clean, banned


def _effective_votes(votes: Iterable[VoteRecord]) -> dict[tuple[str, tuple[str, str]], str | None]:
    """One stance per (voter, unordered pair): preferred rendition id or None.

    Repeat answers reduce by majority; any tie (including preferred-vs-same)
    collapses to None, so the result is independent of vote order.
    """
    tallies: dict[tuple[str, tuple[str, str]], Counter] = defaultdict(Counter)
    for v in votes:
        if v.honeypot:
            continue
        key = (v.voter_id, tuple(sorted((v.left, v.right))))
        tallies[key][_winner(v)] += 1
    effective = {}
    for key, counts in tallies.items():
        top = counts.most_common()
        if len(top) > 1 and top[0][1] == top[1][1]:
            effective[key] = None
        else:
            effective[key] = top[0][0]
    return effective


def _winner(v: VoteRecord) -> str | None:
    if v.choice == "left":
        return v.left
    if v.choice == "right":
        return v.right
    return None


def select_top_voters(votes: Sequence[VoteRecord], fraction: float) -> frozenset[str]:
    """Keep the best-agreeing fraction of voters.

    A voter's agreement score is the share of their effective votes whose
    outcome is among the modal outcomes for that pair. Ranking ties break
    by vote count, then voter id; ceil(fraction * V) voters survive.
    """
    if not (0.0 < fraction <= 1.0):
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    voters = sorted({v.voter_id for v in votes})
    if not voters:
        return frozenset()
    effective = _effective_votes(votes)

    outcome_counts: dict[tuple[str, str], Counter] = defaultdict(Counter)
    for (_voter, pair), stance in effective.items():
        outcome_counts[pair][stance or "same"] += 1
    modal: dict[tuple[str, str], set] = {}
    for pair, counts in outcome_counts.items():
        top = max(counts.values())
        modal[pair] = {choice for choice, c in counts.items() if c == top}

    agreements: Counter = Counter()
    totals: Counter = Counter()
    for (voter, pair), stance in effective.items():
        totals[voter] += 1
        if (stance or "same") in modal[pair]:
            agreements[voter] += 1

    def rank_key(voter: str):
        total = totals[voter]
        score = agreements[voter] / total if total else 0.0
        return (-score, -total, voter)

    keep = math.ceil(fraction * len(voters))
    return frozenset(sorted(voters, key=rank_key)[:keep])


def compute_scores(
    votes: Sequence[VoteRecord],
    renditions: Sequence[Rendition],
    mode: str = "literal",
    half_credit_same: bool = False,
) -> ScoreTable:
    """Aggregate retained votes into per-rendition and per-solution scores.

    literal: per-scene S_i = wins_i / (N*T). observed: S_i = wins_i over
    the number of comparisons actually involving i. By default a "same"
    answer credits neither side; ``half_credit_same`` grants 0.5 to each
    instead. Vote order and voter labels do not affect the result.
    """
    if mode not in ("literal", "observed"):
        raise ValueError(f"mode must be 'literal' or 'observed', got {mode!r}")
    _check_manifest(renditions)
    by_id = {r.rendition_id: r for r in renditions}
    for v in votes:
        if v.honeypot:
            continue
        for rid in (v.left, v.right):
            if rid not in by_id:
                raise UnknownRendition(f"vote {v.vote_id} references unknown rendition {rid!r}")
        if by_id[v.left].scene_id != by_id[v.right].scene_id:
            raise ValueError(f"vote {v.vote_id} pairs renditions from different scenes")

    effective = _effective_votes(votes)
    n_solutions = len({r.solution_id for r in renditions})
    t_voters = len({voter for (voter, _pair) in effective})

    wins: Counter = Counter()
    comparisons: Counter = Counter()
    for (_voter, pair), stance in effective.items():
        comparisons[pair[0]] += 1
        comparisons[pair[1]] += 1
        if stance is not None:
            wins[stance] += 1
        elif half_credit_same:
            wins[pair[0]] += 0.5
            wins[pair[1]] += 0.5

    rendition_scores: dict[str, float] = {}
    for r in renditions:
        if mode == "literal":
            denom = n_solutions * t_voters
            rendition_scores[r.rendition_id] = wins[r.rendition_id] / denom if denom else 0.0
        else:
            c = comparisons[r.rendition_id]
            rendition_scores[r.rendition_id] = wins[r.rendition_id] / c if c else 0.0

    per_solution: dict[str, list[tuple[str, float]]] = defaultdict(list)
    for r in renditions:
        per_solution[r.solution_id].append((r.scene_id, rendition_scores[r.rendition_id]))
    solution_scores = {
        sol: sum(s for _scene, s in sorted(entries)) / len(entries)
        for sol, entries in per_solution.items()
    }
    return ScoreTable(
        rendition_scores=rendition_scores,
        solution_scores=solution_scores,
        n=n_solutions,
        t=t_voters,
        mode=mode,
    )


def score_study(
    votes: Sequence[VoteRecord],
    renditions: Sequence[Rendition],
    top_fraction: float = 1.0,
    mode: str = "literal",
    half_credit_same: bool = False,
) -> ScoreTable:
    """Full scoring path: honeypot bans, best-voter filtering, aggregation."""
    clean, banned = apply_bans(votes)
    if clean and 0.0 < top_fraction < 1.0:
        retained = select_top_voters(clean, top_fraction)
        clean = [v for v in clean if v.voter_id in retained]
    table = compute_scores(clean, renditions, mode=mode, half_credit_same=half_credit_same)
    return ScoreTable(
        rendition_scores=table.rendition_scores,
        solution_scores=table.solution_scores,
        n=table.n,
        t=table.t,
        banned_voters=banned,
        mode=table.mode,
    )


def load_times(path: str | Path) -> dict[str, float]:
    """Read the solution -> seconds map; "inf" marks unbounded entries."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    times = {}
    for sol, value in doc.items():
        times[str(sol)] = float(value)  # float("inf") parses the "inf" marker
    return times


def leaderboard(
    scores: ScoreTable, times: dict[str, float]
) -> list[LeaderboardEntry]:
    """Quality ranking by score, efficiency re-ranking of the top 5 by time.

    Quality ties break by time ascending then solution id; the efficiency
    table re-sorts the quality top-5 by time with unbounded entries last.
    """
    missing = sorted(set(scores.solution_scores) - set(times))
    if missing:
        raise MissingTime(f"no time entry for solutions: {missing}")
    by_quality = sorted(
        scores.solution_scores.items(), key=lambda kv: (-kv[1], times[kv[0]], kv[0])
    )
    entries = [
        LeaderboardEntry(
            solution_id=sol,
            mean_score=score,
            time_seconds=times[sol],
            quality_rank=rank,
        )
        for rank, (sol, score) in enumerate(by_quality, start=1)
    ]
    top5 = sorted(entries[:5], key=lambda e: (e.time_seconds, e.quality_rank))
    eff_rank = {e.solution_id: i for i, e in enumerate(top5, start=1)}
    return [
        LeaderboardEntry(
            solution_id=e.solution_id,
            mean_score=e.mean_score,
            time_seconds=e.time_seconds,
            quality_rank=e.quality_rank,
            efficiency_rank=eff_rank.get(e.solution_id),
        )
        for e in entries
    ]


def format_leaderboards(entries: Sequence[LeaderboardEntry]) -> str:
    """Aligned text rendering of the quality table and the efficiency top-5."""

    def fmt_time(t: float) -> str:
        return "inf" if math.isinf(t) else f"{t:.1f}"

    width = max(len(e.solution_id) for e in entries) if entries else 8
    lines = ["quality leaderboard:"]
    for e in entries:
        lines.append(
            f"  {e.quality_rank:>2}  {e.solution_id:<{width}}  "
            f"{e.mean_score:.2f}  {fmt_time(e.time_seconds):>7}s"
        )
    lines.append("efficiency leaderboard (quality top-5 by time):")
    for e in sorted(
        (e for e in entries if e.efficiency_rank is not None),
        key=lambda e: e.efficiency_rank,
    ):
        lines.append(
            f"  {e.efficiency_rank:>2}  {e.solution_id:<{width}}  "
            f"{e.mean_score:.2f}  {fmt_time(e.time_seconds):>7}s"
        )
    return "\n".join(lines)
