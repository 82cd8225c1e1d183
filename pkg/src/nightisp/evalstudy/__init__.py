"""Pairwise subjective-evaluation machinery.

Pair scheduling with honeypots, fraud filtering, preference-score
aggregation, quality/efficiency leaderboards, and a small HTTP service
consumed by the voting frontend.
"""

from .core import (
    LeaderboardEntry,
    Rendition,
    ScoreTable,
    VoteRecord,
    apply_bans,
    compute_scores,
    format_leaderboards,
    leaderboard,
    load_manifest,
    load_times,
    schedule_pair,
    score_study,
    select_top_voters,
)
from .store import VoteStore

__all__ = [
    "LeaderboardEntry",
    "Rendition",
    "ScoreTable",
    "VoteRecord",
    "VoteStore",
    "apply_bans",
    "compute_scores",
    "format_leaderboards",
    "leaderboard",
    "load_manifest",
    "load_times",
    "schedule_pair",
    "score_study",
    "select_top_voters",
]
