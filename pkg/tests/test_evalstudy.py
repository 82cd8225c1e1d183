"""evalstudy: scheduling, bans, voter filtering, scoring, leaderboards."""

import itertools
import math
import random

import pytest

from nightisp.errors import EmptyPool, MissingTime, UnknownRendition
from nightisp.evalstudy import (
    Rendition,
    ScoreTable,
    VoteRecord,
    apply_bans,
    compute_scores,
    leaderboard,
    load_times,
    schedule_pair,
    score_study,
    select_top_voters,
)
from nightisp.evalstudy.core import format_leaderboards

TABLE_SCORES = {
    "DH-AISP": 0.74, "MiAlgo": 0.73, "IVLTeam": 0.67, "SCBC": 0.62,
    "Manual enhancement": 0.53, "IIR-Lab": 0.46, "PolyuColor": 0.43,
    "OzUVGL": 0.35, "baseline": 0.31,
}
TABLE_TIMES = {
    "DH-AISP": 16.3, "MiAlgo": 1.5, "IVLTeam": 5.8, "SCBC": 3.2,
    "Manual enhancement": math.inf, "IIR-Lab": 23.0, "PolyuColor": 3.1,
    "OzUVGL": 144.8, "baseline": 23.0,
}
QUALITY_ORDER = [
    "DH-AISP", "MiAlgo", "IVLTeam", "SCBC", "Manual enhancement",
    "IIR-Lab", "PolyuColor", "OzUVGL", "baseline",
]
EFFICIENCY_ORDER = ["MiAlgo", "SCBC", "IVLTeam", "DH-AISP", "Manual enhancement"]


def rends_one_scene(n=3, scene="sc"):
    return [Rendition(f"{scene}-{i}", f"sol{i}", scene) for i in range(n)]


def vote(vid, left, right, voter, choice, honeypot=False):
    return VoteRecord(vid, left, right, voter, choice, honeypot=honeypot)


class TestSchedulePair:
    def pool(self):
        out = []
        for scene in ("a", "b"):
            for sol in range(3):
                out.append(Rendition(f"{scene}{sol}", f"sol{sol}", scene))
        return out

    def test_rate_zero_never_honeypots(self):
        rng = random.Random(0)
        for _ in range(10_000):
            left, right, hp = schedule_pair(self.pool(), 0.0, rng)
            assert not hp
            assert left.rendition_id != right.rendition_id

    def test_rate_one_always_honeypots(self):
        rng = random.Random(0)
        for _ in range(200):
            left, right, hp = schedule_pair(self.pool(), 1.0, rng)
            assert hp
            assert left.rendition_id == right.rendition_id

    def test_rate_monte_carlo(self):
        rng = random.Random(7)
        n = 100_000
        hits = sum(schedule_pair(self.pool(), 0.1, rng)[2] for _ in range(n))
        assert 0.09 <= hits / n <= 0.11

    def test_pairs_share_scene(self):
        rng = random.Random(3)
        for _ in range(500):
            left, right, _ = schedule_pair(self.pool(), 0.2, rng)
            assert left.scene_id == right.scene_id

    def test_deterministic_under_seed(self):
        a = [schedule_pair(self.pool(), 0.3, random.Random(5)) for _ in range(1)]
        seq1 = [schedule_pair(self.pool(), 0.3, random.Random(9)) for _ in range(20)]
        rng = random.Random(9)
        seq2 = [schedule_pair(self.pool(), 0.3, rng) for _ in range(1)]
        rng2 = random.Random(9)
        seq3 = [schedule_pair(self.pool(), 0.3, rng2) for _ in range(1)]
        assert seq2 == seq3

    def test_empty_pool(self):
        with pytest.raises(EmptyPool):
            schedule_pair([], 0.1, random.Random(0))

    def test_no_pairable_scene(self):
        pool = [Rendition("only", "sol", "scene")]
        with pytest.raises(EmptyPool):
            schedule_pair(pool, 0.0, random.Random(0))
        # honeypots still possible with one rendition
        left, right, hp = schedule_pair(pool, 1.0, random.Random(0))
        assert hp and left.rendition_id == "only"


class TestVoteRecord:
    def test_bad_choice(self):
        with pytest.raises(ValueError):
            vote("v", "a", "b", "t", "maybe")

    def test_identical_pair_needs_honeypot(self):
        with pytest.raises(ValueError):
            vote("v", "a", "a", "t", "same")
        vote("v", "a", "a", "t", "same", honeypot=True)

    def test_round_trip(self):
        v = vote("v1", "a", "b", "t", "left", honeypot=False)
        assert VoteRecord.from_dict(v.to_dict()) == v


class TestApplyBans:
    def test_no_violations(self):
        votes = [vote("1", "a", "b", "v", "left")]
        clean, banned = apply_bans(votes)
        assert clean == votes and banned == frozenset()

    def test_violator_loses_entire_history(self):
        votes = [
            vote("1", "a", "b", "bad", "left"),          # before the offense
            vote("2", "a", "a", "bad", "right", True),   # the offense
            vote("3", "a", "b", "bad", "same"),          # after
            vote("4", "a", "b", "good", "right"),
        ]
        clean, banned = apply_bans(votes)
        assert banned == frozenset({"bad"})
        assert [v.voter_id for v in clean] == ["good"]

    def test_same_on_honeypot_retained(self):
        votes = [vote("1", "a", "a", "careful", "same", True), vote("2", "a", "b", "careful", "left")]
        clean, banned = apply_bans(votes)
        assert banned == frozenset()
        assert len(clean) == 2

    def test_idempotent(self):
        votes = [
            vote("1", "a", "a", "bad", "left", True),
            vote("2", "a", "b", "good", "right"),
        ]
        clean, banned = apply_bans(votes)
        clean2, banned2 = apply_bans(clean)
        assert clean2 == clean and banned2 == frozenset()


class TestSelectTopVoters:
    def test_fraction_one_keeps_all(self):
        votes = [vote(str(i), "a", "b", f"v{i}", "left") for i in range(5)]
        assert len(select_top_voters(votes, 1.0)) == 5

    def test_single_voter_always_kept(self):
        votes = [vote("1", "a", "b", "solo", "left")]
        assert select_top_voters(votes, 0.1) == frozenset({"solo"})

    def test_contrarian_excluded(self):
        votes = []
        k = 0
        for v in range(10):
            choice = "right" if v == 9 else "left"
            for a, b in (("r0", "r1"), ("r0", "r2"), ("r1", "r2")):
                votes.append(vote(str(k), a, b, f"v{v}", choice))
                k += 1
        kept = select_top_voters(votes, 0.9)
        assert "v9" not in kept and len(kept) == 9

    def test_ceiling_rule(self):
        votes = [vote(str(i), "a", "b", f"v{i}", "left") for i in range(10)]
        assert len(select_top_voters(votes, 0.25)) == math.ceil(2.5)

    def test_bad_fraction(self):
        with pytest.raises(ValueError):
            select_top_voters([], 0.0)


class TestComputeScores:
    def test_worked_example(self):
        rends = [Rendition(r, f"sol_{r}", "s") for r in "abc"]
        votes = []
        i = 0
        for voter in ("t1", "t2"):
            for left, right in (("a", "b"), ("a", "c"), ("b", "c")):
                votes.append(vote(str(i), left, right, voter, "left"))
                i += 1
        table = compute_scores(votes, rends, mode="literal")
        assert table.rendition_scores == {"a": 4 / 6, "b": 2 / 6, "c": 0.0}
        assert table.n == 3 and table.t == 2

    def test_all_same_is_zero(self):
        rends = rends_one_scene(3)
        votes = [vote("1", "sc-0", "sc-1", "v", "same")]
        table = compute_scores(votes, rends)
        assert set(table.rendition_scores.values()) == {0.0}

    def test_no_votes(self):
        table = compute_scores([], rends_one_scene(4))
        assert table.t == 0
        assert set(table.rendition_scores.values()) == {0.0}

    def test_unknown_rendition(self):
        with pytest.raises(UnknownRendition):
            compute_scores([vote("1", "ghost", "sc-0", "v", "left")], rends_one_scene(2))

    def test_cross_scene_pair_rejected(self):
        rends = [Rendition("a", "s1", "x"), Rendition("b", "s1", "y")]
        with pytest.raises(ValueError):
            compute_scores([vote("1", "a", "b", "v", "left")], rends)

    def test_vote_order_permutation_invariant(self):
        rends = rends_one_scene(3)
        votes = [
            vote("1", "sc-0", "sc-1", "v1", "left"),
            vote("2", "sc-1", "sc-0", "v1", "right"),  # repeat pair, same stance
            vote("3", "sc-0", "sc-2", "v1", "right"),
            vote("4", "sc-1", "sc-2", "v2", "same"),
        ]
        tables = [
            compute_scores(list(perm), rends).rendition_scores
            for perm in itertools.permutations(votes)
        ]
        assert all(t == tables[0] for t in tables)

    def test_conflicting_repeats_collapse_to_same(self):
        rends = rends_one_scene(2)
        votes = [
            vote("1", "sc-0", "sc-1", "v", "left"),
            vote("2", "sc-0", "sc-1", "v", "right"),
        ]
        table = compute_scores(votes, rends)
        assert set(table.rendition_scores.values()) == {0.0}

    def test_majority_of_repeats_wins(self):
        rends = rends_one_scene(2)
        votes = [
            vote("1", "sc-0", "sc-1", "v", "left"),
            vote("2", "sc-0", "sc-1", "v", "left"),
            vote("3", "sc-0", "sc-1", "v", "right"),
        ]
        table = compute_scores(votes, rends)
        assert table.rendition_scores["sc-0"] == 1 / 2  # one win / (N=2 * T=1)

    def test_observed_mode_normalizes_by_comparisons(self):
        rends = rends_one_scene(3)
        votes = [
            vote("1", "sc-0", "sc-1", "v1", "left"),
            vote("2", "sc-0", "sc-2", "v1", "same"),
        ]
        table = compute_scores(votes, rends, mode="observed")
        assert table.rendition_scores["sc-0"] == 1 / 2  # won 1 of its 2 comparisons
        assert table.rendition_scores["sc-1"] == 0.0
        assert table.rendition_scores["sc-2"] == 0.0

    def test_voter_relabeling_invariant(self):
        rends = rends_one_scene(3)
        votes = [
            vote("1", "sc-0", "sc-1", "alice", "left"),
            vote("2", "sc-1", "sc-2", "bob", "right"),
        ]
        relabeled = [
            VoteRecord(v.vote_id, v.left, v.right, "x" + v.voter_id, v.choice) for v in votes
        ]
        assert (
            compute_scores(votes, rends).rendition_scores
            == compute_scores(relabeled, rends).rendition_scores
        )

    def test_pairwise_upper_bound(self):
        """A rendition cannot exceed (N-1)/N in literal mode."""
        rends = rends_one_scene(4)
        votes = []
        k = 0
        for voter in ("v1", "v2", "v3"):
            for j in range(1, 4):
                votes.append(vote(str(k), "sc-0", f"sc-{j}", voter, "left"))
                k += 1
        table = compute_scores(votes, rends)
        n = table.n
        assert all(s <= (n - 1) / n for s in table.rendition_scores.values())

    def test_per_solution_mean_over_scenes(self):
        rends = [
            Rendition("s1-a", "A", "s1"), Rendition("s1-b", "B", "s1"),
            Rendition("s2-a", "A", "s2"), Rendition("s2-b", "B", "s2"),
        ]
        votes = [
            vote("1", "s1-a", "s1-b", "v", "left"),   # A wins scene 1
            vote("2", "s2-a", "s2-b", "v", "right"),  # B wins scene 2
        ]
        table = compute_scores(votes, rends)
        assert table.solution_scores["A"] == pytest.approx(
            (table.rendition_scores["s1-a"] + table.rendition_scores["s2-a"]) / 2
        )


class TestScoreStudy:
    def test_bans_flow_into_table(self):
        rends = rends_one_scene(2)
        votes = [
            vote("1", "sc-0", "sc-0", "cheat", "left", honeypot=True),
            vote("2", "sc-0", "sc-1", "cheat", "left"),
            vote("3", "sc-0", "sc-1", "fair", "right"),
        ]
        table = score_study(votes, rends)
        assert table.banned_voters == frozenset({"cheat"})
        assert table.t == 1
        assert table.rendition_scores["sc-1"] == 1 / 2

    def test_top_fraction_filtering_applied(self):
        rends = rends_one_scene(2)
        votes = [vote(str(i), "sc-0", "sc-1", f"v{i}", "left") for i in range(4)]
        votes.append(vote("99", "sc-0", "sc-1", "odd", "right"))
        table = score_study(votes, rends, top_fraction=0.5)
        assert table.t == 3  # ceil(0.5 * 5)


class TestLeaderboard:
    def table(self):
        return ScoreTable(rendition_scores={}, solution_scores=TABLE_SCORES, n=9, t=100)

    def test_quality_order_matches_published_table(self):
        entries = leaderboard(self.table(), TABLE_TIMES)
        assert [e.solution_id for e in entries] == QUALITY_ORDER
        assert [e.quality_rank for e in entries] == list(range(1, 10))

    def test_efficiency_reranks_top_five(self):
        entries = leaderboard(self.table(), TABLE_TIMES)
        eff = sorted(
            (e for e in entries if e.efficiency_rank is not None),
            key=lambda e: e.efficiency_rank,
        )
        assert [e.solution_id for e in eff] == EFFICIENCY_ORDER
        assert all(e.efficiency_rank is None for e in entries[5:])

    def test_unbounded_time_sorts_last(self):
        entries = leaderboard(self.table(), TABLE_TIMES)
        eff = [e for e in entries if e.efficiency_rank is not None]
        slowest = max(eff, key=lambda e: e.efficiency_rank)
        assert math.isinf(slowest.time_seconds)

    def test_single_solution_rank_one_in_both(self):
        table = ScoreTable(rendition_scores={}, solution_scores={"only": 0.5}, n=1, t=1)
        entries = leaderboard(table, {"only": 2.0})
        assert entries[0].quality_rank == 1
        assert entries[0].efficiency_rank == 1

    def test_missing_time(self):
        with pytest.raises(MissingTime):
            leaderboard(self.table(), {k: v for k, v in TABLE_TIMES.items() if k != "SCBC"})

    def test_quality_tie_breaks_by_time(self):
        table = ScoreTable(
            rendition_scores={}, solution_scores={"slow": 0.5, "fast": 0.5}, n=2, t=1
        )
        entries = leaderboard(table, {"slow": 9.0, "fast": 1.0})
        assert entries[0].solution_id == "fast"

    def test_formatting(self):
        text = format_leaderboards(leaderboard(self.table(), TABLE_TIMES))
        assert "quality leaderboard:" in text
        assert "inf" in text

    def test_times_loader_parses_inf(self, tmp_path):
        path = tmp_path / "times.json"
        path.write_text('{"a": 1.5, "b": "inf"}')
        times = load_times(path)
        assert times["a"] == 1.5 and math.isinf(times["b"])


class TestHalfCreditSame:
    def test_default_off_same_credits_nobody(self):
        rends = rends_one_scene(2)
        votes = [vote("1", "sc-0", "sc-1", "v", "same")]
        table = compute_scores(votes, rends)
        assert set(table.rendition_scores.values()) == {0.0}

    def test_flag_grants_half_to_each_side(self):
        rends = rends_one_scene(2)
        votes = [vote("1", "sc-0", "sc-1", "v", "same")]
        table = compute_scores(votes, rends, half_credit_same=True)
        assert table.rendition_scores == {"sc-0": 0.25, "sc-1": 0.25}  # 0.5/(N=2 * T=1)

    def test_pairwise_sum_still_bounded(self):
        rends = rends_one_scene(2)
        votes = [vote("1", "sc-0", "sc-1", "v", "same")]
        table = compute_scores(votes, rends, half_credit_same=True)
        # A_ijt + A_jit stays <= 1 under the half-credit convention
        assert table.rendition_scores["sc-0"] + table.rendition_scores["sc-1"] <= 1 / 2
