import numpy as np
import pytest

from minumatch import (
    AlignmentParams,
    MatchConfig,
    Minutia,
    MinutiaTemplate,
    MinutiaType,
    PairEntry,
    PairQueue,
    SynthParams,
    angle_diff,
    generate_base,
    generate_impression,
    match_score,
    pair_displacement,
    refine_once,
    resolve_one_to_one,
    run_matcher,
)

from conftest import random_template, rotated_copy

E = MinutiaType.ENDING
CFG = MatchConfig()
# the spec examples for the displacement metric state these scales outright
EXAMPLE_CFG = MatchConfig(c1=1.0 / 16.0, c2=1.0 / 25.0)


def spaced_template(n, box=300, margin=40, seed=5):
    """Well-separated random template, inset from the box edge."""
    params = SynthParams(
        n_minutiae=(n, n),
        width=box - 2 * margin,
        height=box - 2 * margin,
        min_spacing=20.0,
    )
    inner = generate_base(params, seed=seed)
    minutiae = tuple(
        Minutia(m.x + margin, m.y + margin, m.direction, m.mtype, m.quality)
        for m in inner.minutiae
    )
    return MinutiaTemplate(minutiae, box, box, "spaced")


class TestPairDisplacement:
    def test_perfectly_aligned_pair(self):
        mi = Minutia(10, 10, 45, E)
        mk = Minutia(10, 10, 45, E)
        assert pair_displacement(mi, mk, AlignmentParams(0, 0, 0), CFG) == 0.0

    def test_angular_wraparound(self):
        mi = Minutia(10, 10, 350, E)
        mk = Minutia(10, 10, 10, E)
        delta = pair_displacement(mi, mk, AlignmentParams(0, 0, 0), EXAMPLE_CFG)
        assert delta == pytest.approx(16.0)  # (20 deg)^2 / 25

    def test_positional_residual(self):
        mi = Minutia(0, 0, 90, E)
        mk = Minutia(3, 4, 90, E)
        delta = pair_displacement(mi, mk, AlignmentParams(0, 0, 0), EXAMPLE_CFG)
        assert delta == pytest.approx(25.0 / 16.0)

    def test_rotation_enters_both_terms(self):
        mi = Minutia(1, 0, 0, E)
        mk = Minutia(0, 1, 90, E)
        delta = pair_displacement(mi, mk, AlignmentParams(90, 0, 0), EXAMPLE_CFG)
        assert delta == pytest.approx(0.0, abs=1e-12)


class TestRefineOnce:
    def make_queue_pair(self, offsets):
        u = MinutiaTemplate(
            tuple(Minutia(50.0 * (i + 1), 50, 0, E) for i in range(len(offsets))),
            400, 400,
        )
        v = MinutiaTemplate(
            tuple(
                Minutia(50.0 * (i + 1) + dx, 50, 0, E)
                for i, dx in enumerate(offsets)
            ),
            400, 400,
        )
        n = len(offsets)
        q = PairQueue(np.arange(n), np.arange(n), np.ones(n), n, n)
        return q, u, v

    def test_all_removed(self):
        q, u, v = self.make_queue_pair([100.0, 120.0, 90.0])
        removed = refine_once(q, u, v, AlignmentParams(0, 0, 0), 24.0, EXAMPLE_CFG)
        assert removed == 3
        assert len(q) == 0

    def test_zero_displacement_keeps_weight_one(self):
        q, u, v = self.make_queue_pair([0.0])
        removed = refine_once(q, u, v, AlignmentParams(0, 0, 0), 24.0, EXAMPLE_CFG)
        assert removed == 0
        assert q.weight[0] == 1.0

    def test_weight_fraction_of_threshold(self):
        # positional offset sqrt(18 * 16) gives displacement 18 at c1 = 1/16
        q, u, v = self.make_queue_pair([np.sqrt(18.0 * 16.0)])
        removed = refine_once(q, u, v, AlignmentParams(0, 0, 0), 24.0, EXAMPLE_CFG)
        assert removed == 0
        assert q.weight[0] == pytest.approx(0.25)

    def test_boundary_pair_kept_with_zero_weight(self):
        # offset 20 px at c1 = 1/16 is a displacement of exactly 25
        q, u, v = self.make_queue_pair([20.0])
        removed = refine_once(q, u, v, AlignmentParams(0, 0, 0), 25.0, EXAMPLE_CFG)
        assert removed == 0
        assert len(q) == 1
        assert q.weight[0] == 0.0


class TestResolveOneToOne:
    def test_already_one_to_one(self):
        q = PairQueue([1, 0], [1, 0], [0.5, 0.9], 2, 2)
        pairs = resolve_one_to_one(q)
        assert pairs == [PairEntry(0, 0, 0.9), PairEntry(1, 1, 0.5)]

    def test_greedy_conflict_resolution(self):
        q = PairQueue([0, 0, 1], [0, 1, 1], [0.9, 0.8, 0.7], 2, 2)
        pairs = resolve_one_to_one(q)
        assert [(p.query_index, p.template_index) for p in pairs] == [(0, 0), (1, 1)]

    def test_empty_queue(self):
        q = PairQueue([], [], [], 3, 3)
        assert resolve_one_to_one(q) == []

    def test_tie_breaks_by_lower_indices(self):
        q = PairQueue([1, 0], [0, 0], [0.5, 0.5], 2, 1)
        pairs = resolve_one_to_one(q)
        assert [(p.query_index, p.template_index) for p in pairs] == [(0, 0)]


class TestMatchScore:
    def test_no_pairs(self):
        assert match_score([], 5, 5) == 0.0

    def test_perfect_match(self):
        pairs = [PairEntry(i, i, 1.0) for i in range(4)]
        assert match_score(pairs, 4, 4) == 1.0

    def test_partial(self):
        pairs = [PairEntry(i, i, 0.8) for i in range(5)]
        assert match_score(pairs, 10, 8) == pytest.approx(0.2)

    def test_degenerate_sizes(self):
        assert match_score([], 0, 5) == 0.0
        assert match_score([], 5, 0) == 0.0


class TestRunMatcher:
    def test_self_match(self):
        t = spaced_template(10)
        res = run_matcher(t, t, CFG)
        assert res.converged
        assert res.score == pytest.approx(1.0)
        assert len(res.matched_pairs) == 10
        assert abs(res.final_alignment.theta) < 1e-6
        assert abs(res.final_alignment.a) < 1e-6
        assert abs(res.final_alignment.b) < 1e-6

    def test_empty_query(self):
        t = spaced_template(10)
        empty = MinutiaTemplate((), 100, 100)
        res = run_matcher(empty, t, CFG)
        assert res.score == 0.0
        assert not res.converged
        assert res.matched_pairs == ()

    def test_synthetic_recovery(self):
        params = SynthParams()
        base = generate_base(params, seed=np.random.SeedSequence([9, 0]))
        imp, gt = generate_impression(base, params, seed=np.random.SeedSequence([9, 1]))
        res = run_matcher(base, imp, CFG)
        assert angle_diff(res.final_alignment.theta, gt.transform.theta) <= 3.0
        assert abs(res.final_alignment.a - gt.transform.a) <= 5.0
        assert abs(res.final_alignment.b - gt.transform.b) <= 5.0

    def test_queue_length_non_increasing(self):
        t = spaced_template(12)
        moved = rotated_copy(t, 10.0, 15.0, 8.0)
        res = run_matcher(moved, t, CFG)
        lengths = [r.queue_len_after for r in res.iterations]
        assert all(a >= b for a, b in zip(lengths, lengths[1:]))

    def test_matched_pairs_one_to_one_and_bounded(self, rng):
        for _ in range(20):
            u = random_template(rng, int(rng.integers(1, 25)))
            v = random_template(rng, int(rng.integers(1, 25)))
            res = run_matcher(u, v, CFG)
            qs = [p.query_index for p in res.matched_pairs]
            ts = [p.template_index for p in res.matched_pairs]
            assert len(set(qs)) == len(qs)
            assert len(set(ts)) == len(ts)
            assert len(res.matched_pairs) <= min(len(u), len(v))
            assert all(0.0 <= p.weight <= 1.0 for p in res.matched_pairs)
            if res.converged and res.iterations:
                assert res.iterations[-1].queue_len_after <= min(len(u), len(v))

    def test_termination_bound(self, rng):
        for _ in range(30):
            u = random_template(rng, int(rng.integers(0, 12)))
            v = random_template(rng, int(rng.integers(0, 12)))
            res = run_matcher(u, v, CFG)
            bound = len(CFG.thresholds) * max(1, len(u) * len(v))
            assert len(res.iterations) <= bound

    def test_rigid_motion_consistency(self):
        t = spaced_template(15)
        base = run_matcher(t, t, CFG).final_alignment
        assert abs(base.theta) < 1e-6
        for phi in (-15.0, -7.0, 7.0, 15.0):
            moved = rotated_copy(t, phi, 40.0, 60.0)
            res = run_matcher(moved, t, CFG)
            # expected transform undoes the rigid motion applied to the query
            expected = AlignmentParams(phi, 40.0, 60.0).inverse()
            assert angle_diff(res.final_alignment.theta, expected.theta) <= 1.0
            assert abs(res.final_alignment.a - expected.a) <= 2.0
            assert abs(res.final_alignment.b - expected.b) <= 2.0

    def test_single_pair_templates(self):
        u = MinutiaTemplate((Minutia(50, 50, 10, E),), 100, 100)
        v = MinutiaTemplate((Minutia(60, 40, 15, E),), 100, 100)
        res = run_matcher(u, v, CFG)
        assert res.converged
        assert 0.0 <= res.score <= 1.0

    def test_zero_quality_templates_give_zero_score(self):
        mins = tuple(
            Minutia(20.0 * (i + 1), 50, 0, E, quality=0.0) for i in range(3)
        )
        t = MinutiaTemplate(mins, 100, 100)
        res = run_matcher(t, t, CFG)
        assert res.score == 0.0
        assert not res.converged
