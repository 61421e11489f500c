import numpy as np
import pytest

from minumatch import (
    MatchConfig,
    PairQueue,
    SynthParams,
    angle_diff,
    brute_force_align,
    generate_base,
    generate_impression,
    objective,
    parse_ground_truth,
    solve_alignment,
    write_ground_truth,
)
from minumatch.errors import PlacementFailureError, ZeroTotalWeightError

from conftest import random_queue, rotated_copy

CFG = MatchConfig()

CLEAN = SynthParams(
    rotation_range=(0.0, 0.0),
    translation_range=(0.0, 0.0),
    position_jitter=0.0,
    direction_jitter=0.0,
    drop_fraction=0.0,
    spurious_fraction=0.0,
)


class TestGenerateBase:
    def test_single_minutia(self):
        params = SynthParams(n_minutiae=(1, 1))
        t = generate_base(params, seed=3)
        assert len(t) == 1

    def test_seed_determinism(self):
        params = SynthParams(seed=17)
        a = generate_base(params)
        b = generate_base(params)
        assert a == b

    def test_pairwise_spacing(self):
        params = SynthParams(n_minutiae=(40, 40), min_spacing=12.0)
        t = generate_base(params, seed=21)
        pts = np.array([(m.x, m.y) for m in t.minutiae])
        d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
        np.fill_diagonal(d2, np.inf)
        assert np.sqrt(d2.min()) >= 12.0

    def test_impossible_packing(self):
        params = SynthParams(
            n_minutiae=(50, 50), width=30, height=30, min_spacing=20.0
        )
        with pytest.raises(PlacementFailureError):
            generate_base(params, seed=1)


class TestGenerateImpression:
    def test_noise_free_identity(self):
        base = generate_base(CLEAN, seed=4)
        imp, gt = generate_impression(base, CLEAN, seed=5)
        assert imp.minutiae == base.minutiae
        assert gt.transform.theta == 0.0
        assert gt.transform.a == 0.0
        assert gt.transform.b == 0.0
        assert gt.correspondence == tuple((i, i) for i in range(len(base)))

    def test_pure_translation(self):
        params = SynthParams(
            rotation_range=(0.0, 0.0),
            translation_range=(10.0, 10.0),
            position_jitter=0.0,
            direction_jitter=0.0,
            drop_fraction=0.0,
            spurious_fraction=0.0,
        )
        base = generate_base(params, seed=6)
        imp, gt = generate_impression(base, params, seed=7)
        assert gt.transform.theta == 0.0
        assert (gt.transform.a, gt.transform.b) == (10.0, 10.0)
        for b_idx, i_idx in gt.correspondence:
            mb = base.minutiae[b_idx]
            mi = imp.minutiae[i_idx]
            assert mi.x == pytest.approx(mb.x + 10.0)
            assert mi.y == pytest.approx(mb.y + 10.0)

    def test_drop_count_exact(self):
        params = SynthParams(
            n_minutiae=(40, 40),
            rotation_range=(0.0, 0.0),
            translation_range=(0.0, 0.0),
            position_jitter=0.0,
            direction_jitter=0.0,
            drop_fraction=0.2,
            spurious_fraction=0.0,
        )
        base = generate_base(params, seed=8)
        imp, gt = generate_impression(base, params, seed=9)
        assert len(base) == 40
        assert len(imp) == 32  # floor(0.2 * 40) dropped, none clipped
        assert len(gt.correspondence) == 32

    def test_spurious_count(self):
        params = SynthParams(
            n_minutiae=(40, 40),
            rotation_range=(0.0, 0.0),
            translation_range=(0.0, 0.0),
            position_jitter=0.0,
            direction_jitter=0.0,
            drop_fraction=0.0,
            spurious_fraction=0.1,
        )
        base = generate_base(params, seed=10)
        imp, gt = generate_impression(base, params, seed=11)
        assert len(imp) == 44
        assert len(gt.correspondence) == 40

    def test_seed_determinism(self):
        params = SynthParams()
        base = generate_base(params, seed=12)
        a, gta = generate_impression(base, params, seed=13)
        b, gtb = generate_impression(base, params, seed=13)
        assert a == b
        assert gta == gtb

    def test_all_points_inside_box(self):
        params = SynthParams()
        base = generate_base(params, seed=14)
        imp, _ = generate_impression(base, params, seed=15)
        for m in imp.minutiae:
            assert 0 <= m.x <= imp.width
            assert 0 <= m.y <= imp.height


class TestGroundTruthSidecar:
    def test_roundtrip(self):
        params = SynthParams()
        base = generate_base(params, seed=16)
        _, gt = generate_impression(base, params, seed=17)
        back = parse_ground_truth(write_ground_truth(gt))
        assert back.correspondence == gt.correspondence
        assert back.transform.theta == pytest.approx(gt.transform.theta, abs=1e-6)
        assert back.transform.a == pytest.approx(gt.transform.a, abs=1e-6)
        assert back.transform.b == pytest.approx(gt.transform.b, abs=1e-6)


class TestBruteForceAlign:
    def test_identity_on_identical_sets(self, rng):
        from conftest import random_template

        u = random_template(rng, 10)
        q = PairQueue(np.arange(10), np.arange(10), np.ones(10), 10, 10)
        p = brute_force_align(q, u, u, grid_step=0.5)
        assert abs(p.theta) <= 1e-9
        assert abs(p.a) <= 1e-6
        assert abs(p.b) <= 1e-6

    def test_known_rotation_within_grid_step(self, rng):
        from conftest import random_template

        u = random_template(rng, 12, box=200)
        v = rotated_copy(u, 25.0, 120.0, 90.0)
        q = PairQueue(np.arange(12), np.arange(12), np.ones(12), 12, 12)
        step = 0.05
        p = brute_force_align(q, u, v, grid_step=step)
        assert angle_diff(p.theta, 25.0) <= step

    def test_agrees_with_closed_form(self):
        rng = np.random.default_rng(31)
        step = 0.05
        for _ in range(10):
            u, v, q = random_queue(rng, 10, 25)
            p, diag = solve_alignment(q, u, v, CFG)
            assert not diag.ill_posed
            oracle = brute_force_align(q, u, v, grid_step=step)
            assert angle_diff(p.theta, oracle.theta) <= step
            # grid search can never beat the closed form beyond rounding
            assert objective(q, u, v, oracle) >= objective(q, u, v, p) - 1e-9

    def test_zero_weight_rejected(self, rng):
        from conftest import random_template

        u = random_template(rng, 3)
        q = PairQueue([0, 1], [0, 1], [0.0, 0.0], 3, 3)
        with pytest.raises(ZeroTotalWeightError):
            brute_force_align(q, u, u)


class TestSynthParamsValidation:
    def test_bad_ranges(self):
        with pytest.raises(ValueError):
            SynthParams(n_minutiae=(10, 5))
        with pytest.raises(ValueError):
            SynthParams(drop_fraction=1.0)
        with pytest.raises(ValueError):
            SynthParams(quality_range=(0.5, 1.2))
        with pytest.raises(ValueError):
            SynthParams(rotation_range=(10.0, -10.0))
