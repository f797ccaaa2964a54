import math

import numpy as np
import pytest

from ppsbox import qstate
from ppsbox.chsh import (
    EQ9_MAPPING,
    EQ9_SETTINGS,
    ChshConfig,
    chsh_value,
    correlation,
    correlation_table,
    d_alpha,
    family_directions,
    maximize_chsh,
    pattern_search,
    pr_game,
    swapped_correlation_closed_form,
)
from ppsbox.presets import eq9_ensemble, swapped_ensemble
from ppsbox.qstate import MeasurementDirection

import oracles
from ensembles import random_product

FAST = ChshConfig(grid_per_angle=10, refine_iters=3000)


class TestCorrelation:
    def test_eq9_table(self):
        ens = eq9_ensemble()
        z, x = qstate.Z_DIR, qstate.X_DIR
        got = [correlation(ens, a, b) for a, b in ((z, z), (x, x), (z, x), (x, z))]
        assert np.allclose(got, [1, 1, 1, -1], atol=1e-12)
        assert chsh_value(ens, *EQ9_SETTINGS) == pytest.approx(4.0, abs=1e-12)

    def test_matches_brute_force(self, rng):
        for _ in range(50):
            ens = random_product(rng)
            a, b = qstate.random_direction(rng), qstate.random_direction(rng)
            want = oracles.correlation_brute(ens.initial.amplitudes, ens.final.amplitudes, (a.omega, a.phi), (b.omega, b.phi))
            assert correlation(ens, a, b) == pytest.approx(want, abs=1e-12)

    def test_table_matches_pointwise(self, rng):
        ens = swapped_ensemble(0.3, 0.4)
        wa, pa = qstate.random_directions(rng, 5)
        wb, pb = qstate.random_directions(rng, 4)
        t = correlation_table(ens, (wa, pa), (wb, pb))
        for i in range(5):
            for j in range(4):
                c = correlation(ens, MeasurementDirection(wa[i], pa[i]), MeasurementDirection(wb[j], pb[j]))
                assert t[i, j] == pytest.approx(c, abs=1e-12)


class TestClosedForm:
    def test_matches_abl(self, rng):
        worst = 0.0
        for _ in range(1000):
            alpha = float(rng.uniform(0.01, 0.99))
            theta = float(rng.uniform(0, 2 * math.pi))
            wa, pa, wb, pb = rng.uniform(0, 2 * math.pi, 4)
            ens = swapped_ensemble(alpha, theta)
            exact = correlation(ens, MeasurementDirection(wa, pa), MeasurementDirection(wb, pb))
            worst = max(worst, abs(exact - swapped_correlation_closed_form(alpha, theta, wa, pa, wb, pb)))
        assert worst < 1e-10

    def test_rejects_endpoints(self):
        with pytest.raises(ValueError):
            swapped_correlation_closed_form(0.0, 0, 0, 0, 0, 0)


class TestPatternSearch:
    def test_quadratic(self):
        x, fx, iters, converged = pattern_search(lambda v: -((v[0] - 1) ** 2 + (v[1] + 2) ** 2), [0.0, 0.0], 0.5, 10_000)
        assert converged
        assert np.allclose(x, [1, -2], atol=1e-6)
        assert fx == pytest.approx(0.0, abs=1e-12)

    def test_iteration_cap(self):
        _, _, iters, converged = pattern_search(lambda v: -abs(v[0] - 100.0), [0.0], 0.1, 5)
        assert iters <= 5
        assert not converged


class TestMaximize:
    def test_product_bound(self, rng):
        for _ in range(3):
            rep = maximize_chsh(random_product(rng), FAST)
            assert rep.value <= 2.0 + 1e-9

    def test_eq9_reaches_four(self):
        rep = maximize_chsh(eq9_ensemble(), FAST)
        assert rep.value == pytest.approx(4.0, abs=1e-6)

    def test_swapped_half(self):
        rep = maximize_chsh(swapped_ensemble(0.5, 0.0))
        assert rep.value == pytest.approx(8 * math.sqrt(2) / 3, abs=1e-6)
        # reported directions reproduce the value
        assert chsh_value(swapped_ensemble(0.5, 0.0), *rep.directions) == pytest.approx(rep.value, abs=1e-9)

    def test_deterministic(self):
        a = maximize_chsh(swapped_ensemble(0.3, 0.4), FAST)
        b = maximize_chsh(swapped_ensemble(0.3, 0.4), FAST)
        assert a.to_json() == b.to_json()

    def test_rejects_three_party(self):
        from ppsbox.presets import ghz_ensemble

        with pytest.raises(ValueError):
            maximize_chsh(ghz_ensemble(), FAST)


class TestDAlpha:
    def test_family_at_half(self):
        ens = swapped_ensemble(0.5, 0.0)
        assert chsh_value(ens, *family_directions(1.0)) == pytest.approx(8 * math.sqrt(2) / 3, abs=1e-9)

    def test_half(self):
        p = d_alpha(0.5, cross_check=False)
        assert p.d == pytest.approx(1.0, abs=1e-6)
        assert p.b_max == pytest.approx(8 * math.sqrt(2) / 3, abs=1e-9)

    def test_weight_004_point(self):
        """Schmidt weight 0.04 puts the family optimum at d = 0.505, value 3.993."""
        p = d_alpha(0.04, cross_check=False)
        assert p.d == pytest.approx(0.505, abs=0.01)
        assert p.b_max == pytest.approx(3.993, abs=5e-3)

    def test_family_within_unconstrained(self):
        p = d_alpha(0.3, FAST)
        assert p.b_max <= p.unconstrained + 1e-6

    def test_bad_alpha(self):
        with pytest.raises(ValueError):
            d_alpha(1.0)


class TestPrGame:
    def test_eq9_wins_always(self):
        r = pr_game(eq9_ensemble(), EQ9_MAPPING)
        for p in r.success.values():
            assert p == pytest.approx(1.0, abs=1e-12)

    def test_product_bound(self, rng):
        for _ in range(50):
            mapping = {
                "x": (qstate.random_direction(rng), qstate.random_direction(rng)),
                "y": (qstate.random_direction(rng), qstate.random_direction(rng)),
            }
            assert pr_game(random_product(rng), mapping).average <= 0.75 + 1e-12

    def test_sampling_seeded(self):
        a = pr_game(eq9_ensemble(), EQ9_MAPPING, rounds=200, seed=5)
        b = pr_game(eq9_ensemble(), EQ9_MAPPING, rounds=200, seed=5)
        assert a.to_json() == b.to_json()
        assert all(v == 1.0 for v in a.sampled.values())
