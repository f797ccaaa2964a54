"""Acceptance gate: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline, or
``python3 tests/test_acceptance.py`` for the summary alone.
"""

import math
import time

import numpy as np
import pytest

from ppsbox import qstate
from ppsbox.abl import joint_local_abl
from ppsbox.chsh import (
    EQ9_MAPPING,
    EQ9_SETTINGS,
    ChshConfig,
    chsh_value,
    correlation,
    d_alpha,
    maximize_chsh,
    pr_game,
    swapped_correlation_closed_form,
)
from ppsbox.cli import main
from ppsbox.nosignal import MAX_ENTANGLED, ghz_demo, marginal, scan_no_signaling, unitary_attack_demo
from ppsbox.presets import eq9_ensemble, partial_equal_ensemble, singlet_xy, swapped_ensemble
from ppsbox.qstate import MeasurementDirection
from ppsbox.swapping import non_maximal_attack, swap_protocol

from ensembles import random_max_entangled, random_product, random_swapped

TSIRELSON_SWAP = 8 * math.sqrt(2) / 3
ALPHAS = (0.5, 0.4, 0.3, 0.2, 0.1, 0.05)


def report(capsys, number, title, checks):
    """Print the verdict line and fail the test if any check failed."""
    ok = all(passed for _, passed in checks)
    detail = "; ".join(f"{name}{'' if passed else ' [FAILED]'}" for name, passed in checks)
    with capsys.disabled():
        print(f"\nACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
    assert ok, detail


def close(x, target, tol):
    return abs(x - target) <= tol


def test_01_singlet_example(capsys):
    t0 = time.perf_counter()
    ens = singlet_xy()
    alone = joint_local_abl(ens, [None, qstate.X_DIR])["d"]
    with_alice = joint_local_abl(ens, [qstate.Y_DIR, qstate.X_DIR]).marginal("2")["d"]
    elapsed = time.perf_counter() - t0
    report(capsys, 1, "singlet / up-x up-y example", [
        (f"Bob x alone = {alone:.15f} (1 +- 1e-12)", close(alone, 1.0, 1e-12)),
        (f"with Alice y = {with_alice:.15f} (0.5 +- 1e-12)", close(with_alice, 0.5, 1e-12)),
        (f"runtime {elapsed:.3f}s < 1s", elapsed < 1.0),
    ])


def test_02_maximal_correlation(capsys):
    ens = eq9_ensemble()
    z, x = qstate.Z_DIR, qstate.X_DIR
    corr = [correlation(ens, a, b) for a, b in ((z, z), (x, x), (z, x), (x, z))]
    b = chsh_value(ens, *EQ9_SETTINGS)
    game = pr_game(ens, EQ9_MAPPING).success
    report(capsys, 2, "maximal-correlation ensemble", [
        (f"C = {np.round(corr, 15).tolist()}", np.allclose(corr, [1, 1, 1, -1], rtol=0, atol=1e-12)),
        (f"CHSH = {b:.15f}", close(b, 4.0, 1e-12)),
        (f"PR game = {[round(p, 15) for p in game.values()]}", all(close(p, 1.0, 1e-12) for p in game.values())),
    ])


def test_03_half_marginals(capsys):
    rng = np.random.default_rng(3)
    worst = {"class 2": 0.0, "class 3": 0.0}
    makers = {"class 2": random_max_entangled, "class 3": lambda r: random_swapped(r)[0]}
    for name, make in makers.items():
        for _ in range(1000):
            ens = make(rng)
            d, other = qstate.random_direction(rng), qstate.random_direction(rng)
            for party in ("A", "B"):
                for m in (marginal(ens, party, d), marginal(ens, party, d, other)):
                    worst[name] = max(worst[name], abs(m - 0.5))
    report(capsys, 3, "single-party marginals are 1/2", [
        (f"{k} max |P - 1/2| = {v:.2e} (< 1e-10)", v < 1e-10) for k, v in worst.items()
    ])


def test_04_no_signaling_suite(capsys):
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    cases = {
        "class 1": random_product(rng),
        "class 2": random_max_entangled(rng),
        "class 3": random_swapped(rng)[0],
    }
    devs = {k: scan_no_signaling(e, samples=10_000, seed=4).max_deviation for k, e in cases.items()}
    counter = scan_no_signaling(partial_equal_ensemble(0.9), samples=10_000, seed=4).max_deviation
    elapsed = time.perf_counter() - t0
    checks = [(f"{k} deviation {v:.2e} (< 1e-9)", v < 1e-9) for k, v in devs.items()]
    checks.append((f"equal partial (0.9) deviation {counter:.4f} (> 0.01)", counter > 0.01))
    checks.append((f"runtime {elapsed:.2f}s < 30s", elapsed < 30.0))
    report(capsys, 4, "no-signaling scans", checks)


def test_05_closed_form_correlation(capsys):
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(10_000):
        alpha = float(rng.uniform(1e-3, 1 - 1e-3))
        theta = float(rng.uniform(0, 2 * math.pi))
        wa, pa, wb, pb = (float(v) for v in rng.uniform(0, 2 * math.pi, 4))
        exact = correlation(swapped_ensemble(alpha, theta), MeasurementDirection(wa, pa), MeasurementDirection(wb, pb))
        worst = max(worst, abs(exact - swapped_correlation_closed_form(alpha, theta, wa, pa, wb, pb)))
    report(capsys, 5, "closed-form swapped correlation", [(f"max |diff| = {worst:.2e} (< 1e-10)", worst < 1e-10)])


@pytest.mark.slow
def test_06_swapped_optimum(capsys):
    b = maximize_chsh(swapped_ensemble(0.5, 0.0)).value
    report(capsys, 6, "swapped-class optimum at alpha = 1/2", [
        (f"max CHSH = {b:.7f} (8 sqrt2/3 = {TSIRELSON_SWAP:.7f} +- 1e-3)", close(b, TSIRELSON_SWAP, 1e-3))
    ])


@pytest.mark.slow
def test_07_d_alpha(capsys):
    points, times = {}, {}
    for a in ALPHAS + (0.01,):
        t0 = time.perf_counter()
        points[a] = d_alpha(a)
        times[a] = time.perf_counter() - t0
    ds = [points[a].d for a in ALPHAS]
    bs = [points[a].b_max for a in ALPHAS]
    p5, p2 = points[0.5], points[0.2]
    report(capsys, 7, "d(alpha) numerics", [
        (f"d(0.5) = {p5.d:.4f} (1 +- 0.01)", close(p5.d, 1.0, 0.01)),
        (f"d(0.2) = {p2.d:.4f} (0.505 +- 0.01)", close(p2.d, 0.505, 0.01)),
        (f"b_max(0.2) = {p2.b_max:.4f} (3.993 +- 5e-3)", close(p2.b_max, 3.993, 5e-3)),
        (f"d non-increasing {np.round(ds, 4).tolist()}", all(x >= y - 1e-9 for x, y in zip(ds, ds[1:]))),
        (f"b_max non-decreasing {np.round(bs, 4).tolist()}", all(x <= y + 1e-9 for x, y in zip(bs, bs[1:]))),
        (f"b_max(0.01) = {points[0.01].b_max:.4f} (> 3.99)", points[0.01].b_max > 3.99),
        (f"slowest point {max(times.values()):.1f}s < 60s", max(times.values()) < 60.0),
    ])


def test_08_ghz(capsys):
    r = ghz_demo()
    report(capsys, 8, "three-party GHZ demo", [
        (f"P_A(down) = {r.alice_down_alone:.1e} (0 +- 1e-12)", close(r.alice_down_alone, 0.0, 1e-12)),
        (f"P_A(up | Bob x) = {r.alice_up_with_bob_x:.15f} (0.5 +- 1e-12)", close(r.alice_up_with_bob_x, 0.5, 1e-12)),
    ])


@pytest.mark.slow
def test_09_swapping(capsys):
    reports = swap_protocol(eq9_ensemble(), eq9_ensemble(), samples=1000, seed=0)
    checks = []
    for r in reports:
        if r.probability == 0.0:
            continue
        checks.append((f"{r.outcome} (p={r.probability:.3f}) class {r.label.label}", r.label.label == MAX_ENTANGLED))
        checks.append((f"{r.outcome} scan {r.scan.max_deviation:.1e} (< 1e-9)", r.scan.max_deviation < 1e-9))
        checks.append((f"{r.outcome} CHSH {r.chsh.value:.9f} (4 +- 1e-6)", close(r.chsh.value, 4.0, 1e-6)))
    worst, _ = non_maximal_attack(eq9_ensemble(), eq9_ensemble(), math.pi / 6, samples=1000, seed=0)
    checks.append((f"eta = pi/6 attack deviation {worst.max_deviation:.4f} (> 0.01)", worst.max_deviation > 0.01))
    report(capsys, 9, "entanglement swapping", checks)


def test_10_unitary_attack(capsys):
    r = unitary_attack_demo()
    report(capsys, 10, "local-unitary signaling demo", [
        (f"with flip = {r.with_flip:.15f} (1 +- 1e-12)", close(r.with_flip, 1.0, 1e-12)),
        (f"without flip = {r.without_flip:.15f} (0.5 +- 1e-12)", close(r.without_flip, 0.5, 1e-12)),
    ])


ACCEPTANCE_COMMANDS = [
    ["abl", "--preset", "singlet-xy", "--dirs", "_,x"],
    ["abl", "--preset", "singlet-xy", "--dirs", "y,x"],
    ["chsh-max", "--preset", "eq9"],
    ["pr-game", "--preset", "eq9", "--rounds", "100"],
    ["scan", "--preset", "equal-partial"],
    ["scan", "--preset", "eq3-swapped"],
    ["chsh-max", "--preset", "eq3-swapped", "--alpha", "0.5", "--theta", "0"],
    ["d-alpha", "--format", "csv", "--alphas", "0.5,0.2", "--no-cross-check"],
    ["ghz"],
    ["swap", "--samples", "200"],
    ["attack"],
    ["unitary-attack"],
]


@pytest.mark.slow
def test_11_determinism(capsys, tmp_path):
    mismatched = []
    for k, argv in enumerate(ACCEPTANCE_COMMANDS):
        outputs = []
        for run in range(2):
            path = tmp_path / f"{k}-{run}.out"
            assert main(argv + ["--seed", "11", "--out", str(path)]) == 0
            outputs.append(path.read_bytes())
        if outputs[0] != outputs[1]:
            mismatched.append(" ".join(argv))
    report(capsys, 11, "determinism", [
        (f"{len(ACCEPTANCE_COMMANDS)} commands byte-identical across reruns", not mismatched),
    ] + [(f"differs: {m}", False) for m in mismatched])


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
