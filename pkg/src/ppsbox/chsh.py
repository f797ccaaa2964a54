"""CHSH values of pre/post-selected ensembles and their maximization.

Correlations use the +1/-1 encoding up -> +1, down -> -1. The CHSH value is
|C(A,B) - C(A,B') + C(A',B) + C(A',B')| and the algebraic ceiling is 4.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import qstate
from .abl import DENOMINATOR_FLOOR, PrePostEnsemble, joint_local_abl
from .nosignal import SWAPPED, UNCERTIFIED, classify
from .qstate import MeasurementDirection, StateError

log = logging.getLogger(__name__)

TWO_PI = 2 * math.pi
STEP_TOL = 1e-7


def _require_pair(ens: PrePostEnsemble) -> None:
    if ens.num_parties != 2:
        raise StateError("CHSH needs a two-particle ensemble")


def correlation(ens: PrePostEnsemble, dir_a: MeasurementDirection, dir_b: MeasurementDirection) -> float:
    _require_pair(ens)
    q = joint_local_abl(ens, [dir_a, dir_b])
    return q["uu"] + q["dd"] - q["ud"] - q["du"]


def chsh_value(
    ens: PrePostEnsemble,
    a: MeasurementDirection,
    a2: MeasurementDirection,
    b: MeasurementDirection,
    b2: MeasurementDirection,
) -> float:
    c = correlation
    return abs(c(ens, a, b) - c(ens, a, b2) + c(ens, a2, b) + c(ens, a2, b2))


def swapped_correlation_closed_form(
    alpha: float, theta: float, omega_a: float, phi_a: float, omega_b: float, phi_b: float
) -> float:
    """Closed-form correlation for the swapped class with z-aligned Schmidt bases."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in the open interval (0, 1)")
    x = alpha - alpha * alpha
    sx = math.sqrt(x)
    ph = phi_a + phi_b
    cw = math.cos(ph - theta)
    num = 16 * x * math.cos(omega_a) * math.cos(omega_b) + 8 * sx * cw * math.sin(omega_a) * math.sin(omega_b)
    den = (
        x * (3 + math.cos(2 * omega_a)) * (3 + math.cos(2 * omega_b))
        + 2 * (1 + 2 * x * math.cos(2 * ph - 2 * theta)) * math.sin(omega_a) ** 2 * math.sin(omega_b) ** 2
        + 2 * sx * cw * math.sin(2 * omega_a) * math.sin(2 * omega_b)
    )
    return num / den


# -- fast kernels ------------------------------------------------------------


class _PairKernel:
    """Correlation evaluator for one ensemble, in plain complex arithmetic.

    The optimizer calls this tens of thousands of times; numpy overhead on
    2x2 matrices dominates otherwise.
    """

    def __init__(self, ens: PrePostEnsemble):
        self.mi = [complex(z) for z in ens.initial.amplitudes]
        self.mf = [complex(z) for z in ens.final.amplitudes]

    def corr(self, wa: float, pa: float, wb: float, pb: float) -> float:
        ca, sa = math.cos(wa / 2), math.sin(wa / 2)
        cb, sb = math.cos(wb / 2), math.sin(wb / 2)
        ea, eb = cmath.exp(1j * pa), cmath.exp(1j * pb)
        # conjugated basis vectors: <s| = conj(V[:, s])
        a_up = (ca, (ea * sa).conjugate())
        a_dn = (-(ea.conjugate() * sa).conjugate(), ca)
        b_up = (cb, (eb * sb).conjugate())
        b_dn = (-(eb.conjugate() * sb).conjugate(), cb)
        i00, i01, i10, i11 = self.mi
        f00, f01, f10, f11 = self.mf
        w = []
        for av in (a_up, a_dn):
            for bv in (b_up, b_dn):
                x0 = av[0] * bv[0]
                x1 = av[0] * bv[1]
                x2 = av[1] * bv[0]
                x3 = av[1] * bv[1]
                ai = x0 * i00 + x1 * i01 + x2 * i10 + x3 * i11
                af = x0 * f00 + x1 * f01 + x2 * f10 + x3 * f11
                amp = af.conjugate() * ai
                w.append(amp.real * amp.real + amp.imag * amp.imag)
        total = w[0] + w[1] + w[2] + w[3]
        if total < DENOMINATOR_FLOOR:
            return math.nan
        return (w[0] + w[3] - w[1] - w[2]) / total

    def chsh(self, x: Sequence[float]) -> float:
        wa, pa, wa2, pa2, wb, pb, wb2, pb2 = x
        c = self.corr
        v = c(wa, pa, wb, pb) - c(wa, pa, wb2, pb2) + c(wa2, pa2, wb, pb) + c(wa2, pa2, wb2, pb2)
        return -math.inf if math.isnan(v) else abs(v)


def correlation_table(
    ens: PrePostEnsemble, dirs_a: tuple[np.ndarray, np.ndarray], dirs_b: tuple[np.ndarray, np.ndarray]
) -> np.ndarray:
    """C[a, b] for every pair of Alice and Bob directions; NaN where undefined."""
    ua = qstate.direction_unitaries(*dirs_a)
    ub = qstate.direction_unitaries(*dirs_b)
    mi = ens.initial.amplitudes.reshape(2, 2)
    mf = ens.final.amplitudes.reshape(2, 2)
    ua_h = np.conj(np.swapaxes(ua, -1, -2))
    ri = (ua_h @ mi)[:, None] @ np.conj(ub)[None]
    rf = (ua_h @ mf)[:, None] @ np.conj(ub)[None]
    w = np.abs(np.conj(rf) * ri) ** 2
    total = w.sum(axis=(-1, -2))
    with np.errstate(invalid="ignore", divide="ignore"):
        c = (w[..., 0, 0] + w[..., 1, 1] - w[..., 0, 1] - w[..., 1, 0]) / total
    return np.where(total < DENOMINATOR_FLOOR, np.nan, c)


# -- maximization ------------------------------------------------------------


@dataclass(frozen=True)
class ChshConfig:
    grid_per_angle: int = 24
    refine_iters: int = 20_000
    seed: int = 0
    # "auto": use the reduced phase grid for ensembles classified as swapped
    symmetry: str = "auto"


@dataclass(frozen=True)
class ChshReport:
    value: float
    directions: tuple[MeasurementDirection, MeasurementDirection, MeasurementDirection, MeasurementDirection]
    grid_per_angle: int
    refine_iters: int
    iterations: int
    converged: bool
    seed: int
    grid: str
    grid_value: float
    ensemble_class: str

    def to_json(self) -> dict:
        names = ("A", "A'", "B", "B'")
        return {
            "value": self.value,
            "directions": {n: d.to_json() for n, d in zip(names, self.directions)},
            "optimizer": {
                "grid_per_angle": self.grid_per_angle,
                "grid": self.grid,
                "grid_value": self.grid_value,
                "refine_iters": self.refine_iters,
                "iterations": self.iterations,
                "converged": self.converged,
                "seed": self.seed,
            },
            "ensemble_class": self.ensemble_class,
        }


def _grid_best(table_a: np.ndarray) -> tuple[float, tuple[int, int, int, int]]:
    """Exact max of the CHSH value over a grid of single-party directions.

    For fixed (b, b') the value |X(a) + Y(a')| with X = C[a,b] - C[a,b'] and
    Y = C[a',b] + C[a',b'] separates, so the four-index search costs O(G^3).
    Ties go to the lowest (b, b', a, a') index.
    """
    c = table_a
    g_b = c.shape[1]
    best = -math.inf
    arg = (0, 0, 0, 0)
    for b in range(g_b):
        col = c[:, b][:, None]
        x = col - c
        y = col + c
        xm = np.where(np.isnan(x), -np.inf, x)
        xn = np.where(np.isnan(x), np.inf, x)
        ym = np.where(np.isnan(y), -np.inf, y)
        yn = np.where(np.isnan(y), np.inf, y)
        pos = xm.max(axis=0) + ym.max(axis=0)
        neg = -(xn.min(axis=0) + yn.min(axis=0))
        val = np.maximum(pos, neg)
        val = np.where(np.isfinite(val), val, -np.inf)
        k = int(np.argmax(val))
        if val[k] > best:
            best = float(val[k])
            if pos[k] >= neg[k]:
                arg = (b, k, int(np.argmax(xm[:, k])), int(np.argmax(ym[:, k])))
            else:
                arg = (b, k, int(np.argmin(xn[:, k])), int(np.argmin(yn[:, k])))
    return best, arg


def _sphere_grid(g: int) -> tuple[np.ndarray, np.ndarray]:
    w = np.linspace(0.0, math.pi, g)
    p = np.arange(g) * (TWO_PI / g)
    ww, pp = np.meshgrid(w, p, indexing="ij")
    return ww.reshape(-1), pp.reshape(-1)


def pattern_search(f, x0: Sequence[float], step: float, max_iters: int, tol: float = STEP_TOL):
    """Maximize ``f`` by compass search.

    Polls +-step along each coordinate in a fixed order and takes the first
    improvement; halves the step after a full poll without one. Stops when
    the step drops below ``tol`` or after ``max_iters`` polls. Deterministic,
    and more iterations never lower the returned value.
    """
    x = list(x0)
    fx = f(x)
    iters = 0
    while step >= tol and iters < max_iters:
        iters += 1
        improved = False
        for i in range(len(x)):
            for sgn in (1.0, -1.0):
                trial = list(x)
                trial[i] += sgn * step
                ft = f(trial)
                if ft > fx:
                    x, fx, improved = trial, ft, True
                    break
            if improved:
                break
        if not improved:
            step /= 2
    return x, fx, iters, step < tol


def _dirs_from_vector(x: Sequence[float]) -> tuple[MeasurementDirection, ...]:
    return tuple(MeasurementDirection(x[2 * k], x[2 * k + 1]).folded() for k in range(4))


def maximize_chsh(ens: PrePostEnsemble, config: ChshConfig = ChshConfig()) -> ChshReport:
    """Grid search over measurement settings followed by pattern-search refinement.

    The reported value is evaluated at the reported directions, so it is a
    lower bound on the true maximum.
    """
    _require_pair(ens)
    label = classify(ens).label
    if label == UNCERTIFIED:
        log.warning("maximizing CHSH on an ensemble outside the known causal classes")
    g = config.grid_per_angle
    if g < 2:
        raise ValueError("grid_per_angle must be >= 2")
    kernel = _PairKernel(ens)

    use_reduced = config.symmetry == "reduced" or (config.symmetry == "auto" and label == SWAPPED)
    if use_reduced:
        # phi_A = phi_A', phi_B = phi_B', phi_A + phi_B = theta; only the polar angles vary
        theta = classify(ens).params.get("theta", 0.0) if label == SWAPPED else 0.0
        w = np.arange(g) * (TWO_PI / g)
        dirs_a = (w, np.zeros(g))
        dirs_b = (w, np.full(g, theta))
        step = TWO_PI / g
        grid_name = "reduced"
    else:
        dirs_a = dirs_b = _sphere_grid(g)
        step = math.pi / (g - 1)
        grid_name = "sphere"
    table = correlation_table(ens, dirs_a, dirs_b)
    grid_value, (b, b2, a, a2) = _grid_best(table)
    x0 = [
        dirs_a[0][a], dirs_a[1][a], dirs_a[0][a2], dirs_a[1][a2],
        dirs_b[0][b], dirs_b[1][b], dirs_b[0][b2], dirs_b[1][b2],
    ]
    x0 = [float(v) for v in x0]
    x, _, iters, converged = pattern_search(kernel.chsh, x0, step, config.refine_iters)
    dirs = _dirs_from_vector(x)
    value = chsh_value(ens, *dirs)
    return ChshReport(
        value=value,
        directions=dirs,
        grid_per_angle=g,
        refine_iters=config.refine_iters,
        iterations=iters,
        converged=converged,
        seed=config.seed,
        grid=grid_name,
        grid_value=grid_value,
        ensemble_class=label,
    )


# -- d(alpha) ----------------------------------------------------------------


def family_directions(d: float, theta: float = 0.0, phi_a: float = 0.0) -> tuple[MeasurementDirection, ...]:
    """A = 3pi/2, A' = pi, B = pi + pi d/4, B' = pi - pi d/4; phases sum to theta."""
    phi_b = theta - phi_a
    return (
        MeasurementDirection(1.5 * math.pi, phi_a),
        MeasurementDirection(math.pi, phi_a),
        MeasurementDirection(math.pi + math.pi * d / 4, phi_b),
        MeasurementDirection(math.pi - math.pi * d / 4, phi_b),
    )


@dataclass(frozen=True)
class DAlphaPoint:
    alpha: float
    d: float
    b_max: float
    converged: bool
    unconstrained: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "d": self.d,
            "b_max": self.b_max,
            "converged": self.converged,
            "unconstrained": self.unconstrained,
        }


def d_alpha(
    alpha: float,
    config: ChshConfig = ChshConfig(),
    theta: float = 0.0,
    cross_check: bool = True,
    scan_points: int = 201,
) -> DAlphaPoint:
    """Best d in [0, 1] for the fixed angle family on the swapped ensemble of weight ``alpha``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in the open interval (0, 1)")
    from .presets import swapped_ensemble

    ens = swapped_ensemble(alpha, theta)
    kernel = _PairKernel(ens)

    def value(d: float) -> float:
        dirs = family_directions(d, theta)
        return kernel.chsh([v for dd in dirs for v in (dd.omega, dd.phi)])

    ds = np.linspace(0.0, 1.0, scan_points)
    vals = np.array([value(float(d)) for d in ds])
    k = int(np.argmax(vals))
    h = 1.0 / (scan_points - 1)
    lo, hi = max(0.0, ds[k] - h), min(1.0, ds[k] + h)
    res = minimize_scalar(lambda d: -value(d), bounds=(lo, hi), method="bounded", options={"xatol": 1e-7})
    best_d, best_v = float(res.x), float(-res.fun)
    if vals[k] > best_v:
        best_d, best_v = float(ds[k]), float(vals[k])
    b_max = chsh_value(ens, *family_directions(best_d, theta))
    unconstrained = maximize_chsh(ens, config).value if cross_check else None
    return DAlphaPoint(alpha, best_d, b_max, bool(res.success), unconstrained)


# -- PR game -----------------------------------------------------------------


@dataclass(frozen=True)
class PrGameResult:
    """Win probability of a XOR b == x AND y per input pair (x, y)."""

    success: dict[tuple[int, int], float]
    sampled: dict[tuple[int, int], float] = field(default_factory=dict)
    rounds: int = 0
    seed: int = 0

    @property
    def worst(self) -> float:
        return min(self.success.values())

    @property
    def average(self) -> float:
        return sum(self.success.values()) / len(self.success)

    def to_json(self) -> dict:
        doc = {"success": {f"{x}{y}": p for (x, y), p in sorted(self.success.items())}}
        if self.rounds:
            doc["sampled"] = {f"{x}{y}": p for (x, y), p in sorted(self.sampled.items())}
            doc["rounds"] = self.rounds
            doc["seed"] = self.seed
        return doc


BIT = {qstate.UP: 1, qstate.DOWN: 0}


def pr_game(
    ens: PrePostEnsemble,
    mapping: dict[str, tuple[MeasurementDirection, MeasurementDirection]],
    rounds: int = 0,
    seed: int = 0,
) -> PrGameResult:
    """Exact PR-game statistics; ``mapping["x"][x]`` is Alice's direction for input x.

    Outputs read spin up as 1 and down as 0. With ``rounds > 0`` the game is
    also played by sampling the exact distributions, for illustration.
    """
    _require_pair(ens)
    try:
        xs, ys = mapping["x"], mapping["y"]
    except KeyError as exc:
        raise StateError(f"mapping needs 'x' and 'y' entries: {exc}") from exc
    success = {}
    dists = {}
    for x in (0, 1):
        for y in (0, 1):
            dist = joint_local_abl(ens, [xs[x], ys[y]])
            dists[(x, y)] = dist
            success[(x, y)] = float(sum(p for (a, b), p in dist.items() if (BIT[a] ^ BIT[b]) == (x & y)))
    sampled = {}
    if rounds > 0:
        rng = np.random.default_rng(seed)
        for key in sorted(dists):
            outcomes = list(dists[key].keys())
            probs = np.array([dists[key][o] for o in outcomes])
            draws = rng.choice(len(outcomes), size=rounds, p=probs / probs.sum())
            x, y = key
            wins = sum(1 for j in draws if (BIT[outcomes[j][0]] ^ BIT[outcomes[j][1]]) == (x & y))
            sampled[key] = wins / rounds
    return PrGameResult(success, sampled, rounds, seed)


# Input mapping for the maximal-correlation ensemble: x=0 -> Z_A, x=1 -> X_A,
# y=0 -> X_B, y=1 -> Z_B.
EQ9_MAPPING = {"x": (qstate.Z_DIR, qstate.X_DIR), "y": (qstate.X_DIR, qstate.Z_DIR)}
# CHSH settings reaching 4 on the same ensemble: A = X_A, A' = Z_A, B = X_B, B' = Z_B.
EQ9_SETTINGS = (qstate.X_DIR, qstate.Z_DIR, qstate.X_DIR, qstate.Z_DIR)
