"""No-signaling analysis for two-particle pre/post-selected ensembles.

A party's up-probability must not depend on whether, or along which
direction, the other party measures. This module evaluates those marginals,
scans random settings for violations, computes the product/phase quantities
the causal solutions are characterized by, and classifies ensembles into the
known causal classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from . import qstate
from .abl import (
    ApplyUnitary,
    DegeneratePostSelection,
    Measure,
    PrePostEnsemble,
    joint_local_abl,
    sequential_abl,
    DENOMINATOR_FLOOR,
)
from .qstate import MeasurementDirection, PureState, StateError

Party = Literal["A", "B"]

CLASSIFY_TOL = 1e-8
SIGNAL_THRESHOLD = 1e-2

PRODUCT = "ProductProduct"
MAX_ENTANGLED = "MaxEntangledPair"
SWAPPED = "SwappedPair"
UNCERTIFIED = "Uncertified"


def _require_pair(ens: PrePostEnsemble) -> None:
    if ens.num_parties != 2:
        raise StateError("no-signaling analysis is defined for two-particle ensembles")


def _party_slots(party: Party) -> tuple[int, int]:
    if party == "A":
        return 1, 2
    if party == "B":
        return 2, 1
    raise StateError(f"party must be 'A' or 'B', got {party!r}")


def marginal(
    ens: PrePostEnsemble,
    party: Party,
    own_dir: MeasurementDirection,
    other: Optional[MeasurementDirection] = None,
) -> float:
    """Probability that ``party`` reads up along ``own_dir``.

    With ``other=None`` the other particle is left alone; otherwise it is
    measured along ``other`` and its outcome summed over.
    """
    _require_pair(ens)
    me, them = _party_slots(party)
    dist = joint_local_abl(ens, {me: own_dir, them: other})
    return dist.marginal(me)[qstate.UP]


def no_signal_deviation(
    ens: PrePostEnsemble,
    party: Party,
    own_dir: MeasurementDirection,
    other_dirs: tuple[MeasurementDirection, MeasurementDirection],
) -> float:
    m0 = marginal(ens, party, own_dir)
    m1 = marginal(ens, party, own_dir, other_dirs[0])
    m2 = marginal(ens, party, own_dir, other_dirs[1])
    return max(abs(m0 - m1), abs(m0 - m2), abs(m1 - m2))


# -- batched two-particle kernel ---------------------------------------------


def _amplitude_matrix(s: PureState, party: Party) -> np.ndarray:
    m = s.amplitudes.reshape(2, 2)
    return m if party == "A" else m.T


def _batched_marginals(
    ens: PrePostEnsemble, party: Party, own: np.ndarray, others: list[np.ndarray]
) -> np.ndarray:
    """Up-probabilities for ``party``: column 0 without the other measuring,
    then one column per entry of ``others``. Rows with a vanishing denominator
    come back as NaN.

    ``own`` and each of ``others`` are stacks of direction unitaries (S, 2, 2).
    """
    mi = _amplitude_matrix(ens.initial, party)
    mf = _amplitude_matrix(ens.final, party)
    own_h = np.conj(np.swapaxes(own, -1, -2))
    ri = own_h @ mi
    rf = own_h @ mf
    cols = []
    amp = np.sum(np.conj(rf) * ri, axis=-1)
    cols.append(_up_share(np.abs(amp) ** 2))
    for vb in others:
        qi = ri @ np.conj(vb)
        qf = rf @ np.conj(vb)
        q = np.abs(np.conj(qf) * qi) ** 2
        cols.append(_up_share(q.sum(axis=-1)))
    return np.stack(cols, axis=-1)


def _up_share(w: np.ndarray) -> np.ndarray:
    total = w.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        share = w[..., 0] / total
    return np.where(total < DENOMINATOR_FLOOR, np.nan, share)


@dataclass(frozen=True)
class SignalReport:
    max_deviation: float
    party: Optional[str]
    own_dir: Optional[MeasurementDirection]
    other_dirs: Optional[tuple[MeasurementDirection, MeasurementDirection]]
    samples: int
    seed: int
    skipped: int = 0

    def signals(self, threshold: float = SIGNAL_THRESHOLD) -> bool:
        return self.max_deviation > threshold

    def to_json(self) -> dict:
        return {
            "max_deviation": self.max_deviation,
            "party": self.party,
            "own_dir": self.own_dir.to_json() if self.own_dir else None,
            "other_dirs": [d.to_json() for d in self.other_dirs] if self.other_dirs else None,
            "samples": self.samples,
            "seed": self.seed,
            "skipped": self.skipped,
        }


def scan_no_signaling(ens: PrePostEnsemble, samples: int = 10_000, seed: int = 0) -> SignalReport:
    """Largest marginal deviation over random measurement settings.

    Each sample draws three sphere-uniform directions (own, other, other')
    and tests both parties with them. Samples where some marginal is
    undefined (post-selection impossible) are skipped and counted.
    """
    _require_pair(ens)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    omega, phi = qstate.random_directions(rng, 3 * samples)
    omega = omega.reshape(samples, 3)
    phi = phi.reshape(samples, 3)
    us = qstate.direction_unitaries(omega, phi)
    best = (-1.0, None, -1)
    skipped = 0
    for party in ("A", "B"):
        m = _batched_marginals(ens, party, us[:, 0], [us[:, 1], us[:, 2]])
        dev = np.max(np.abs(m[:, [0, 0, 1]] - m[:, [1, 2, 2]]), axis=1)
        bad = np.isnan(dev)
        skipped += int(bad.sum())
        dev = np.where(bad, -1.0, dev)
        k = int(np.argmax(dev))
        if dev[k] > best[0]:
            best = (float(dev[k]), party, k)
    value, party, k = best
    if party is None:
        return SignalReport(0.0, None, None, None, samples, seed, skipped)
    dirs = [MeasurementDirection(float(omega[k, j]), float(phi[k, j])) for j in range(3)]
    return SignalReport(value, party, dirs[0], (dirs[1], dirs[2]), samples, seed, skipped)


# -- solution quantities -----------------------------------------------------


def phase_gap(a: float, b: float) -> float:
    """Wrap-aware distance between two angles, in [0, pi]."""
    d = math.fmod(abs(a - b), 2 * math.pi)
    return min(d, 2 * math.pi - d)


@dataclass(frozen=True)
class ConditionQuantities:
    """Products p_k and phase differences alpha_k for outcomes 1=ij, 2=ij~, 3=i~j, 4=i~j~."""

    p: tuple[float, float, float, float]
    alpha: tuple[float, float, float, float]
    basis: tuple[MeasurementDirection, MeasurementDirection]

    def interference(self, n: int, m: int) -> float:
        """2 sqrt(p_n p_m) cos(alpha_n - alpha_m), with 1-based indices."""
        pn, pm = self.p[n - 1], self.p[m - 1]
        return 2.0 * math.sqrt(pn * pm) * math.cos(self.alpha[n - 1] - self.alpha[m - 1])

    def residuals(self) -> tuple[float, float]:
        """Both no-signaling equations (Alice's, then Bob's) written as lhs - rhs."""
        p1, p2, p3, p4 = self.p
        a1, a2, a3, a4 = self.alpha
        r_a = (p1 + p2) * math.sqrt(p3 * p4) * math.cos(a3 - a4) - (p3 + p4) * math.sqrt(p1 * p2) * math.cos(a1 - a2)
        r_b = (p1 + p3) * math.sqrt(p2 * p4) * math.cos(a2 - a4) - (p2 + p4) * math.sqrt(p1 * p3) * math.cos(a1 - a3)
        return r_a, r_b

    def half_marginal(self) -> float:
        """Alice's up-probability when Bob does not measure."""
        p1, p2, p3, p4 = self.p
        d12, d34 = self.interference(1, 2), self.interference(3, 4)
        return (p1 + p2 + d12) / (p1 + p2 + p3 + p4 + d12 + d34)


def condition_quantities(
    ens: PrePostEnsemble, basis_i: MeasurementDirection, basis_j: MeasurementDirection
) -> ConditionQuantities:
    _require_pair(ens)
    va = qstate.direction_unitary(basis_i)
    vb = qstate.direction_unitary(basis_j)
    ri = va.conj().T @ ens.initial.amplitudes.reshape(2, 2) @ vb.conj()
    rf = va.conj().T @ ens.final.amplitudes.reshape(2, 2) @ vb.conj()
    ri, rf = ri.reshape(-1), rf.reshape(-1)
    p = tuple(float(abs(a) ** 2 * abs(b) ** 2) for a, b in zip(ri, rf))
    alpha = tuple(float(np.angle(a) - np.angle(b)) % (2 * math.pi) for a, b in zip(ri, rf))
    return ConditionQuantities(p, alpha, (basis_i, basis_j))


@dataclass(frozen=True)
class SolutionBranches:
    """Which factors of the general no-signaling solution vanish.

    Phase relations involving an outcome with p_k below tolerance are
    undefined and counted as holding.
    """

    p3_equals_p2: bool
    p1_plus_p4_zero: bool
    product_relation: bool
    phase_sum: bool
    phase_pairs: bool

    @property
    def satisfied(self) -> bool:
        # the p1 + p4 = 0 branch admits no states; it is reported, never used
        return (self.p3_equals_p2 or self.product_relation) and (self.phase_sum or self.phase_pairs)


def check_solution_branch(q: ConditionQuantities, tol: float = CLASSIFY_TOL) -> SolutionBranches:
    p1, p2, p3, p4 = q.p
    a1, a2, a3, a4 = q.alpha
    undefined = min(q.p) < tol

    def same(x: float, y: float) -> bool:
        return undefined or phase_gap(x, y) < math.sqrt(tol)

    return SolutionBranches(
        p3_equals_p2=abs(p3 - p2) < tol,
        p1_plus_p4_zero=(p1 + p4) < tol,
        product_relation=abs(p1 * p4 - p2 * p3) < tol,
        phase_sum=same(a1 + a4, a2 + a3),
        phase_pairs=same(a2, a3) and same(a1, a4),
    )


# -- classification ----------------------------------------------------------


@dataclass(frozen=True)
class ClassLabel:
    label: str
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"label": self.label, "params": _jsonable(self.params)}


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [[[float(z.real), float(z.imag)] for z in row] for row in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    return x


def _swap_fit(ens: PrePostEnsemble, tol: float) -> Optional[dict]:
    si = qstate.schmidt_decompose(ens.initial)
    a, b = si.basis_a, si.basis_b
    pair = [np.kron(a[:, k], b[:, k]) for k in range(2)]
    ci = [np.vdot(v, ens.initial.amplitudes) for v in pair]
    cf = [np.vdot(v, ens.final.amplitudes) for v in pair]
    # final must live in the span of the initial's Schmidt products
    if abs(abs(cf[0]) ** 2 + abs(cf[1]) ** 2 - 1.0) > tol:
        return None
    if abs(abs(cf[0]) - abs(ci[1])) > tol or abs(abs(cf[1]) - abs(ci[0])) > tol:
        return None
    if min(abs(c) for c in ci) < tol:
        return None
    theta_i = float(np.angle(ci[1] / ci[0]))
    theta_f = float(np.angle(cf[1] / cf[0]))
    if phase_gap(theta_i, theta_f) > tol:
        return None
    # alpha is the weight on the Schmidt pair whose Alice vector is nearest |up>
    k = 0 if abs(a[0, 0]) >= abs(a[0, 1]) - 1e-12 else 1
    return {
        "alpha": float(abs(ci[k]) ** 2),
        "theta": (theta_i if k == 0 else -theta_i) % (2 * math.pi),
        "basis_a": a[:, [k, 1 - k]],
        "basis_b": b[:, [k, 1 - k]],
    }


def classify(ens: PrePostEnsemble, tol: float = CLASSIFY_TOL) -> ClassLabel:
    _require_pair(ens)
    si = qstate.schmidt_decompose(ens.initial)
    sf = qstate.schmidt_decompose(ens.final)
    if si.coefficients[1] < tol and sf.coefficients[1] < tol:
        return ClassLabel(PRODUCT, {
            "initial": [si.basis_a[:, 0], si.basis_b[:, 0]],
            "final": [sf.basis_a[:, 0], sf.basis_b[:, 0]],
        })
    r = math.sqrt(0.5)
    if all(abs(c - r) < tol for c in si.coefficients + sf.coefficients):
        return ClassLabel(MAX_ENTANGLED, {
            "theta_i": si.phase,
            "theta_f": sf.phase,
            "initial_bases": [si.basis_a, si.basis_b],
            "final_bases": [sf.basis_a, sf.basis_b],
        })
    fit = _swap_fit(ens, tol)
    if fit is not None:
        return ClassLabel(SWAPPED, fit)
    return ClassLabel(UNCERTIFIED, {
        "schmidt_initial": list(si.coefficients),
        "schmidt_final": list(sf.coefficients),
    })


# -- demonstrations ----------------------------------------------------------


@dataclass(frozen=True)
class AttackResult:
    with_flip: float
    without_flip: float
    swapped_shift: float
    swapped_angle: float

    def to_json(self) -> dict:
        return {
            "bob_down_with_flip": self.with_flip,
            "bob_down_without_flip": self.without_flip,
            "swapped_max_shift": self.swapped_shift,
            "swapped_rotation_angle": self.swapped_angle,
        }


def unitary_attack_demo(swap_alpha: float = 0.3, swap_theta: float = 0.4, angles: int = 32) -> AttackResult:
    """Signaling once local unitaries are allowed.

    Singlet/singlet: Alice measures z and flips her spin on "down"; Bob's
    z-marginal for down goes from 1/2 to 1. Swapped class: Alice rotates her
    spin without measuring and Bob's x-marginal moves off 1/2. (Bob's
    z-marginal cannot move there: every 2x2 unitary has |U00| = |U11|.)
    """
    from .presets import swapped_ensemble

    ens = PrePostEnsemble(qstate.singlet(), qstate.singlet())
    z = qstate.Z_DIR
    alice = Measure.local("A", 2, 1, z)
    bob = Measure.local("B", 2, 2, z)
    flip = ApplyUnitary(1, qstate.PAULI_X, when=("A", qstate.DOWN))
    with_flip = sequential_abl(ens, [alice, flip, bob]).marginal("B")[qstate.DOWN]
    without = sequential_abl(ens, [alice, bob]).marginal("B")[qstate.DOWN]

    sw = swapped_ensemble(swap_alpha, swap_theta)
    bob_x = Measure.local("B", 2, 2, qstate.X_DIR)
    best_shift, best_angle = 0.0, 0.0
    for t in np.linspace(0.0, math.pi, angles + 1)[1:]:
        rot = qstate.direction_unitary(MeasurementDirection(float(t), 0.0))
        p = sequential_abl(sw, [ApplyUnitary(1, rot), bob_x]).marginal("B")[qstate.DOWN]
        if abs(p - 0.5) > best_shift:
            best_shift, best_angle = abs(p - 0.5), float(t)
    return AttackResult(with_flip, without, best_shift, best_angle)


@dataclass(frozen=True)
class GhzResult:
    alice_down_alone: float
    alice_up_with_bob_x: float
    totals: tuple[float, float]

    def to_json(self) -> dict:
        return {
            "P_A_down_alice_z_alone": self.alice_down_alone,
            "P_A_up_with_bob_x": self.alice_up_with_bob_x,
            "totals": list(self.totals),
        }


def ghz_demo() -> GhzResult:
    """Three-party GHZ boundary states: Bob's choice moves Alice's z statistics."""
    from .presets import ghz_ensemble

    ens = ghz_ensemble()
    z, x = qstate.Z_DIR, qstate.X_DIR
    alone = joint_local_abl(ens, [z, None, None])
    with_bob = joint_local_abl(ens, [z, x, None])
    return GhzResult(
        alone.marginal("1")[qstate.DOWN],
        with_bob.marginal("1")[qstate.UP],
        (alone.total(), with_bob.total()),
    )


__all__ = [
    "AttackResult",
    "ClassLabel",
    "ConditionQuantities",
    "DegeneratePostSelection",
    "GhzResult",
    "SignalReport",
    "SolutionBranches",
    "check_solution_branch",
    "classify",
    "condition_quantities",
    "ghz_demo",
    "marginal",
    "no_signal_deviation",
    "phase_gap",
    "scan_no_signaling",
    "unitary_attack_demo",
]
