"""Entanglement swapping between two pre/post-selected pairs.

Party order of the four-particle ensemble is (Alice, Bob1, Bob2, Clare).
The Alice-Bob ensemble covers (Alice, Bob1); the Clare-Bob ensemble is
given with Bob's particle first, (Bob2, Clare), so tensoring the two pairs
yields the fixed order directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from . import qstate
from .abl import ApplyUnitary, Measure, PrePostEnsemble, ZeroBranch, condition_on_outcome, sequential_abl
from .chsh import ChshConfig, ChshReport, maximize_chsh
from .nosignal import ClassLabel, SignalReport, classify, scan_no_signaling
from .qstate import PureState, StateError

ALICE, BOB1, BOB2, CLARE = 1, 2, 3, 4
BOB = (BOB1, BOB2)
BASIS_TOL = 1e-10


def build_double_ensemble(ens_ab: PrePostEnsemble, ens_cb: PrePostEnsemble) -> PrePostEnsemble:
    if ens_ab.num_parties != 2 or ens_cb.num_parties != 2:
        raise StateError("both ensembles must be two-particle")
    return PrePostEnsemble(
        qstate.tensor(ens_ab.initial, ens_cb.initial),
        qstate.tensor(ens_ab.final, ens_cb.final),
    )


def partial_basis(eta: float) -> dict[str, PureState]:
    """Orthonormal two-particle basis built from cos/sin(eta) superpositions.

    eta = pi/4 gives back phi+, phi-, psi+, psi- up to sign.
    """
    c, s = math.cos(eta), math.sin(eta)
    return {
        "m1": PureState([c, 0, 0, s]),
        "m2": PureState([s, 0, 0, -c]),
        "m3": PureState([0, c, s, 0]),
        "m4": PureState([0, s, -c, 0]),
    }


def _check_basis(basis: Mapping[str, PureState]) -> None:
    states = list(basis.values())
    if len(states) != 4 or any(s.num_parties != 2 for s in states):
        raise StateError("measurement basis must hold four two-particle states")
    if np.max(np.abs(qstate.gram_matrix(states) - np.eye(4))) > BASIS_TOL:
        raise StateError("measurement basis is not orthonormal")


@dataclass(frozen=True)
class SwapOutcomeReport:
    outcome: str
    probability: float
    ensemble: Optional[PrePostEnsemble]
    label: Optional[ClassLabel]
    chsh: Optional[ChshReport]
    scan: Optional[SignalReport]

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome,
            "probability": self.probability,
            "ensemble": self.ensemble.to_json() if self.ensemble else None,
            "class": self.label.to_json() if self.label else None,
            "chsh": self.chsh.to_json() if self.chsh else None,
            "scan": self.scan.to_json() if self.scan else None,
        }


def bob_outcome_distribution(
    ens4: PrePostEnsemble, basis: Mapping[str, PureState], post_unitary: Optional[np.ndarray]
) -> dict[str, float]:
    """ABL probabilities of Bob's pair outcomes with Alice and Clare idle."""
    events = [Measure.pair("Bob", 4, BOB, basis)]
    if post_unitary is not None:
        events.append(ApplyUnitary(BOB2, post_unitary))
    return sequential_abl(ens4, events).marginal("Bob")


def swap_protocol(
    ens_ab: PrePostEnsemble,
    ens_cb: PrePostEnsemble,
    measurement_basis: Optional[Mapping[str, PureState]] = None,
    post_unitary: Optional[np.ndarray] = qstate.HADAMARD,
    chsh_config: ChshConfig = ChshConfig(),
    samples: int = 1_000,
    seed: int = 0,
) -> list[SwapOutcomeReport]:
    """Bob measures his two particles in ``measurement_basis`` (Bell by default),
    then applies ``post_unitary`` to Bob2. One report per outcome, in basis order.
    """
    basis = dict(measurement_basis) if measurement_basis is not None else qstate.bell_basis()
    _check_basis(basis)
    ens4 = build_double_ensemble(ens_ab, ens_cb)
    probs = bob_outcome_distribution(ens4, basis, post_unitary)
    reports = []
    for name, state in basis.items():
        p = probs.get(name, 0.0)
        try:
            cond = condition_on_outcome(
                ens4, BOB, state, None if post_unitary is None else (BOB2, post_unitary)
            )
        except ZeroBranch:
            reports.append(SwapOutcomeReport(name, 0.0, None, None, None, None))
            continue
        if p == 0.0:
            reports.append(SwapOutcomeReport(name, 0.0, None, None, None, None))
            continue
        reports.append(
            SwapOutcomeReport(
                name,
                p,
                cond,
                classify(cond),
                maximize_chsh(cond, chsh_config),
                scan_no_signaling(cond, samples, seed),
            )
        )
    return reports


def non_maximal_attack(
    ens_ab: PrePostEnsemble,
    ens_cb: PrePostEnsemble,
    eta: float,
    samples: int = 1_000,
    seed: int = 0,
    post_unitary: Optional[np.ndarray] = qstate.HADAMARD,
) -> tuple[SignalReport, dict[str, ClassLabel]]:
    """Swap with a partially entangled basis; return the worst no-signaling scan.

    Also returns the class of each conditional ensemble.
    """
    if not 0.0 < eta < math.pi / 2:
        raise ValueError("eta must lie in (0, pi/2)")
    if abs(eta - math.pi / 4) < 1e-12:
        raise ValueError("eta = pi/4 is the Bell basis, not an attack")
    ens4 = build_double_ensemble(ens_ab, ens_cb)
    worst: Optional[SignalReport] = None
    labels = {}
    for name, state in partial_basis(eta).items():
        try:
            cond = condition_on_outcome(
                ens4, BOB, state, None if post_unitary is None else (BOB2, post_unitary)
            )
        except ZeroBranch:
            continue
        labels[name] = classify(cond)
        rep = scan_no_signaling(cond, samples, seed)
        if worst is None or rep.max_deviation > worst.max_deviation:
            worst = rep
    if worst is None:
        raise ZeroBranch("every outcome of the partial basis has zero weight")
    return worst, labels
