"""Pre- and post-selected ensembles and the probabilities they assign.

Every probability here is an instance of the ABL rule: the weight of an
intermediate outcome is ``|<f| P_n |i>|^2`` renormalized over all outcomes.
For ordered chains of events the projector is replaced by the product of
unitaries and selected projectors along one outcome string.
"""

from __future__ import annotations

import itertools
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from . import qstate
from .qstate import MeasurementDirection, PureState, StateError

DENOMINATOR_FLOOR = 1e-24
# relative to the total weight
CLAMP = 1e-15
FAMILY_TOL = 1e-12


class DegeneratePostSelection(ArithmeticError):
    """The post-selection is incompatible with every outcome."""


class ZeroBranch(ArithmeticError):
    """A conditioning outcome has zero overlap with a boundary state."""


@dataclass(frozen=True, eq=False)
class PrePostEnsemble:
    initial: PureState
    final: PureState

    def __post_init__(self) -> None:
        if self.initial.num_parties != self.final.num_parties:
            raise StateError("initial and final states act on different numbers of particles")

    @property
    def num_parties(self) -> int:
        return self.initial.num_parties

    def to_json(self) -> dict:
        return {"initial": qstate.state_to_json(self.initial), "final": qstate.state_to_json(self.final)}

    @classmethod
    def from_json(cls, doc: dict) -> PrePostEnsemble:
        try:
            return cls(qstate.state_from_json(doc["initial"]), qstate.state_from_json(doc["final"]))
        except (KeyError, TypeError) as exc:
            raise StateError(f"malformed ensemble document: {exc}") from exc


Outcome = tuple[str, ...]


class OutcomeDistribution(Mapping):
    """Probabilities keyed by outcome tuples, one symbol per measurement slot.

    ``labels`` names the slots (party numbers or event labels). Lookups also
    accept the joined string form, e.g. ``dist["ud"]``.
    """

    def __init__(self, labels: Sequence[str], probs: Mapping[Outcome, float]):
        self.labels = tuple(str(x) for x in labels)
        self._probs = dict(probs)

    def __getitem__(self, key) -> float:
        if isinstance(key, str):
            key = self._parse(key)
        return self._probs[tuple(key)]

    def __iter__(self) -> Iterator[Outcome]:
        return iter(self._probs)

    def __len__(self) -> int:
        return len(self._probs)

    def __repr__(self) -> str:
        inner = ", ".join(f"{self.key_string(k)!r}: {v:.12g}" for k, v in self._probs.items())
        return f"OutcomeDistribution({list(self.labels)}, {{{inner}}})"

    def _parse(self, s: str) -> Outcome:
        if "," in s:
            return tuple(s.split(","))
        return tuple(s)

    def key_string(self, outcome: Outcome) -> str:
        if all(len(sym) == 1 for sym in outcome):
            return "".join(outcome)
        return ",".join(outcome)

    def slot(self, label) -> int:
        label = str(label)
        if label not in self.labels:
            raise KeyError(f"no measurement slot labelled {label!r}; have {self.labels}")
        return self.labels.index(label)

    def marginal(self, label) -> dict[str, float]:
        """Distribution of one slot, summing over the others."""
        k = self.slot(label)
        out: dict[str, float] = {}
        for outcome, p in self._probs.items():
            out[outcome[k]] = out.get(outcome[k], 0.0) + p
        return out

    def conditional(self, label, symbol: str) -> OutcomeDistribution:
        """Distribution of the remaining slots given slot ``label`` read ``symbol``."""
        k = self.slot(label)
        kept = {o[:k] + o[k + 1 :]: p for o, p in self._probs.items() if o[k] == symbol}
        total = sum(kept.values())
        if total <= 0.0:
            raise ZeroBranch(f"slot {label!r} never reads {symbol!r}")
        labels = self.labels[:k] + self.labels[k + 1 :]
        return OutcomeDistribution(labels, {o: p / total for o, p in kept.items()})

    def total(self) -> float:
        return float(sum(self._probs.values()))

    def to_json(self, drop_zeros: bool = True) -> dict[str, float]:
        return {
            self.key_string(k): float(v) for k, v in self._probs.items() if not (drop_zeros and v == 0.0)
        }


def _normalize(weights: np.ndarray) -> np.ndarray:
    total = float(np.sum(weights))
    if total < DENOMINATOR_FLOOR:
        raise DegeneratePostSelection(f"ABL denominator {total:.3e} below {DENOMINATOR_FLOOR:g}")
    w = np.where(weights < CLAMP * total, 0.0, weights)
    return w / np.sum(w)


ProjectorFamily = Sequence[tuple[str, np.ndarray]]


def check_family(family: ProjectorFamily, dim: int, tol: float = FAMILY_TOL) -> None:
    acc = np.zeros((dim, dim), dtype=complex)
    for _, p in family:
        p = np.asarray(p)
        if p.shape != (dim, dim):
            raise StateError(f"projector has shape {p.shape}, expected {(dim, dim)}")
        acc = acc + p
    if np.max(np.abs(acc - np.eye(dim))) > tol:
        raise StateError("projector family does not resolve the identity")


def local_family(n: int, party: int, d: MeasurementDirection) -> list[tuple[str, np.ndarray]]:
    return [(o, qstate.local_projector(n, party, d, o)) for o in qstate.OUTCOMES]


def basis_family(
    n: int, parties: tuple[int, int], basis: Mapping[str, PureState]
) -> list[tuple[str, np.ndarray]]:
    """Projectors onto a two-particle orthonormal basis acting on ``parties``."""
    return [(lab, qstate.embed_pair(np.outer(s.amplitudes, s.amplitudes.conj()), n, *parties)) for lab, s in basis.items()]


def abl_distribution(ens: PrePostEnsemble, family: ProjectorFamily, label: str = "C") -> OutcomeDistribution:
    check_family(family, ens.initial.dim)
    i, f = ens.initial.amplitudes, ens.final.amplitudes
    weights = np.array([abs(np.vdot(f, np.asarray(p) @ i)) ** 2 for _, p in family])
    probs = _normalize(weights)
    return OutcomeDistribution([label], {(sym,): float(p) for (sym, _), p in zip(family, probs)})


Assignments = Union[Sequence[Optional[MeasurementDirection]], Mapping[int, Optional[MeasurementDirection]]]


def _measuring(n: int, assignments: Assignments) -> list[tuple[int, MeasurementDirection]]:
    if isinstance(assignments, Mapping):
        items = sorted(assignments.items())
    else:
        if len(assignments) != n:
            raise StateError(f"need one assignment per party ({n}), got {len(assignments)}")
        items = list(enumerate(assignments, start=1))
    out = []
    for k, d in items:
        qstate.check_party(n, k)
        if d is not None:
            out.append((k, d))
    return out


def _rotate_axis(t: np.ndarray, m: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(m, t, axes=([1], [axis])), 0, axis)


def joint_local_abl(ens: PrePostEnsemble, assignments: Assignments) -> OutcomeDistribution:
    """Joint ABL statistics of local spin measurements.

    ``assignments`` gives a direction (or ``None`` for no measurement) per
    party, either positionally or as ``{party: direction}``. Outcome tuples
    cover the measuring parties in party order.
    """
    n = ens.num_parties
    measuring = _measuring(n, assignments)
    if not measuring:
        raise StateError("at least one party must measure")
    ti, tf = ens.initial.tensor(), ens.final.tensor()
    for k, d in measuring:
        w = qstate.direction_unitary(d).conj().T
        ti = _rotate_axis(ti, w, k - 1)
        tf = _rotate_axis(tf, w, k - 1)
    idle = tuple(k - 1 for k in range(1, n + 1) if k not in {m for m, _ in measuring})
    amps = np.sum(tf.conj() * ti, axis=idle) if idle else tf.conj() * ti
    probs = _normalize(np.abs(amps) ** 2).reshape(-1)
    outcomes = itertools.product(qstate.OUTCOMES, repeat=len(measuring))
    return OutcomeDistribution([str(k) for k, _ in measuring], dict(zip(outcomes, probs.tolist())))


@dataclass(frozen=True, eq=False)
class ApplyUnitary:
    """Single-particle unitary, optionally conditioned on an earlier outcome.

    ``when=("A", "d")`` applies it only on branches where the measurement
    labelled ``"A"`` read ``"d"``.
    """

    party: int
    unitary: np.ndarray
    when: Optional[tuple[str, str]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "unitary", qstate.as_unitary2(self.unitary))


@dataclass(frozen=True, eq=False)
class Measure:
    label: str
    projectors: tuple[tuple[str, np.ndarray], ...]

    @classmethod
    def local(cls, label: str, n: int, party: int, d: MeasurementDirection) -> Measure:
        return cls(label, tuple(local_family(n, party, d)))

    @classmethod
    def pair(cls, label: str, n: int, parties: tuple[int, int], basis: Mapping[str, PureState]) -> Measure:
        return cls(label, tuple(basis_family(n, parties, basis)))


Event = Union[ApplyUnitary, Measure]


class EventSequence:
    """Ordered intermediate-time events between the two boundary states."""

    def __init__(self, events: Sequence[Event]):
        self.events: tuple[Event, ...] = tuple(events)

    def validate(self, n: int) -> None:
        dim = 2**n
        seen: set[str] = set()
        for ev in self.events:
            if isinstance(ev, ApplyUnitary):
                qstate.check_party(n, ev.party)
                if ev.when is not None and ev.when[0] not in seen:
                    raise StateError(f"unitary conditioned on unknown or later measurement {ev.when[0]!r}")
            elif isinstance(ev, Measure):
                if ev.label in seen:
                    raise StateError(f"duplicate measurement label {ev.label!r}")
                check_family(ev.projectors, dim)
                seen.add(ev.label)
            else:
                raise StateError(f"unknown event {ev!r}")

    @property
    def labels(self) -> list[str]:
        return [ev.label for ev in self.events if isinstance(ev, Measure)]


def sequential_abl(ens: PrePostEnsemble, seq: Union[EventSequence, Sequence[Event]]) -> OutcomeDistribution:
    """ABL statistics of an ordered chain of unitaries and measurements.

    Each outcome string s gets weight ``|<f| E_k ... E_1 |i>|^2`` with the
    projectors selected by s; weights are normalized over all strings.
    """
    if not isinstance(seq, EventSequence):
        seq = EventSequence(seq)
    n = ens.num_parties
    seq.validate(n)
    if not seq.labels:
        raise StateError("event sequence contains no measurement")
    branches: list[tuple[Outcome, dict[str, str], np.ndarray]] = [((), {}, ens.initial.amplitudes)]
    for ev in seq.events:
        if isinstance(ev, ApplyUnitary):
            full = qstate.embed(ev.unitary, n, ev.party)
            branches = [
                (o, rec, full @ v if ev.when is None or rec.get(ev.when[0]) == ev.when[1] else v)
                for o, rec, v in branches
            ]
        else:
            branches = [
                (o + (sym,), {**rec, ev.label: sym}, np.asarray(p) @ v)
                for o, rec, v in branches
                for sym, p in ev.projectors
            ]
    f = ens.final.amplitudes
    weights = np.array([abs(np.vdot(f, v)) ** 2 for _, _, v in branches])
    probs = _normalize(weights)
    return OutcomeDistribution(seq.labels, {o: float(p) for (o, _, _), p in zip(branches, probs)})


BRANCH_FLOOR = 1e-12


def _partial_overlap(state: PureState, parties: tuple[int, int], ket2: np.ndarray) -> np.ndarray:
    """<ket2|_{parties} |state>, a vector over the remaining particles."""
    t = state.tensor()
    k = np.asarray(ket2, dtype=complex).reshape(2, 2).conj()
    out = np.tensordot(t, k, axes=([parties[0] - 1, parties[1] - 1], [0, 1]))
    return out.reshape(-1)


def condition_on_outcome(
    ens4: PrePostEnsemble,
    bob_particles: tuple[int, int],
    bell_outcome: PureState,
    post_unitary: Optional[tuple[int, np.ndarray]] = None,
) -> PrePostEnsemble:
    """Ensemble left on the other particles once a pair measurement read ``bell_outcome``.

    ``post_unitary=(party, U)`` is applied to one of the measured particles
    after the measurement; it therefore rotates the outcome ket seen by the
    final state. The remaining particles keep their relative order.
    """
    n = ens4.num_parties
    p1, p2 = bob_particles
    qstate.check_party(n, p1)
    qstate.check_party(n, p2)
    if p1 == p2:
        raise StateError("the measured particles must be distinct")
    if bell_outcome.num_parties != 2:
        raise StateError("the outcome must be a two-particle state")
    ket = bell_outcome.amplitudes
    final_ket = ket
    if post_unitary is not None:
        party, u = post_unitary
        u = qstate.as_unitary2(u)
        if party == p1:
            final_ket = np.kron(u, np.eye(2)) @ ket
        elif party == p2:
            final_ket = np.kron(np.eye(2), u) @ ket
        else:
            raise StateError("the post-measurement unitary must act on a measured particle")
    vi = _partial_overlap(ens4.initial, (p1, p2), ket)
    vf = _partial_overlap(ens4.final, (p1, p2), final_ket)
    if np.linalg.norm(vi) < BRANCH_FLOOR or np.linalg.norm(vf) < BRANCH_FLOOR:
        raise ZeroBranch("outcome has zero overlap with the initial or final state")
    return PrePostEnsemble(PureState.from_vector(vi), PureState.from_vector(vf))


# -- JSON for event sequences -------------------------------------------------

_NAMED_GATES = {"X": qstate.PAULI_X, "Y": qstate.PAULI_Y, "Z": qstate.PAULI_Z, "H": qstate.HADAMARD, "I": qstate.IDENTITY2}


def direction_from_json(doc) -> MeasurementDirection:
    if isinstance(doc, str):
        try:
            return qstate.NAMED_DIRECTIONS[doc]
        except KeyError:
            raise StateError(f"unknown direction name {doc!r}") from None
    try:
        return MeasurementDirection(float(doc["omega"]), float(doc.get("phi", 0.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise StateError(f"malformed direction: {exc}") from exc


def _matrix_from_json(doc) -> np.ndarray:
    if isinstance(doc, str):
        if doc not in _NAMED_GATES:
            raise StateError(f"unknown gate {doc!r}")
        return _NAMED_GATES[doc]
    try:
        return np.array([[complex(re, im) for re, im in row] for row in doc], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise StateError(f"malformed matrix: {exc}") from exc


def events_from_json(doc: list, n: int) -> EventSequence:
    """Parse an event list.

    Unitary events: ``{"type": "unitary", "party": k, "gate": "X"}`` or
    ``"matrix": [[[re, im], [re, im]], [...]]``, optionally
    ``"when": {"label": "A", "outcome": "d"}``.
    Measure events: ``{"type": "measure", "label": "A", "party": k,
    "direction": "z" | {"omega": w, "phi": p}}`` or, for a pair basis,
    ``{"type": "measure", "label": "Bob", "parties": [k1, k2], "basis": "bell"}``.
    """
    if not isinstance(doc, list):
        raise StateError("event sequence must be a JSON array")
    events: list[Event] = []
    for item in doc:
        if not isinstance(item, dict):
            raise StateError("each event must be an object")
        kind = item.get("type")
        if kind == "unitary":
            m = _matrix_from_json(item.get("gate", item.get("matrix")))
            when = item.get("when")
            cond = (str(when["label"]), str(when["outcome"])) if when else None
            events.append(ApplyUnitary(int(item["party"]), m, cond))
        elif kind == "measure":
            label = str(item["label"])
            if "parties" in item:
                if item.get("basis", "bell") != "bell":
                    raise StateError("only the 'bell' pair basis is supported in JSON")
                parties = tuple(int(p) for p in item["parties"])
                events.append(Measure.pair(label, n, parties, qstate.bell_basis()))
            else:
                d = direction_from_json(item.get("direction", "z"))
                events.append(Measure.local(label, n, int(item["party"]), d))
        else:
            raise StateError(f"unknown event type {kind!r}")
    seq = EventSequence(events)
    seq.validate(n)
    return seq
