"""Dense state-vector algebra for a handful of spin-1/2 particles.

Amplitude ordering is fixed for the whole package: particle 1 is the most
significant bit of the basis index, and bit value 0 means spin up along z.
So for two particles the basis reads ``|uu>, |ud>, |du>, |dd>``.

Parties are numbered from 1, matching how particles are named in the text
("particle 1 belongs to Alice").
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi
NORM_TOL = 1e-12
JSON_NORM_TOL = 1e-9

UP, DOWN = "u", "d"
OUTCOMES = (UP, DOWN)


class StateError(ValueError):
    """Raised for malformed states, operators or party indices."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized ket over ``num_parties`` spin-1/2 particles.

    A final (post-selected) state is stored as a ket too; its bra is the
    entrywise conjugate.
    """

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        n = amps.size.bit_length() - 1
        if amps.size < 2 or 2**n != amps.size:
            raise StateError(f"amplitude count {amps.size} is not a power of two >= 2")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise StateError(f"state is not normalized (norm = {norm!r})")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @classmethod
    def from_vector(cls, vec: Iterable[complex] | np.ndarray) -> PureState:
        """Normalize an arbitrary nonzero vector into a state."""
        v = np.asarray(vec, dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if not np.isfinite(norm) or norm < 1e-300:
            raise StateError("cannot normalize a zero or non-finite vector")
        return cls(v / norm)

    @property
    def num_parties(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per particle."""
        return self.amplitudes.reshape((2,) * self.num_parties)

    def bra(self) -> np.ndarray:
        return self.amplitudes.conj()

    def __repr__(self) -> str:
        return f"PureState(num_parties={self.num_parties}, amplitudes={self.amplitudes.tolist()!r})"


@dataclass(frozen=True)
class MeasurementDirection:
    """Local spin-measurement direction: polar angle ``omega``, azimuth ``phi``.

    Both angles are stored modulo 2*pi.
    """

    omega: float
    phi: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.omega) and math.isfinite(self.phi)):
            raise StateError("direction angles must be finite")
        object.__setattr__(self, "omega", _wrap(float(self.omega)))
        object.__setattr__(self, "phi", _wrap(float(self.phi)))

    def folded(self) -> MeasurementDirection:
        """Equivalent direction with omega in [0, pi].

        V(2*pi - w, p) equals -V(w, p + pi), so both give the same projectors.
        """
        if self.omega <= math.pi:
            return self
        return MeasurementDirection(TWO_PI - self.omega, self.phi + math.pi)

    def bloch_vector(self) -> np.ndarray:
        w, p = self.omega, self.phi
        return np.array([math.sin(w) * math.cos(p), math.sin(w) * math.sin(p), math.cos(w)])

    def to_json(self) -> dict:
        return {"omega": self.omega, "phi": self.phi}


def _wrap(angle: float) -> float:
    a = math.fmod(angle, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    # fmod can land exactly on 2*pi after the shift for tiny negative inputs
    return 0.0 if a >= TWO_PI else a


Z_DIR = MeasurementDirection(0.0, 0.0)
X_DIR = MeasurementDirection(math.pi / 2, 0.0)
Y_DIR = MeasurementDirection(math.pi / 2, math.pi / 2)
NAMED_DIRECTIONS = {"z": Z_DIR, "x": X_DIR, "y": Y_DIR}


def direction_unitary(d: MeasurementDirection) -> np.ndarray:
    """Rotation taking |up>, |down> to the measurement basis along ``d``."""
    c = math.cos(d.omega / 2)
    s = math.sin(d.omega / 2)
    e = complex(math.cos(d.phi), math.sin(d.phi))
    return np.array([[c, -e.conjugate() * s], [e * s, c]], dtype=complex)


def direction_unitaries(omega: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Vectorized :func:`direction_unitary`; returns shape ``omega.shape + (2, 2)``."""
    omega = np.asarray(omega, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c = np.cos(omega / 2)
    s = np.sin(omega / 2)
    e = np.exp(1j * phi)
    out = np.empty(np.broadcast(omega, phi).shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = -np.conj(e) * s
    out[..., 1, 0] = e * s
    out[..., 1, 1] = c
    return out


def is_unitary(u: np.ndarray, tol: float = NORM_TOL) -> bool:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) <= tol)


def as_unitary2(u) -> np.ndarray:
    """Validate a 2x2 unitary and return it as a read-only complex array."""
    m = np.asarray(u, dtype=complex)
    if m.shape != (2, 2) or not is_unitary(m):
        raise StateError("expected a 2x2 unitary matrix")
    return _frozen(m)


PAULI_X = _frozen([[0, 1], [1, 0]])
PAULI_Y = _frozen([[0, -1j], [1j, 0]])
PAULI_Z = _frozen([[1, 0], [0, -1]])
IDENTITY2 = _frozen(np.eye(2))
# Sign pattern as used for the swapping protocol (not the usual [[1,1],[1,-1]]).
HADAMARD = _frozen(np.array([[1, 1], [-1, 1]]) / math.sqrt(2))


def basis_ket(outcome: str) -> np.ndarray:
    if outcome == UP:
        return np.array([1, 0], dtype=complex)
    if outcome == DOWN:
        return np.array([0, 1], dtype=complex)
    raise StateError(f"outcome must be 'u' or 'd', got {outcome!r}")


def direction_ket(d: MeasurementDirection, outcome: str) -> np.ndarray:
    return direction_unitary(d) @ basis_ket(outcome)


# Spin eigenkets used to write down the named states. The x pair is the usual
# (|u> +- |d>)/sqrt2; the y pair are the columns of direction_unitary(y).
SPIN_KETS = {
    ("z", UP): np.array([1, 0], dtype=complex),
    ("z", DOWN): np.array([0, 1], dtype=complex),
    ("x", UP): np.array([1, 1], dtype=complex) / math.sqrt(2),
    ("x", DOWN): np.array([1, -1], dtype=complex) / math.sqrt(2),
    ("y", UP): np.array([1, 1j], dtype=complex) / math.sqrt(2),
    ("y", DOWN): np.array([1j, 1], dtype=complex) / math.sqrt(2),
}


def spin_ket(axis: str, outcome: str) -> np.ndarray:
    return SPIN_KETS[(axis, outcome)].copy()


def product_state(*kets: Sequence[complex]) -> PureState:
    return PureState.from_vector(reduce(np.kron, [np.asarray(k, dtype=complex) for k in kets]))


def tensor(a: PureState, b: PureState) -> PureState:
    return PureState(np.kron(a.amplitudes, b.amplitudes))


def tensor_all(*states: PureState) -> PureState:
    return reduce(tensor, states)


def check_party(n: int, k: int) -> None:
    if not (1 <= k <= n):
        raise StateError(f"party index {k} out of range 1..{n}")


def embed(op: np.ndarray, n: int, k: int) -> np.ndarray:
    """Single-particle operator ``op`` on party ``k`` of ``n``, identity elsewhere."""
    check_party(n, k)
    left = np.eye(2 ** (k - 1))
    right = np.eye(2 ** (n - k))
    return np.kron(np.kron(left, np.asarray(op, dtype=complex)), right)


def embed_pair(op: np.ndarray, n: int, k1: int, k2: int) -> np.ndarray:
    """Two-particle operator on parties (k1, k2), which need not be adjacent.

    ``op`` acts on the ordered pair: its first tensor factor is party ``k1``.
    """
    check_party(n, k1)
    check_party(n, k2)
    if k1 == k2:
        raise StateError("a two-particle operator needs two distinct parties")
    op = np.asarray(op, dtype=complex).reshape(2, 2, 2, 2)
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    s1, s2 = n - k1, n - k2
    for col in range(dim):
        b1, b2 = (col >> s1) & 1, (col >> s2) & 1
        base = col & ~((1 << s1) | (1 << s2))
        for a1 in (0, 1):
            for a2 in (0, 1):
                out[base | (a1 << s1) | (a2 << s2), col] += op[a1, a2, b1, b2]
    return out


def local_projector(n: int, k: int, d: MeasurementDirection, outcome: str) -> np.ndarray:
    """Projector onto ``outcome`` along ``d`` for party ``k``, identity on the rest."""
    check_party(n, k)
    v = direction_ket(d, outcome)
    return embed(np.outer(v, v.conj()), n, k)


def bell_basis() -> dict[str, PureState]:
    """phi+, phi-, psi+, psi- in the usual sign convention."""
    r = 1 / math.sqrt(2)
    return {
        "phi+": PureState([r, 0, 0, r]),
        "phi-": PureState([r, 0, 0, -r]),
        "psi+": PureState([0, r, r, 0]),
        "psi-": PureState([0, r, -r, 0]),
    }


def singlet() -> PureState:
    return bell_basis()["psi-"]


def gram_matrix(states: Sequence[PureState]) -> np.ndarray:
    m = np.array([s.amplitudes for s in states])
    return m.conj() @ m.T


def phase_distance(a: PureState, b: PureState) -> float:
    """max_k |a_k - e^{i g} b_k| minimized over the global phase g.

    The minimizing phase of the max-norm is not closed form; we align with
    the overlap phase (exact for the 2-norm) and then polish over g.
    """
    if a.dim != b.dim:
        return math.inf
    x, y = a.amplitudes, b.amplitudes
    ov = np.vdot(y, x)
    g0 = float(np.angle(ov)) if abs(ov) > 1e-15 else 0.0

    def cost(g: float) -> float:
        return float(np.max(np.abs(x - np.exp(1j * g) * y)))

    best = cost(g0)
    step = 0.1
    g = g0
    while step > 1e-13:
        moved = False
        for cand in (g - step, g + step):
            c = cost(cand)
            if c < best:
                best, g, moved = c, cand, True
        if not moved:
            step /= 2
    return best


def equal_up_to_phase(a: PureState, b: PureState, tol: float = 1e-10) -> bool:
    return phase_distance(a, b) <= tol


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """``psi = c0 |a0 b0> + e^{i phase} c1 |a1 b1>``.

    Columns of ``basis_a``/``basis_b`` are the local Schmidt vectors. Each
    vector has its first non-negligible component real and positive, so the
    relative phase is carried by ``phase`` alone.
    """

    coefficients: tuple[float, float]
    basis_a: np.ndarray
    basis_b: np.ndarray
    phase: float

    def reconstruct(self) -> np.ndarray:
        c0, c1 = self.coefficients
        a, b = self.basis_a, self.basis_b
        return c0 * np.kron(a[:, 0], b[:, 0]) + np.exp(1j * self.phase) * c1 * np.kron(a[:, 1], b[:, 1])


def _phase_fix(v: np.ndarray) -> tuple[np.ndarray, complex]:
    """Rotate ``v`` so its leading component is real positive; return the removed phase."""
    idx = int(np.argmax(np.abs(v) > 1e-9))
    ph = v[idx] / abs(v[idx])
    return v / ph, ph


def schmidt_decompose(s: PureState, degenerate_tol: float = 1e-10) -> SchmidtDecomposition:
    if s.num_parties != 2:
        raise StateError("Schmidt decomposition needs a two-particle state")
    m = s.amplitudes.reshape(2, 2)
    u, sv, vh = np.linalg.svd(m)
    if abs(sv[0] - sv[1]) <= degenerate_tol:
        # maximally entangled: m * sqrt2 is unitary; keep Alice's basis computational
        u = np.eye(2, dtype=complex)
        vh = m / (sv[0] if sv[0] > 0 else 1.0)
        sv = np.array([math.sqrt(0.5), math.sqrt(0.5)]) if sv[0] > 0 else sv
    a = u.copy()
    b = vh.T.copy()
    weights = []
    for k in range(2):
        a[:, k], pa = _phase_fix(a[:, k])
        b[:, k], pb = _phase_fix(b[:, k])
        weights.append(pa * pb)
    phase = float(np.angle(weights[1] / weights[0])) % TWO_PI
    c0, c1 = float(sv[0]), float(sv[1])
    norm = math.hypot(c0, c1)
    return SchmidtDecomposition((c0 / norm, c1 / norm), a, b, phase)


def random_state(rng: np.random.Generator, num_parties: int) -> PureState:
    v = rng.normal(size=2**num_parties) + 1j * rng.normal(size=2**num_parties)
    return PureState.from_vector(v)


def random_direction(rng: np.random.Generator) -> MeasurementDirection:
    """Uniform on the sphere: omega = arccos(uniform[-1, 1]), phi uniform."""
    return MeasurementDirection(math.acos(rng.uniform(-1.0, 1.0)), rng.uniform(0.0, TWO_PI))


def random_directions(rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
    omega = np.arccos(rng.uniform(-1.0, 1.0, size=size))
    phi = rng.uniform(0.0, TWO_PI, size=size)
    return omega, phi


def random_unitary2(rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def state_to_json(s: PureState) -> dict:
    return {
        "num_parties": s.num_parties,
        "amplitudes": [[float(a.real), float(a.imag)] for a in s.amplitudes],
    }


def state_from_json(doc: dict) -> PureState:
    try:
        n = int(doc["num_parties"])
        raw = doc["amplitudes"]
        amps = np.array([complex(float(re), float(im)) for re, im in raw], dtype=complex)
    except (KeyError, TypeError, ValueError) as exc:
        raise StateError(f"malformed state document: {exc}") from exc
    if n < 1 or amps.size != 2**n:
        raise StateError(f"expected {2 ** n if n >= 1 else '2^n'} amplitudes for {n} parties, got {amps.size}")
    norm = np.linalg.norm(amps)
    if abs(norm - 1.0) > JSON_NORM_TOL:
        raise StateError(f"state is not normalized (norm = {norm!r})")
    return PureState(amps / norm)
