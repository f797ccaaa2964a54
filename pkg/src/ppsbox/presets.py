"""Named ensembles used throughout the examples and the CLI."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import qstate
from .abl import PrePostEnsemble
from .qstate import PureState, spin_ket

U, D = qstate.UP, qstate.DOWN


def singlet_xy() -> PrePostEnsemble:
    """Singlet pre-selection, post-selection on <up_x| (Alice) <up_y| (Bob)."""
    return PrePostEnsemble(qstate.singlet(), qstate.product_state(spin_ket("x", U), spin_ket("y", U)))


def singlet_singlet() -> PrePostEnsemble:
    return PrePostEnsemble(qstate.singlet(), qstate.singlet())


def max_entangled_ensemble(
    theta_i: float = 0.0,
    theta_f: float = 0.0,
    bases: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray] | None = None,
) -> PrePostEnsemble:
    """Both boundary states maximally entangled, each in its own local bases.

    ``bases`` holds four 2x2 unitaries whose columns are (up, down) for the
    initial state's two particles and the final state's two particles.
    """
    e = np.eye(2, dtype=complex)
    a, b, c, d = bases if bases is not None else (e, e, e, e)
    r = 1 / math.sqrt(2)
    vi = r * (np.kron(a[:, 0], b[:, 0]) + np.exp(1j * theta_i) * np.kron(a[:, 1], b[:, 1]))
    # the bra carries e^{-i theta_f}, so the stored ket carries e^{+i theta_f}
    vf = r * (np.kron(c[:, 0], d[:, 0]) + np.exp(1j * theta_f) * np.kron(c[:, 1], d[:, 1]))
    return PrePostEnsemble(PureState.from_vector(vi), PureState.from_vector(vf))


def swapped_ensemble(
    alpha: float,
    theta: float = 0.0,
    bases: tuple[np.ndarray, np.ndarray] | None = None,
) -> PrePostEnsemble:
    """Initial sqrt(a)|uu'> + e^{i t} sqrt(1-a)|dd'>, final with the weights exchanged.

    ``bases`` are the two local unitaries (columns up, down) shared by both
    states; default is the z basis.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    e = np.eye(2, dtype=complex)
    a, b = bases if bases is not None else (e, e)
    uu = np.kron(a[:, 0], b[:, 0])
    dd = np.kron(a[:, 1], b[:, 1])
    ph = np.exp(1j * theta)
    vi = math.sqrt(alpha) * uu + ph * math.sqrt(1 - alpha) * dd
    vf = math.sqrt(1 - alpha) * uu + ph * math.sqrt(alpha) * dd
    return PrePostEnsemble(PureState.from_vector(vi), PureState.from_vector(vf))


def product_ensemble(dirs: tuple[qstate.MeasurementDirection, ...] | None = None) -> PrePostEnsemble:
    """Product pre- and post-selection; ``dirs`` gives the four up-directions."""
    if dirs is None:
        dirs = (qstate.Z_DIR, qstate.X_DIR, qstate.Y_DIR, qstate.MeasurementDirection(1.0, 2.0))
    k = [qstate.direction_ket(d, U) for d in dirs]
    return PrePostEnsemble(qstate.product_state(k[0], k[1]), qstate.product_state(k[2], k[3]))


def eq9_ensemble() -> PrePostEnsemble:
    """Bell pair pre-selection; post-selection (<u_z|<u_x| - <d_z|<d_x|)/sqrt2."""
    r = 1 / math.sqrt(2)
    vi = r * (np.kron(spin_ket("z", U), spin_ket("z", U)) + np.kron(spin_ket("z", D), spin_ket("z", D)))
    vf = r * (np.kron(spin_ket("z", U), spin_ket("x", U)) - np.kron(spin_ket("z", D), spin_ket("x", D)))
    return PrePostEnsemble(PureState.from_vector(vi), PureState.from_vector(vf))


def partial_equal_ensemble(weight: float = 0.9) -> PrePostEnsemble:
    """Equal, partially entangled boundary states sqrt(w)|uu> + sqrt(1-w)|dd>."""
    v = np.array([math.sqrt(weight), 0, 0, math.sqrt(1 - weight)], dtype=complex)
    s = PureState.from_vector(v)
    return PrePostEnsemble(s, s)


def ghz_ensemble() -> PrePostEnsemble:
    """GHZ along y before, GHZ along x (relative minus) after."""
    r = 1 / math.sqrt(2)

    def triple(axis: str, o: str) -> np.ndarray:
        k = spin_ket(axis, o)
        return np.kron(np.kron(k, k), k)

    vi = r * (triple("y", U) + triple("y", D))
    vf = r * (triple("x", U) - triple("x", D))
    return PrePostEnsemble(PureState.from_vector(vi), PureState.from_vector(vf))


def swap_double() -> PrePostEnsemble:
    """Two copies of the maximal-correlation ensemble on (Alice, Bob1, Bob2, Clare)."""
    from .swapping import build_double_ensemble

    return build_double_ensemble(eq9_ensemble(), eq9_ensemble())


PRESETS: dict[str, Callable[..., PrePostEnsemble]] = {
    "singlet-xy": singlet_xy,
    "singlet-singlet": singlet_singlet,
    "eq2-generic": lambda **kw: max_entangled_ensemble(
        kw.get("theta", 0.7),
        kw.get("theta_f", 1.9),
        (
            qstate.direction_unitary(qstate.MeasurementDirection(0.4, 1.1)),
            qstate.direction_unitary(qstate.MeasurementDirection(2.2, 0.3)),
            qstate.direction_unitary(qstate.MeasurementDirection(1.3, 4.0)),
            qstate.direction_unitary(qstate.MeasurementDirection(0.9, 5.5)),
        ),
    ),
    "eq3-swapped": lambda **kw: swapped_ensemble(kw.get("alpha", 0.3), kw.get("theta", 0.4)),
    "eq9": eq9_ensemble,
    "product": product_ensemble,
    "equal-partial": lambda **kw: partial_equal_ensemble(kw.get("alpha", 0.9)),
    "ghz": ghz_ensemble,
    # older name for the three-party example
    "ghz4": ghz_ensemble,
    "swap-double": swap_double,
}


def get_preset(name: str, **params) -> PrePostEnsemble:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    if name in ("eq2-generic", "eq3-swapped", "equal-partial"):
        return factory(**{k: v for k, v in params.items() if v is not None})
    return factory()
