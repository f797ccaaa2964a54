"""Random members of each causal class, for the property tests."""

import numpy as np

from ppsbox import qstate
from ppsbox.abl import PrePostEnsemble
from ppsbox.presets import max_entangled_ensemble, swapped_ensemble


def random_product(rng):
    k = [qstate.random_state(rng, 1) for _ in range(4)]
    return PrePostEnsemble(qstate.tensor(k[0], k[1]), qstate.tensor(k[2], k[3]))


def random_max_entangled(rng):
    bases = tuple(qstate.random_unitary2(rng) for _ in range(4))
    ti, tf = rng.uniform(0, 2 * np.pi, 2)
    return max_entangled_ensemble(float(ti), float(tf), bases)


def random_swapped(rng, lo=0.05, hi=0.95):
    alpha = float(rng.uniform(lo, hi))
    while abs(alpha - 0.5) < 0.02:
        alpha = float(rng.uniform(lo, hi))
    bases = (qstate.random_unitary2(rng), qstate.random_unitary2(rng))
    return swapped_ensemble(alpha, float(rng.uniform(0, 2 * np.pi)), bases), alpha
