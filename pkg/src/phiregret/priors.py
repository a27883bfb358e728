"""The binary-transformation prior family and the comparator complexity measure.

A binary transformation over d experts is stored as an integer array
``phi_map`` of length d with ``phi_map[i] = j`` meaning expert i is rerouted
to expert j (0-based).  The prior is a mixture of d+1 product distributions,
each induced by a row-stochastic matrix psi.
"""

import itertools
from dataclasses import dataclass

import numpy as np

ENUM_CAP = 7  # d^d transforms; 7^7 ~ 8.2e5 keeps oracle sweeps fast
LOG_DOMAIN_DIM = 30  # beyond this, d-fold products underflow; use log masses


@dataclass(frozen=True)
class PriorFamily:
    """Mixture of d+1 product priors over binary transformations."""

    d: int
    psi: np.ndarray  # (d+1, d, d), psi[k] row-stochastic
    mixture_weights: np.ndarray  # (d+1,), d entries 1/(2d) then 1/2


@dataclass(frozen=True)
class ComplexityReport:
    d_self: int  # experts mapped to themselves
    d_unif: int  # largest number of experts sharing one target
    c: int  # min(d - d_self, d - d_unif + 1)


def make_prior_family(d: int) -> PriorFamily:
    """Build the d+1 psi matrices and their mixture weights.

    psi^k (k < d) routes every expert to expert k with mass 1 - 1/d and
    uniformly otherwise; psi^d keeps each expert in place with mass 1 - 1/d.
    """
    if d < 2:
        raise ValueError("prior family requires d >= 2")
    a = (d - 2) / (d - 1)
    b = 1.0 / (d * (d - 1))
    psi = np.full((d + 1, d, d), b)
    for k in range(d):
        psi[k, :, k] += a
    psi[d] += a * np.eye(d)
    weights = np.full(d + 1, 1.0 / (2 * d))
    weights[d] = 0.5
    return PriorFamily(d=d, psi=psi, mixture_weights=weights)


def _check_map(phi_map, d=None) -> np.ndarray:
    m = np.asarray(phi_map, dtype=np.intp)
    if m.ndim != 1:
        raise ValueError("transform map must be 1-d")
    if d is not None and m.size != d:
        raise ValueError(f"dimension mismatch: map has {m.size} entries, expected {d}")
    bound = m.size if d is None else d
    if np.any(m < 0) or np.any(m >= bound):
        raise ValueError("map image index out of range")
    return m


def transform_matrix(phi_map) -> np.ndarray:
    """0/1 row-stochastic matrix of a binary transformation."""
    m = _check_map(phi_map)
    mat = np.zeros((m.size, m.size))
    mat[np.arange(m.size), m] = 1.0
    return mat


def induced_mass(psi: np.ndarray, phi_map) -> float:
    """Product mass prod_i psi[i, phi(i)] of phi under a single psi."""
    m = _check_map(phi_map, psi.shape[0])
    return float(np.prod(psi[np.arange(m.size), m]))


def log_induced_mass(psi: np.ndarray, phi_map) -> float:
    m = _check_map(phi_map, psi.shape[0])
    return float(np.log(psi[np.arange(m.size), m]).sum())


def log_prior_mass(family: PriorFamily, phi_map) -> float:
    """log of the mixture mass; stable for any d."""
    m = _check_map(phi_map, family.d)
    idx = np.arange(family.d)
    logs = np.log(family.psi[:, idx, m]).sum(axis=1) + np.log(family.mixture_weights)
    hi = logs.max()
    return float(hi + np.log(np.exp(logs - hi).sum()))


def prior_mass(family: PriorFamily, phi_map) -> float:
    """Mixture mass of phi under the prior; strictly positive.

    Computed in the log domain once d exceeds LOG_DOMAIN_DIM, where the
    direct d-fold products underflow; callers needing the raw value at
    large d should use log_prior_mass.
    """
    if family.d > LOG_DOMAIN_DIM:
        return float(np.exp(log_prior_mass(family, phi_map)))
    m = _check_map(phi_map, family.d)
    idx = np.arange(family.d)
    masses = np.prod(family.psi[:, idx, m], axis=1)
    return float(masses @ family.mixture_weights)


def complexity(phi_map) -> ComplexityReport:
    """Self-map count, max target multiplicity, and the combined measure."""
    m = _check_map(phi_map)
    d = m.size
    d_self = int((m == np.arange(d)).sum())
    d_unif = int(np.bincount(m, minlength=d).max())
    return ComplexityReport(d_self=d_self, d_unif=d_unif, c=min(d - d_self, d - d_unif + 1))


def enumerate_binary(d: int):
    """Yield all d^d binary transformations in lexicographic order."""
    if d > ENUM_CAP:
        raise ValueError(f"enumeration capped at d={ENUM_CAP} (requested {d})")
    if d < 1:
        raise ValueError("d must be >= 1")
    for combo in itertools.product(range(d), repeat=d):
        yield np.array(combo, dtype=np.intp)
