"""Simplex and row-stochastic matrix primitives.

All probability vectors and stochastic matrices in this package are plain
float64 numpy arrays validated through the constructors below.
"""

import numpy as np

NEG_CLAMP = -1e-12
SUM_TOL = 1e-9


class ConvergenceError(RuntimeError):
    """Stationary-distribution solver failed to reach tolerance."""


def as_prob_vector(x) -> np.ndarray:
    """Validate and renormalize a point on the simplex.

    Rejects NaN/Inf and entries below the negative clamp; tiny negative
    entries (float drift) are clamped to 0 before renormalizing.
    """
    p = np.asarray(x, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probability vector must be a nonempty 1-d array")
    if not np.all(np.isfinite(p)):
        raise ValueError("probability vector contains NaN/Inf")
    if np.any(p < NEG_CLAMP):
        raise ValueError(f"negative entry below clamp threshold: min={p.min()}")
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if total <= 0.0:
        raise ValueError("probability vector sums to zero")
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"entries sum to {total}, not 1")
    return p / total


def as_loss_vector(x, max_loss: float = 1.0) -> np.ndarray:
    """Validate a loss vector with entries in [0, max_loss]."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("loss vector must be a nonempty 1-d array")
    if not np.all(np.isfinite(v)):
        raise ValueError("loss vector contains NaN/Inf")
    if np.any(v < -SUM_TOL) or np.any(v > max_loss + SUM_TOL):
        raise ValueError(f"loss entries outside [0, {max_loss}]")
    return np.clip(v, 0.0, max_loss)


def as_stochastic_matrix(m) -> np.ndarray:
    """Validate a row-stochastic matrix; each row goes through as_prob_vector."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("stochastic matrix must be square")
    return np.vstack([as_prob_vector(row) for row in a])


def outer_product(p: np.ndarray, loss: np.ndarray) -> np.ndarray:
    """Rank-one loss matrix with entry (i, j) = p_i * loss_j."""
    p = np.asarray(p, dtype=np.float64)
    loss = np.asarray(loss, dtype=np.float64)
    if p.shape != loss.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {loss.shape}")
    return np.outer(p, loss)


def stationary_distribution(
    phi: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 200_000,
    damping: float = 1e-10,
) -> np.ndarray:
    """Stationary distribution of a row-stochastic matrix.

    Power iteration on the damped chain (1-gamma)*phi + gamma/d * 11^T,
    starting from uniform.  The damped chain is irreducible and aperiodic,
    so the fixed point is unique; damping also picks the uniform-symmetric
    solution for reducible chains such as the identity.  If plain power
    iteration stalls (slowly mixing chain), falls back to repeated squaring
    of the damped transition operator, which computes the same limit.
    """
    phi = np.asarray(phi, dtype=np.float64)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if phi.ndim != 2 or phi.shape[0] != phi.shape[1]:
        raise ValueError("transition matrix must be square")
    if np.any(phi < NEG_CLAMP) or np.abs(phi.sum(axis=1) - 1.0).max() > 1e-6:
        raise ValueError("transition matrix must be row-stochastic")
    d = phi.shape[0]
    uniform = np.full(d, 1.0 / d)

    def residual(p):
        return np.abs(p - ((1.0 - damping) * (phi.T @ p) + damping * p.sum() * uniform)).sum()

    p = uniform.copy()
    direct_iters = min(max_iter, 2000)
    for _ in range(direct_iters):
        if residual(p) <= tol:
            return p
        p = (1.0 - damping) * (phi.T @ p) + damping * uniform
        p = p / p.sum()
    if residual(p) <= tol:
        return p

    # Squaring the damped operator: after s squarings the chain has run
    # 2^s steps, so ~60 squarings cover even a 1/damping mixing time.
    m = (1.0 - damping) * phi.T + damping / d
    for _ in range(64):
        m = m @ m
        m = m / m.sum(axis=0, keepdims=True)
        p = m @ uniform
        p = p / p.sum()
        if residual(p) <= tol:
            return p
    raise ConvergenceError(f"stationary distribution did not reach tol={tol}")
