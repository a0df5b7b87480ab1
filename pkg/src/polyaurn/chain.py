"""m-dependent Markov chains on the complete m-ary tree.

Levels are numbered upward from the leaves (level 0) to the root (level
``depth``). With 0-based positions, node ``i`` of level ``k`` has parents
``m*i, .., m*i + m - 1`` of level ``k - 1``; the ``r``-th parent fills slot
``r`` of the transition tensor. Level ``k`` therefore holds ``m**(depth-k)``
nodes and the leaf profile has ``m**depth`` entries.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import CertificateViolated, DepthMismatch, DimensionMismatch, MaxIterExceeded, NotContractive
from .fixed_point import DEFAULT_MAX_ITER, DEFAULT_TOL, FixedPointResult, picard
from .tensor import StochasticTensor, barycenter, ergodicity_coefficients, product_measure


@dataclass(frozen=True, eq=False)
class LeafProfile:
    """Initial laws of the ``m**depth`` leaves, one row per leaf."""

    distributions: np.ndarray
    depth: int

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.distributions, dtype=float))
        if np.any(p < -1e-12) or np.any(np.abs(p.sum(axis=1) - 1) > 1e-12 * p.shape[1]):
            raise ValueError("every leaf distribution must lie on the simplex")
        object.__setattr__(self, "distributions", p)

    @classmethod
    def constant(cls, dist, m: int, depth: int) -> "LeafProfile":
        dist = np.asarray(dist, dtype=float)
        return cls(np.tile(dist, (m**depth, 1)), depth)

    @classmethod
    def uniform(cls, state_size: int, m: int, depth: int) -> "LeafProfile":
        return cls.constant(barycenter(state_size), m, depth)

    @classmethod
    def point(cls, state_size: int, state: int, m: int, depth: int) -> "LeafProfile":
        e = np.zeros(state_size)
        e[state] = 1.0
        return cls.constant(e, m, depth)


@dataclass
class ChainResult:
    pi_1_n: np.ndarray
    levels: List[np.ndarray]
    per_level_max_error: Optional[List[float]]
    q: float
    stationary: Optional[np.ndarray]


def _check_leaves(t: StochasticTensor, leaves: LeafProfile):
    n_leaves, size = leaves.distributions.shape
    if size != t.state_size:
        raise DimensionMismatch(f"leaf laws have {size} states, tensor has {t.state_size}")
    if n_leaves != t.arity**leaves.depth:
        raise DepthMismatch(
            f"{n_leaves} leaves for depth {leaves.depth}; need {t.arity ** leaves.depth}"
        )


def _up(t: StochasticTensor, level: np.ndarray) -> np.ndarray:
    """Combine consecutive groups of ``m`` laws through ``t``."""
    m, n = t.arity, t.state_size
    groups = level.reshape(-1, m, n)
    joint = groups[:, 0]
    for r in range(1, m):
        joint = (joint[:, :, None] * groups[:, r, None, :]).reshape(len(groups), -1)
    return joint @ t.entries.reshape(n, -1).T


def stationary(
    t: StochasticTensor,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    strict: bool = False,
) -> FixedPointResult:
    """Fixed point of ``pi -> T(pi, .., pi)``, iterated from the uniform law.

    Certified (hence unique) when the ergodicity-coefficient sum ``q < 1``.
    With ``strict=True`` a non-contractive tensor raises
    :class:`NotContractive` instead of being attempted.
    """
    q = ergodicity_coefficients(t).q
    if strict and q >= 1:
        raise NotContractive(f"q = {q:.6g} >= 1")
    return picard(
        lambda p: t(*(p,) * t.arity),
        barycenter(t.state_size),
        q=q,
        certified=q < 1,
        tol=tol,
        max_iter=max_iter,
    )


def evolve(t: StochasticTensor, leaves: LeafProfile, pi=None) -> ChainResult:
    """Exact laws of every node, level by level, up to the root.

    ``pi`` (the stationary law) is computed when not given; per-level errors
    ``max_i ||pi_i^(k) - pi||_1`` are reported when it is available.
    """
    _check_leaves(t, leaves)
    levels = [leaves.distributions]
    for _ in range(leaves.depth):
        levels.append(_up(t, levels[-1]))
    q = ergodicity_coefficients(t).q
    if pi is None:
        try:
            pi = stationary(t).x_star
        except MaxIterExceeded:
            pi = None
    errors = None
    if pi is not None:
        pi = np.asarray(pi, dtype=float)
        errors = [float(np.abs(lv - pi).sum(axis=1).max()) for lv in levels]
    return ChainResult(levels[-1][0], levels, errors, q, pi)


def verify_product_form(t_induced: StochasticTensor, nu, atol: float = 1e-10):
    """Check that ``nu ⊗ .. ⊗ nu`` is invariant for the induced tensor.

    Returns ``(holds, defect)`` with ``defect = ||T(p, .., p) - p||_1``.
    """
    nu = np.asarray(nu, dtype=float)
    m = t_induced.arity
    if len(nu) ** m != t_induced.state_size:
        raise DimensionMismatch(
            f"{len(nu)} colours do not match state space of size {t_induced.state_size}"
        )
    p = product_measure(nu, m)
    defect = float(np.abs(t_induced(*(p,) * m) - p).sum())
    return defect <= atol, defect


@dataclass
class CertificateRow:
    level: int
    max_error: float
    bound: float


def geometric_certificate(
    t: StochasticTensor, leaves: LeafProfile, pi=None, slack: float = 1e-10
) -> List[CertificateRow]:
    """Check ``max_i ||pi_i^(k) - pi|| <= q**k max_i ||pi_i^(0) - pi||`` per level.

    Raises
    ------
    NotContractive
        If ``q >= 1``.
    CertificateViolated
    """
    q = ergodicity_coefficients(t).q
    if q >= 1:
        raise NotContractive(f"q = {q:.6g} >= 1")
    res = evolve(t, leaves, pi)
    errs = res.per_level_max_error
    rows = []
    for k, err in enumerate(errs):
        bound = q**k * errs[0]
        rows.append(CertificateRow(k, err, bound))
        if err > bound + slack:
            raise CertificateViolated(f"level {k}: error {err:.3e} > bound {bound:.3e}")
    return rows


def certificate_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["level", "max_error", "bound"])
    for r in rows:
        w.writerow([r.level, repr(r.max_error), repr(r.bound)])
    return buf.getvalue()


def sample_chain(t: StochasticTensor, leaves: LeafProfile, rng=None) -> List[np.ndarray]:
    """Forward-simulate one labelling of the tree; returns states per level."""
    _check_leaves(t, leaves)
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    n, m = t.state_size, t.arity
    cum = np.cumsum(leaves.distributions, axis=1)
    u = rng.random(len(cum))
    states = np.minimum((u[:, None] * cum[:, -1:] >= cum).sum(axis=1), n - 1)
    out = [states]
    flat = t.entries.reshape(n, -1)
    weights = n ** np.arange(m - 1, -1, -1)
    for _ in range(leaves.depth):
        cols = np.cumsum(flat[:, states.reshape(-1, m) @ weights], axis=0).T
        u = rng.random(len(cols))
        states = np.minimum((u[:, None] * cols[:, -1:] >= cols).sum(axis=1), n - 1)
        out.append(states)
    return out
