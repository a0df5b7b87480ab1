"""Fixed points of ``x -> R(x, ..., x) / sigma`` on the simplex."""

from __future__ import annotations

import collections
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy import optimize

from .errors import MaxIterExceeded, NotTwoColour, UrnError
from .tensor import (
    ReplacementTensor,
    StochasticTensor,
    apply,
    barycenter,
    check_simplex,
    ergodicity_coefficients,
    validate,
)

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 10_000


@dataclass
class FixedPointResult:
    """Outcome of a fixed-point search.

    ``residual`` is ``||F(x) - x||_1`` at ``x_star``. ``certified`` means the
    contraction hypothesis held, so ``x_star`` is the unique fixed point;
    ``q`` is the contraction modulus from the slot ergodicity coefficients.
    """

    x_star: np.ndarray
    iterations: int
    residual: float
    certified: bool
    q: Optional[float] = None
    converged: bool = True
    method: str = "picard"
    start: Optional[np.ndarray] = field(default=None, repr=False)
    trajectory: Optional[List[np.ndarray]] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "x_star": [float(v) for v in self.x_star],
            "iterations": self.iterations,
            "residual": self.residual,
            "certified": self.certified,
            "q": self.q,
            "converged": self.converged,
            "method": self.method,
        }


def iterate_map(tensor: ReplacementTensor, x) -> np.ndarray:
    """One step of the normalized map ``x -> R(x, ..., x) / sigma``."""
    x = check_simplex(x, tensor.d)
    return apply(tensor, x) / tensor.sigma


def picard(
    F: Callable[[np.ndarray], np.ndarray],
    x0,
    *,
    q: Optional[float] = None,
    certified: bool = False,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    keep_trajectory: bool = False,
) -> FixedPointResult:
    """Plain fixed-point iteration ``x <- F(x)`` on the simplex.

    With a certified modulus ``q < 1`` the loop stops once
    ``q * ||x_{t+1} - x_t|| <= tol * (1 - q)``, which bounds the distance of
    the returned point to the fixed point by ``tol``. Otherwise it stops on
    ``||x_{t+1} - x_t|| <= tol``. Either way the returned residual is
    ``<= tol``.

    Raises
    ------
    MaxIterExceeded
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    use_q = certified and q is not None and q < 1
    x = np.array(x0, dtype=float)
    # F is homogeneous of degree m, so the sum drifts geometrically unless
    # renormalized every step.
    fx = F(x)
    fx = fx / fx.sum()
    recent = collections.deque(maxlen=4)
    trajectory = [x.copy()] if keep_trajectory else None
    res = float(np.abs(fx - x).sum())
    if res == 0.0:
        return FixedPointResult(x, 0, 0.0, certified, q, trajectory=trajectory)
    for it in range(1, max_iter + 1):
        y = fx
        fy = F(y)
        fy = fy / fy.sum()
        step = float(np.abs(y - x).sum())
        res = float(np.abs(fy - y).sum())
        recent.append(y)
        if keep_trajectory:
            trajectory.append(y.copy())
        if use_q:
            stop = q * step <= tol * (1 - q)
        else:
            stop = step <= tol
        if stop and res <= tol:
            return FixedPointResult(y, it, res, certified, q, trajectory=trajectory)
        x, fx = y, fy
    raise MaxIterExceeded(x, res, max_iter, recent)


def colour_q(tensor: ReplacementTensor) -> float:
    """Contraction modulus of the normalized map from ``R / sigma``."""
    return ergodicity_coefficients(StochasticTensor.from_replacement(tensor)).q


def solve(
    tensor: ReplacementTensor,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    x0=None,
    keep_trajectory: bool = False,
) -> FixedPointResult:
    """Solve ``sigma x = R(x, ..., x)`` by Picard iteration from the barycenter.

    The result is ``certified`` when (E) holds; then the fixed point is unique
    and the stopping rule uses the modulus ``q``. Without (E) the iteration is
    run undamped and may fail to converge.

    Raises
    ------
    NotBalanced
    MaxIterExceeded
    """
    report = validate(tensor)
    sigma = tensor.sigma
    certified = report.ergodicity_holds
    q = colour_q(tensor)
    start = barycenter(tensor.d) if x0 is None else check_simplex(x0, tensor.d)
    res = picard(
        lambda x: apply(tensor, x) / sigma,
        start,
        q=q,
        certified=certified,
        tol=tol,
        max_iter=max_iter,
        keep_trajectory=keep_trajectory,
    )
    res.start = start
    return res


def _bernstein_coeffs(tensor: ReplacementTensor) -> np.ndarray:
    """``c[k]`` = sum of ``R[0, draw]`` over draws with exactly ``k`` zeros."""
    m = tensor.m
    counts = np.zeros((2,) * m, dtype=int)
    for s in range(m):
        shape = [1] * m
        shape[s] = 2
        counts = counts + (np.arange(2) == 0).astype(int).reshape(shape)
    coeffs = np.zeros(m + 1)
    np.add.at(coeffs, counts.ravel(), tensor.entries[0].ravel())
    return coeffs


def _two_colour_poly(tensor):
    """Return ``g(p) = sigma p - R(x, .., x)_0`` and ``g'`` for ``x = (p, 1-p)``."""
    m = tensor.m
    sigma = tensor.sigma
    c = _bernstein_coeffs(tensor)
    k = np.arange(m + 1)

    def g(p):
        p = np.asarray(p, dtype=float)[..., None]
        return sigma * p[..., 0] - (c * p**k * (1 - p) ** (m - k)).sum(-1)

    def dg(p):
        p = np.asarray(p, dtype=float)[..., None]
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(k > 0, k * p ** np.maximum(k - 1, 0), 0.0) * (1 - p) ** (m - k)
            b = np.where(
                k < m, (m - k) * (1 - p) ** np.maximum(m - k - 1, 0), 0.0
            ) * p**k
        return sigma - (c * (a - b)).sum(-1)

    return g, dg


def _bisect(f, lo, hi, flo, xtol=1e-13):
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _sign_change_roots(f, grid, vals):
    roots = list(grid[vals == 0])
    idx = np.nonzero(vals[:-1] * vals[1:] < 0)[0]
    for i in idx:
        roots.append(_bisect(f, grid[i], grid[i + 1], vals[i]))
    return roots


def all_fixed_points_2colour(
    tensor: ReplacementTensor, cells: int = 100_000, dedupe: float = 1e-10
) -> List[np.ndarray]:
    """All fixed points of a two-colour tensor, by 1-d root finding.

    On ``x = (p, 1 - p)`` the fixed-point equation is a degree-``m``
    polynomial ``g(p)``. Simple roots are located by sign changes on a grid of
    ``cells`` cells and refined by bisection; double roots (tangencies) are
    taken from the roots of ``g'`` where ``|g|`` is below ``1e-12``.

    Raises
    ------
    NotTwoColour
    NotBalanced
    UrnError
        If every point of the simplex is a fixed point.
    """
    if tensor.d != 2:
        raise NotTwoColour(f"tensor has d={tensor.d}")
    g, dg = _two_colour_poly(tensor)
    zero_tol = 1e-12 * max(1.0, tensor.sigma)
    grid = np.linspace(0.0, 1.0, cells + 1)
    vals = g(grid)
    if np.max(np.abs(vals)) <= zero_tol:
        raise UrnError("every point of the simplex is a fixed point")
    simple = _sign_change_roots(lambda p: float(g(p)), grid, vals)
    crit = _sign_change_roots(lambda p: float(dg(p)), grid, dg(grid))
    tangent = [t for t in crit if abs(float(g(t))) <= zero_tol]
    roots = []
    for r in simple:
        near = [t for t in tangent if abs(t - r) <= 1e-6]
        roots.append(near[0] if near else r)
    roots.extend(tangent)
    roots.sort()
    out: List[float] = []
    for r in roots:
        if not out or r - out[-1] > dedupe:
            out.append(r)
    return [np.array([min(max(p, 0.0), 1.0), 1.0 - min(max(p, 0.0), 1.0)]) for p in out]


def _newton(tensor, x0, tol):
    d = tensor.d
    sigma = tensor.sigma

    def full(y):
        return np.append(y, 1.0 - y.sum())

    def h(y):
        x = full(y)
        return (apply(tensor, x) / sigma - x)[:-1]

    sol = optimize.root(h, np.asarray(x0, dtype=float)[:-1], method="hybr")
    x = full(sol.x)
    if not np.all(np.isfinite(x)) or np.any(x < -1e-12):
        return None
    x = np.clip(x, 0.0, None)
    x /= x.sum()
    res = float(np.abs(apply(tensor, x) / sigma - x).sum())
    if res > tol:
        return None
    return x, res, int(sol.nfev)


def multi_start(
    tensor: ReplacementTensor,
    starts: int = 20,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    polish_tol: float = 1e-10,
    dedupe: float = 1e-6,
) -> List[FixedPointResult]:
    """Search for fixed points from random starts on the simplex.

    Each start runs the plain iteration of :func:`solve` and, independently,
    a Newton-type root solve of ``F(x) = x`` (which can reach repelling fixed
    points the iteration never approaches). Converged points are deduplicated
    within ``dedupe`` in start order and returned first; non-converged
    iteration reports follow with ``converged=False``.
    """
    if starts < 1:
        raise ValueError("starts must be >= 1")
    report = validate(tensor)
    certified = report.ergodicity_holds
    q = colour_q(tensor)
    rng = np.random.default_rng(seed)
    points = rng.dirichlet(np.ones(tensor.d), size=starts)
    found: List[FixedPointResult] = []
    failed: List[FixedPointResult] = []

    def add(res):
        for prev in found:
            if np.abs(prev.x_star - res.x_star).sum() <= dedupe:
                return
        found.append(res)

    for x0 in points:
        try:
            res = solve(tensor, tol=tol, max_iter=max_iter, x0=x0)
            add(res)
        except MaxIterExceeded as exc:
            failed.append(
                FixedPointResult(
                    exc.x, exc.iterations, exc.residual, certified, q,
                    converged=False, start=x0,
                )
            )
        polished = _newton(tensor, x0, polish_tol)
        if polished is not None:
            x, res_, nfev = polished
            add(FixedPointResult(x, nfev, res_, certified, q, method="newton", start=x0))
    return found + failed
