"""Replacement tensors, stochastic tensors and the (T)/(B)/(E) checks.

A replacement tensor ``R`` of a ``d``-colour, ``m``-drawing urn is stored as a
dense ``numpy`` array of shape ``(d,) * (m + 1)``; ``R[i, j1, ..., jm]`` is the
number of balls of colour ``i`` added after the ordered draw ``(j1, ..., jm)``.
Colours are 0-based everywhere in the code. Flattened storage is row-major
with ``i`` slowest, which is exactly ``entries.ravel()``.

A stochastic tensor has shape ``(N,) * (m + 1)`` with the *output* state on
axis 0; every slice ``entries[:, s1, ..., sm]`` is a probability vector.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, NotBalanced, ParseError, StructuralError

SIMPLEX_TOL = 1e-12
BALANCE_RTOL = 1e-12

# Pairwise column distances are computed in one broadcast below this size.
_DENSE_PAIR_LIMIT = 2**22


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ReplacementTensor:
    """Replacement rule of an ``m``-drawing, ``d``-colour urn.

    Parameters
    ----------
    d : int
        Number of colours.
    m : int
        Number of balls drawn (with replacement) at each step.
    entries : array_like
        Either the full ``(d,) * (m + 1)`` array or its flattening of length
        ``d ** (m + 1)``.
    name : str, optional
    """

    d: int
    m: int
    entries: np.ndarray
    name: Optional[str] = None

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise StructuralError(f"d must be a positive integer, got {self.d!r}")
        if int(self.m) != self.m or self.m < 1:
            raise StructuralError(f"m must be a positive integer, got {self.m!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "m", int(self.m))
        arr = np.asarray(self.entries, dtype=float)
        shape = (self.d,) * (self.m + 1)
        if arr.size != self.d ** (self.m + 1):
            raise StructuralError(
                f"expected {self.d ** (self.m + 1)} entries for d={self.d}, "
                f"m={self.m}, got {arr.size}"
            )
        if arr.shape != shape and arr.ndim != 1:
            raise StructuralError(f"entries have shape {arr.shape}, expected {shape}")
        if not np.all(np.isfinite(arr)):
            raise StructuralError("entries must be finite")
        object.__setattr__(self, "entries", _readonly(arr.reshape(shape)))

    @property
    def n_draws(self) -> int:
        """Number of ordered draw tuples, ``d ** m``."""
        return self.d**self.m

    @property
    def columns(self) -> np.ndarray:
        """``(d, d**m)`` view: column ``k`` is what the ``k``-th draw tuple adds."""
        return self.entries.reshape(self.d, self.n_draws)

    @property
    def column_sums(self) -> np.ndarray:
        return self.columns.sum(axis=0)

    def column(self, draw: Sequence[int]) -> np.ndarray:
        """Balls added for the ordered draw ``draw`` (0-based colours)."""
        if len(draw) != self.m:
            raise DimensionMismatch(f"draw has {len(draw)} colours, expected {self.m}")
        return self.entries[(slice(None),) + tuple(int(c) for c in draw)]

    def scaled(self, c: float) -> "ReplacementTensor":
        return ReplacementTensor(self.d, self.m, c * self.entries, self.name)

    @property
    def sigma(self) -> float:
        """Common column sum; raises :class:`NotBalanced` if there is none."""
        sums = self.column_sums
        ref = float(sums.mean())
        if np.max(np.abs(sums - ref)) > BALANCE_RTOL * max(1.0, abs(ref)) or ref <= 0:
            raise NotBalanced(
                f"column sums range over [{sums.min():g}, {sums.max():g}]"
            )
        return ref

    def to_dict(self) -> dict:
        out = {"d": self.d, "m": self.m, "entries": self.entries.ravel().tolist()}
        if self.name is not None:
            out["name"] = self.name
        return out

    @classmethod
    def from_dict(cls, obj) -> "ReplacementTensor":
        try:
            d, m, entries = obj["d"], obj["m"], obj["entries"]
        except (KeyError, TypeError) as exc:
            raise ParseError(f"tensor object needs keys d, m, entries: {exc}") from exc
        if not isinstance(d, int) or not isinstance(m, int) or isinstance(d, bool):
            raise ParseError("d and m must be integers")
        if not isinstance(entries, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in entries
        ):
            raise ParseError("entries must be a flat list of numbers")
        try:
            return cls(d, m, np.asarray(entries, dtype=float), obj.get("name"))
        except StructuralError as exc:
            raise ParseError(str(exc)) from exc


def load_tensor(path) -> ReplacementTensor:
    """Read a tensor JSON file (``{"d", "m", "entries"[, "name"]}``)."""
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return ReplacementTensor.from_dict(obj)


def dump_tensor(tensor: ReplacementTensor, fh=None, **kwargs) -> str:
    text = json.dumps(tensor.to_dict(), **kwargs)
    if fh is not None:
        fh.write(text + "\n")
    return text


def check_simplex(x, size: Optional[int] = None, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Return ``x`` as a float array after checking it lies on the simplex."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise StructuralError(f"simplex vector must be 1-d, got shape {x.shape}")
    if size is not None and x.size != size:
        raise DimensionMismatch(f"vector has length {x.size}, expected {size}")
    if np.any(x < -tol) or abs(x.sum() - 1.0) > max(tol, tol * x.size):
        raise ValueError(f"not a probability vector: {x}")
    return x


def barycenter(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def product_measure(nu, m: int) -> np.ndarray:
    """``nu ⊗ ... ⊗ nu`` (``m`` factors), flattened row-major over ``{0..d-1}^m``."""
    out = np.asarray(nu, dtype=float)
    for _ in range(m - 1):
        out = np.multiply.outer(out, nu).ravel()
    return out


def tuple_index(draw: Sequence[int], d: int) -> int:
    """Row-major position of a colour tuple in ``{0..d-1}^m``."""
    k = 0
    for c in draw:
        k = k * d + int(c)
    return k


def index_tuple(k: int, d: int, m: int) -> tuple:
    return tuple(int(c) for c in np.unravel_index(k, (d,) * m))


@dataclass(frozen=True, eq=False)
class StochasticTensor:
    """Transition tensor of an ``arity``-dependent Markov chain.

    ``entries[w, s1, ..., s_arity]`` is the probability of state ``w`` given
    the parent states ``s1, ..., s_arity``.
    """

    state_size: int
    arity: int
    entries: np.ndarray

    def __post_init__(self):
        n, k = int(self.state_size), int(self.arity)
        arr = np.asarray(self.entries, dtype=float)
        shape = (n,) * (k + 1)
        if arr.size != n ** (k + 1):
            raise StructuralError(f"expected {n ** (k + 1)} entries, got {arr.size}")
        arr = arr.reshape(shape)
        if np.any(arr < 0):
            raise StructuralError("stochastic tensor has negative entries")
        dev = np.max(np.abs(arr.sum(axis=0) - 1.0))
        if dev > SIMPLEX_TOL * max(1, n):
            raise StructuralError(f"conditional slices do not sum to 1 (max dev {dev:.2e})")
        object.__setattr__(self, "state_size", n)
        object.__setattr__(self, "arity", k)
        object.__setattr__(self, "entries", _readonly(arr))

    @classmethod
    def from_replacement(cls, tensor: ReplacementTensor) -> "StochasticTensor":
        """The colour-level tensor ``R / sigma`` (state space = colours)."""
        return cls(tensor.d, tensor.m, tensor.entries / tensor.sigma)

    def __call__(self, *args) -> np.ndarray:
        if len(args) == 1 and self.arity > 1:
            args = (args[0],) * self.arity
        return contract(self.entries, args)


def contract(entries: np.ndarray, args) -> np.ndarray:
    """Multilinear contraction of axes ``1..m`` of ``entries`` with ``args``."""
    m = entries.ndim - 1
    if len(args) != m:
        raise DimensionMismatch(f"expected {m} arguments, got {len(args)}")
    n = entries.shape[0]
    out = entries
    for v in reversed(args):
        v = np.asarray(v, dtype=float)
        if v.shape != (n,):
            raise DimensionMismatch(f"argument has shape {v.shape}, expected ({n},)")
        out = out @ v
    return out


def apply(tensor: ReplacementTensor, *args) -> np.ndarray:
    """Evaluate the multilinear map ``x1, ..., xm -> R(x1, ..., xm)``.

    ``apply(R, x)`` with a single vector is shorthand for ``R(x, ..., x)``.

    >>> R = ReplacementTensor(2, 2, np.ones(8))
    >>> apply(R, [0.5, 0.5], [0.5, 0.5])
    array([1., 1.])
    """
    if len(args) == 1 and tensor.m > 1:
        args = (args[0],) * tensor.m
    return contract(tensor.entries, args)


class ErgodicityCoefficients(NamedTuple):
    taus: tuple
    q: float


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of :func:`validate`.

    ``sigma`` is ``None`` when the tensor is not balanced; ``q_estimate`` is the
    ergodicity-coefficient sum of the induced pair tensor, reported only when
    (E) holds. ``boundary`` flags equality in (E), which is not sufficient.
    """

    d: int
    m: int
    tenable: bool
    sigma: Optional[float]
    balance_deviation: float
    ergodicity_lhs: float
    ergodicity_bound: float
    ergodicity_holds: bool
    boundary: bool = False
    q_estimate: Optional[float] = None
    name: Optional[str] = None

    @property
    def balanced(self) -> bool:
        return self.sigma is not None

    @property
    def all_hold(self) -> bool:
        return self.tenable and self.balanced and self.ergodicity_holds

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["balanced"] = self.balanced
        out["all_hold"] = self.all_hold
        return out


def column_l1_spread(tensor: ReplacementTensor) -> float:
    """``max_{j, j'} sum_i |R(i, j) - R(i, j')|`` over ordered draw tuples."""
    cols = tensor.columns
    n = cols.shape[1]
    if cols.shape[0] * n * n <= _DENSE_PAIR_LIMIT:
        return float(np.abs(cols[:, :, None] - cols[:, None, :]).sum(axis=0).max())
    return float(max(np.abs(cols - cols[:, [k]]).sum(axis=0).max() for k in range(n)))


def validate(tensor: ReplacementTensor) -> AssumptionReport:
    """Check (T), (B) and (E) for a replacement tensor.

    (E) is compared strictly against ``2 sigma / m``; for ``m = 2`` this is
    ``sigma``. When (E) holds the report also carries ``q``, the sum of the
    ergodicity coefficients of the induced chain tensor, which is ``< 1``.
    """
    if not isinstance(tensor, ReplacementTensor):
        raise StructuralError("validate expects a ReplacementTensor")
    tenable = bool(np.all(tensor.entries >= 0))
    sums = tensor.column_sums
    ref = float(sums.mean())
    deviation = float(np.max(np.abs(sums - ref)))
    balanced = deviation <= BALANCE_RTOL * max(1.0, abs(ref)) and ref > 0
    sigma = ref if balanced else None
    lhs = column_l1_spread(tensor)
    if balanced:
        bound = 2.0 * sigma / tensor.m
        boundary = math.isclose(lhs, bound, rel_tol=1e-12, abs_tol=1e-15)
        holds = tenable and lhs < bound and not boundary
    else:
        bound, boundary, holds = math.nan, False, False
    q = None
    if holds:
        q = _induced_q(tensor, sigma, lhs)
    return AssumptionReport(
        d=tensor.d,
        m=tensor.m,
        tenable=tenable,
        sigma=sigma,
        balance_deviation=deviation,
        ergodicity_lhs=lhs,
        ergodicity_bound=bound,
        ergodicity_holds=holds,
        boundary=boundary,
        q_estimate=q,
        name=tensor.name,
    )


# Above this many entries the induced tensor is not materialized; each slot
# coefficient of the induced tensor equals lhs / (2 sigma) exactly.
_INDUCED_LIMIT = 2**20


def _induced_q(tensor, sigma, lhs):
    if tensor.d ** (tensor.m * (tensor.m + 1)) <= _INDUCED_LIMIT:
        return ergodicity_coefficients(induced_chain_tensor(tensor)).q
    return tensor.m * lhs / (2.0 * sigma)


def induced_chain_tensor(tensor: ReplacementTensor) -> StochasticTensor:
    """Transition tensor of the chain on ``S = {colours}^m`` built from ``R``.

    ``T[x, a1, ..., am] = prod_i R[x_i, a_i] / sigma**m`` where ``x`` and each
    ``a_i`` are tuples in ``S``, flattened row-major.
    """
    sigma = tensor.sigma
    d, m = tensor.d, tensor.m
    n = tensor.n_draws
    cols = tensor.columns / sigma
    out = cols
    for _ in range(m - 1):
        out = np.multiply.outer(out, cols)
    # axes are (x1, a1, x2, a2, ...); regroup as (x1..xm, a1, .., am)
    out = out.transpose(tuple(range(0, 2 * m, 2)) + tuple(range(1, 2 * m, 2)))
    return StochasticTensor(n, m, out.reshape((n,) * (m + 1)))


def ergodicity_coefficients(t: StochasticTensor) -> ErgodicityCoefficients:
    """Slot-wise ergodicity coefficients of a stochastic tensor.

    ``tau_s = 1/2 max ||T(., ..a..) - T(., ..b..)||_1`` over conditioning
    tuples that differ only in slot ``s``; ``q = sum_s tau_s``.
    """
    e = t.entries
    n = t.state_size
    taus = []
    for s in range(t.arity):
        axis = s + 1
        worst = 0.0
        for a in range(n):
            ref = np.take(e, [a], axis=axis)
            worst = max(worst, float(np.abs(e - ref).sum(axis=0).max()))
        taus.append(min(1.0, 0.5 * worst))
    return ErgodicityCoefficients(tuple(taus), float(sum(taus)))
