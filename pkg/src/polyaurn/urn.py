"""Simulation of the m-drawing urn and an exact small-n distribution oracle.

Every replicate owns a ``numpy`` Generator and consumes exactly ``m`` uniforms
per step, in order. Draws are made by inverse-CDF lookup of those uniforms, so
a trajectory depends only on its own stream: running it alone, stepwise with
:func:`step`, or batched inside :func:`monte_carlo` gives identical results.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch, EmptyUrn, TooLarge
from .fixed_point import solve
from .tensor import ReplacementTensor, tuple_index

EXACT_LIMIT = 10**6
_BLOCK = 4096


@dataclass(frozen=True, eq=False)
class UrnState:
    """Colour counts ``U(n)`` after ``step`` draws."""

    counts: np.ndarray
    step: int = 0
    sigma: Optional[float] = None

    def __post_init__(self):
        c = np.array(self.counts, dtype=float)
        if c.ndim != 1:
            raise DimensionMismatch("counts must be a 1-d array")
        if np.any(c < 0):
            raise ValueError("counts must be non-negative")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @property
    def proportions(self) -> np.ndarray:
        """``U(n) / ||U(n)||_1``."""
        total = self.total
        if total <= 0:
            raise EmptyUrn("urn is empty")
        return self.counts / total

    def key(self, decimals: int = 9) -> tuple:
        return tuple(np.round(self.counts, decimals).tolist())


def initial_state(counts, tensor: Optional[ReplacementTensor] = None) -> UrnState:
    sigma = tensor.sigma if tensor is not None else None
    state = UrnState(counts, 0, sigma)
    if tensor is not None and state.counts.size != tensor.d:
        raise DimensionMismatch(f"{state.counts.size} counts for d={tensor.d}")
    return state


def _as_state(initial, tensor) -> UrnState:
    if isinstance(initial, UrnState):
        if initial.counts.size != tensor.d:
            raise DimensionMismatch(f"{initial.counts.size} counts for d={tensor.d}")
        return initial
    return initial_state(initial, tensor)


def _lookup(cum, u):
    """Inverse-CDF colours for uniforms ``u`` (reps, m) given cumulative counts."""
    thr = u * cum[:, -1:]
    colours = (thr[:, :, None] >= cum[:, None, :]).sum(axis=-1)
    return np.minimum(colours, cum.shape[1] - 1)


def draw(state: UrnState, rng: np.random.Generator, m: int = 2) -> Tuple[int, ...]:
    """Draw ``m`` colours independently with probabilities ``U(n)/||U(n)||``."""
    if state.total <= 0:
        raise EmptyUrn("cannot draw from an empty urn")
    u = rng.random(m)
    cum = np.cumsum(state.counts)[None, :]
    return tuple(int(c) for c in _lookup(cum, u[None, :])[0])


def step(state: UrnState, tensor: ReplacementTensor, rng: np.random.Generator) -> UrnState:
    """One urn step: draw, then add the replacement column for that draw."""
    if state.counts.size != tensor.d:
        raise DimensionMismatch(f"{state.counts.size} counts for d={tensor.d}")
    colours = draw(state, rng, tensor.m)
    return UrnState(state.counts + tensor.column(colours), state.step + 1, state.sigma)


def checkpoints(n: int) -> np.ndarray:
    """``{0, n} ∪ {floor(10**(k/4)) <= n}``, sorted."""
    pts = {0, int(n)}
    k = 0
    while True:
        v = int(math.floor(10 ** (k / 4) + 1e-9))
        if v > n:
            break
        pts.add(v)
        k += 1
    return np.array(sorted(pts), dtype=int)


def _simulate(tensor, counts0, n, rngs, marks):
    """Advance ``len(rngs)`` replicates by ``n`` steps.

    Returns final counts ``(reps, d)`` and proportions at ``marks``
    ``(reps, len(marks), d)``.
    """
    reps = len(rngs)
    d, m = tensor.d, tensor.m
    counts = np.tile(np.asarray(counts0, dtype=float), (reps, 1))
    if np.any(counts.sum(axis=1) <= 0):
        raise EmptyUrn("initial urn is empty")
    cols = tensor.columns.T  # (d**m, d)
    weights = d ** np.arange(m - 1, -1, -1)
    props = np.empty((reps, len(marks), d))
    mark_pos = {int(v): i for i, v in enumerate(marks)}
    if 0 in mark_pos:
        props[:, mark_pos[0]] = counts / counts.sum(axis=1, keepdims=True)
    t = 0
    while t < n:
        block = min(_BLOCK, n - t)
        u = np.stack([g.random((block, m)) for g in rngs], axis=1)  # (block, reps, m)
        for b in range(block):
            cum = np.cumsum(counts, axis=1)
            colours = _lookup(cum, u[b])
            counts += cols[colours @ weights]
            t += 1
            i = mark_pos.get(t)
            if i is not None:
                props[:, i] = counts / counts.sum(axis=1, keepdims=True)
    return counts, props


@dataclass
class RunResult:
    final: UrnState
    n_values: np.ndarray
    proportions: np.ndarray


def run(tensor: ReplacementTensor, initial, n: int, seed=None) -> RunResult:
    """Simulate ``n`` steps; record proportions at :func:`checkpoints`."""
    if n < 0:
        raise ValueError("n must be >= 0")
    state = _as_state(initial, tensor)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    marks = checkpoints(n)
    final, props = _simulate(tensor, state.counts, n, [rng], marks)
    return RunResult(
        UrnState(final[0], state.step + n, state.sigma), marks, props[0]
    )


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    """Generator for replicate ``r`` of master ``seed`` (independent streams)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replicate,)))


@dataclass
class TrajectoryStats:
    n_values: List[int]
    mean_l1_error: List[float]
    stderr: List[float]
    replicates: int
    seed: int
    x_star: np.ndarray = field(repr=False, default=None)

    def rows(self):
        for n, e, s in zip(self.n_values, self.mean_l1_error, self.stderr):
            yield {"n": n, "mean_l1_error": e, "stderr": s, "replicates": self.replicates}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(
            buf, ["n", "mean_l1_error", "stderr", "replicates"], lineterminator="\n"
        )
        w.writeheader()
        for row in self.rows():
            w.writerow({**row, "mean_l1_error": repr(row["mean_l1_error"]),
                        "stderr": repr(row["stderr"])})
        return buf.getvalue()

    def at(self, n: int) -> Tuple[float, float]:
        i = self.n_values.index(n)
        return self.mean_l1_error[i], self.stderr[i]


def monte_carlo(
    tensor: ReplacementTensor,
    initial,
    n: int,
    replicates: int,
    seed: int,
    x_star=None,
    batch: int = 256,
) -> TrajectoryStats:
    """Mean ``||U(n)/||U(n)|| - x*||_1`` over independent replicates.

    ``x_star`` defaults to :func:`polyaurn.fixed_point.solve`. Replicate ``r``
    uses :func:`replicate_rng` ``(seed, r)``; ``batch`` only affects speed.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    state = _as_state(initial, tensor)
    if x_star is None:
        x_star = solve(tensor).x_star
    x_star = np.asarray(x_star, dtype=float)
    marks = checkpoints(n)
    errors = np.empty((replicates, len(marks)))
    for lo in range(0, replicates, batch):
        hi = min(replicates, lo + batch)
        rngs = [replicate_rng(seed, r) for r in range(lo, hi)]
        _, props = _simulate(tensor, state.counts, n, rngs, marks)
        errors[lo:hi] = np.abs(props - x_star).sum(axis=-1)
    mean = errors.mean(axis=0)
    if replicates > 1:
        se = errors.std(axis=0, ddof=1) / math.sqrt(replicates)
    else:
        se = np.zeros_like(mean)
    return TrajectoryStats(
        [int(v) for v in marks], mean.tolist(), se.tolist(), replicates, seed, x_star
    )


def final_counts(
    tensor: ReplacementTensor, initial, n: int, replicates: int, seed: int, batch: int = 4096
) -> np.ndarray:
    """``U(n)`` for each replicate, shape ``(replicates, d)``; same streams as
    :func:`monte_carlo`."""
    state = _as_state(initial, tensor)
    out = np.empty((replicates, tensor.d))
    for lo in range(0, replicates, batch):
        hi = min(replicates, lo + batch)
        rngs = [replicate_rng(seed, r) for r in range(lo, hi)]
        out[lo:hi], _ = _simulate(tensor, state.counts, n, rngs, np.array([n]))
    return out


def exact_distribution(
    tensor: ReplacementTensor, initial, n: int, limit: int = EXACT_LIMIT
) -> List[Tuple[UrnState, float]]:
    """Exact law of ``U(n)`` by enumerating every draw sequence.

    Coinciding states are merged (counts rounded to 9 decimals), which keeps
    the work well below ``d**(m n)``; the limit is still enforced on that
    count. Returned list is sorted by counts.

    Raises
    ------
    TooLarge
    """
    state = _as_state(initial, tensor)
    if tensor.d ** (tensor.m * n) > limit:
        raise TooLarge(f"d^(m n) = {tensor.d}^{tensor.m * n} exceeds {limit}")
    d, m = tensor.d, tensor.m
    draws = np.array(np.unravel_index(np.arange(d**m), (d,) * m)).T
    cols = tensor.columns
    layer = {state.key(): (state.counts, 1.0)}
    for _ in range(n):
        nxt = {}
        for counts, p in layer.values():
            total = counts.sum()
            if total <= 0:
                raise EmptyUrn("urn became empty")
            probs = np.prod((counts / total)[draws], axis=1)
            for k in np.nonzero(probs)[0]:
                new = counts + cols[:, k]
                key = tuple(np.round(new, 9).tolist())
                old = nxt.get(key)
                nxt[key] = (new, (old[1] if old else 0.0) + p * probs[k])
        layer = nxt
    out = [
        (UrnState(c, state.step + n, state.sigma), float(p)) for c, p in layer.values()
    ]
    out.sort(key=lambda sp: sp[0].key())
    return out


def as_law(dist) -> dict:
    """``{rounded counts: probability}`` view of an exact distribution."""
    law = {}
    for state, p in dist:
        key = state.key()
        law[key] = law.get(key, 0.0) + p
    return law


def total_variation(law_a: dict, law_b: dict) -> float:
    keys = set(law_a) | set(law_b)
    return 0.5 * sum(abs(law_a.get(k, 0.0) - law_b.get(k, 0.0)) for k in keys)
