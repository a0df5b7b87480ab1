"""The labelled uniform recursive DAG and the shape of node genealogies.

Node ``v >= 1`` picks ``m`` parents independently and uniformly in
``{0, .., v-1}``. Its label is a colour tuple whose ``s``-th component is drawn
from ``pi`` when the ``s``-th parent is the root, and otherwise from the
normalized replacement column of that parent's label. Summing the columns of
the labels on top of an initial measure ``sigma * pi`` reproduces the urn in
law, which :func:`exact_coupling_distribution` checks by enumeration.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from .errors import DimensionMismatch, NodeOutOfRange, TooLarge
from .tensor import ReplacementTensor, check_simplex, tuple_index, validate
from .urn import UrnState, replicate_rng


def n1_of(n: int) -> int:
    """Cut-off ``floor(n / ln n)``; 0 when ``ln n <= 1``."""
    if n <= 2:
        return 0
    return int(math.floor(n / math.log(n)))


@dataclass(frozen=True, eq=False)
class LabelledDag:
    """A grown DAG on nodes ``0..n``.

    ``parents[v - 1]`` and ``labels[v - 1]`` belong to node ``v``; labels are
    0-based colour tuples. ``labels`` is ``None`` for structure-only DAGs.
    """

    m: int
    parents: np.ndarray
    labels: Optional[np.ndarray] = None
    pi: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        """Index of the newest node."""
        return len(self.parents)

    def parents_of(self, v: int) -> Tuple[int, ...]:
        if v == 0:
            return ()
        if not 1 <= v <= self.size:
            raise NodeOutOfRange(f"node {v} not in 0..{self.size}")
        return tuple(int(p) for p in self.parents[v - 1])

    def label_of(self, v: int) -> Tuple[int, ...]:
        if self.labels is None:
            raise ValueError("structure-only DAG has no labels")
        if not 1 <= v <= self.size:
            raise NodeOutOfRange(f"node {v} has no label")
        return tuple(int(c) for c in self.labels[v - 1])

    def to_dict(self) -> dict:
        """JSON form; labels use 1-based colours."""
        out = {"m": self.m, "parents": self.parents.tolist()}
        if self.labels is not None:
            out["labels"] = (self.labels + 1).tolist()
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict())


def label_law(tensor: ReplacementTensor, pi, labels, parent: int, sigma=None) -> np.ndarray:
    """Distribution of one label component inherited from ``parent``."""
    if parent == 0:
        return np.asarray(pi, dtype=float)
    sigma = tensor.sigma if sigma is None else sigma
    return tensor.column(labels[parent - 1]) / sigma


def _require_urn_tensor(tensor):
    report = validate(tensor)
    if not report.tenable:
        raise ValueError("replacement tensor has negative entries")
    return tensor.sigma


def grow(
    tensor: ReplacementTensor, pi, n: int, seed=None, labelled: bool = True
) -> LabelledDag:
    """Grow the labelled DAG up to node ``n``."""
    sigma = _require_urn_tensor(tensor)
    pi = check_simplex(pi, tensor.d)
    m, d = tensor.m, tensor.d
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if n < 0:
        raise ValueError("n must be >= 0")
    span = np.arange(1, n + 1)[:, None]
    parents = np.minimum((rng.random((n, m)) * span).astype(np.int64), span - 1)
    if not labelled:
        return LabelledDag(m, parents, None, pi)
    labels = np.empty((n, m), dtype=np.int64)
    u = rng.random((n, m))
    cum_pi = np.cumsum(pi)
    cum_cols = np.cumsum(tensor.columns / sigma, axis=0)  # (d, d**m)
    for v in range(n):
        for s in range(m):
            p = parents[v, s]
            cum = cum_pi if p == 0 else cum_cols[:, tuple_index(labels[p - 1], d)]
            labels[v, s] = min(int(np.searchsorted(cum, u[v, s] * cum[-1], "right")), d - 1)
    return LabelledDag(m, parents, labels, pi)


def urn_from_labels(
    dag: LabelledDag, tensor: ReplacementTensor, initial_mass: Optional[float] = None
) -> List[UrnState]:
    """Urn trajectory implied by the labels: ``sigma pi + sum of label columns``.

    ``initial_mass`` defaults to ``sigma``, the mass for which the labelled
    DAG and the urn coincide in law.
    """
    if dag.labels is None:
        raise ValueError("structure-only DAG has no labels")
    if dag.m != tensor.m or len(dag.pi) != tensor.d:
        raise DimensionMismatch("DAG and tensor disagree on m or d")
    sigma = tensor.sigma
    mass = sigma if initial_mass is None else initial_mass
    start = mass * np.asarray(dag.pi, dtype=float)
    weights = tensor.d ** np.arange(tensor.m - 1, -1, -1)
    added = tensor.columns[:, dag.labels @ weights].T if dag.size else np.zeros((0, tensor.d))
    path = np.vstack([start, start + np.cumsum(added, axis=0)])
    return [UrnState(c, k, sigma) for k, c in enumerate(path)]


def exact_coupling_distribution(
    tensor: ReplacementTensor, pi, n: int, limit: int = 10**6
) -> Dict[tuple, float]:
    """Exact law of the DAG-reconstructed urn at step ``n``.

    Enumerates every parent choice and every label outcome of nodes ``1..n``
    and maps each realized DAG through :func:`urn_from_labels`. Keys are
    counts rounded to 9 decimals, as in :func:`polyaurn.urn.as_law`.
    """
    sigma = _require_urn_tensor(tensor)
    pi = check_simplex(pi, tensor.d)
    m, d = tensor.m, tensor.d
    size = math.prod(v**m for v in range(1, n + 1)) * d ** (m * n)
    if size > limit:
        raise TooLarge(f"{size} outcomes exceed {limit}")
    all_labels = list(itertools.product(range(d), repeat=m))
    law: Dict[tuple, float] = {}

    def rec(v, parents, labels, prob):
        if v > n:
            dag = LabelledDag(
                m,
                np.array(parents, dtype=np.int64).reshape(n, m),
                np.array(labels, dtype=np.int64).reshape(n, m),
                pi,
            )
            key = urn_from_labels(dag, tensor)[-1].key()
            law[key] = law.get(key, 0.0) + prob
            return
        for par in itertools.product(range(v), repeat=m):
            laws = [label_law(tensor, pi, labels, p, sigma) for p in par]
            p_par = prob / v**m
            for lab in all_labels:
                p_lab = math.prod(laws[s][lab[s]] for s in range(m))
                if p_lab > 0:
                    rec(v + 1, parents + [par], labels + [lab], p_par * p_lab)

    rec(1, [], [], 1.0)
    return law


@dataclass(frozen=True)
class AncestrySubgraph:
    """Ancestors of ``root`` with index ``>= n1`` and their parent tuples."""

    root: int
    n1: int
    members: FrozenSet[int]
    parents: Dict[int, Tuple[int, ...]]
    depth_of: Dict[int, int]

    @property
    def edges(self) -> List[Tuple[int, int]]:
        return [
            (v, p) for v in sorted(self.members) for p in self.parents[v] if p >= self.n1
        ]


@dataclass(frozen=True)
class EventReport:
    e_n_holds: bool
    f_n_holds: bool
    ell: int
    n1: int

    @property
    def both(self) -> bool:
        return self.e_n_holds and self.f_n_holds


class LazyDag:
    """Uniform recursive DAG whose parent tuples are sampled on first access.

    Parents of distinct nodes are independent, so sampling only the nodes a
    traversal visits has the same law as growing the whole DAG.
    """

    def __init__(self, n: int, m: int, rng: np.random.Generator):
        self.size = n
        self.m = m
        self._rng = rng
        self._parents: Dict[int, Tuple[int, ...]] = {}

    def parents_of(self, v: int) -> Tuple[int, ...]:
        if v == 0:
            return ()
        if not 1 <= v <= self.size:
            raise NodeOutOfRange(f"node {v} not in 0..{self.size}")
        got = self._parents.get(v)
        if got is None:
            got = tuple(int(p) for p in self._rng.integers(0, v, size=self.m))
            self._parents[v] = got
        return got


def ancestry(dag, n: int) -> AncestrySubgraph:
    """Breadth-first genealogy of node ``n`` restricted to nodes ``>= n1``."""
    if not 0 <= n <= dag.size:
        raise NodeOutOfRange(f"node {n} not in 0..{dag.size}")
    n1 = n1_of(n)
    depth = {n: 0}
    parents = {}
    frontier = [n]
    while frontier:
        nxt = []
        for v in frontier:
            par = dag.parents_of(v)
            parents[v] = par
            for p in par:
                if p >= n1 and p not in depth:
                    depth[p] = depth[v] + 1
                    nxt.append(p)
        frontier = nxt
    return AncestrySubgraph(n, n1, frozenset(depth), parents, depth)


def check_events(sub: AncestrySubgraph, ell: int) -> EventReport:
    """Tree event (all of ``H_n``) and completeness event (depth ``<= ell``).

    The tree event holds iff the number of parent links between members is
    ``|members| - 1`` (a repeated parent counts twice). The completeness event
    holds iff the full genealogy to depth ``ell``, expanded with multiplicity,
    consists of ``(m**(ell+1) - 1)/(m - 1)`` distinct nodes, all ``>= n1``.
    """
    if ell < 0:
        raise ValueError("ell must be >= 0")
    n_edges = sum(
        1 for v in sub.members for p in sub.parents[v] if p >= sub.n1
    )
    e_holds = n_edges == len(sub.members) - 1
    f_holds = True
    seen = {sub.root}
    layer = [sub.root]
    for _ in range(ell):
        nxt = []
        for v in layer:
            par = sub.parents.get(v, ())
            if not par:
                f_holds = False
                break
            for p in par:
                if p < sub.n1 or p in seen:
                    f_holds = False
                    break
                seen.add(p)
                nxt.append(p)
            if not f_holds:
                break
        if not f_holds:
            break
        layer = nxt
    return EventReport(e_holds, f_holds, ell, sub.n1)


@dataclass
class EventEstimate:
    n: int
    m: int
    ell: int
    estimate: float
    stderr: float
    replicates: int
    e_rate: float
    f_rate: float


def event_probability(n: int, m: int, ell: int, replicates: int, seed: int) -> EventEstimate:
    """Monte Carlo frequency of both genealogy events at node ``n``."""
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    hits = np.zeros((replicates, 2), dtype=bool)
    for r in range(replicates):
        report = check_events(ancestry(LazyDag(n, m, replicate_rng(seed, r)), n), ell)
        hits[r] = report.e_n_holds, report.f_n_holds
    both = hits.all(axis=1)
    p = float(both.mean())
    return EventEstimate(
        n, m, ell, p, math.sqrt(p * (1 - p) / replicates), replicates,
        float(hits[:, 0].mean()), float(hits[:, 1].mean()),
    )


def depth_one_probability(n: int, m: int) -> float:
    """Exact probability that node ``n``'s parents are distinct and ``>= n1``."""
    n1 = n1_of(n)
    return math.prod(max(n - n1 - s, 0) / n for s in range(m))


def events_csv(estimates) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "ell", "estimate", "stderr", "replicates"])
    for e in estimates:
        w.writerow([e.n, e.ell, repr(e.estimate), repr(e.stderr), e.replicates])
    return buf.getvalue()
