"""Built-in replacement tensors with their known properties.

Two-colour, two-draw tensors are written in the compact display layout::

    R111 R211 | R121 R221
    R112 R212 | R122 R222

i.e. row ``k`` holds the draws whose *second* colour is ``k`` and each pair of
entries is the column added for first colour ``j``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from .tensor import ReplacementTensor


def two_colour(rows, name=None) -> ReplacementTensor:
    """Build a ``d = 2, m = 2`` tensor from the 2 x 4 display layout."""
    rows = np.asarray(rows, dtype=float)
    if rows.shape != (2, 4):
        raise ValueError("display layout must be 2 x 4")
    r = np.empty((2, 2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                r[i, j, k] = rows[k, 2 * j + i]
    return ReplacementTensor(2, 2, r, name)


def affine(a0: float, h: float, sigma: float) -> ReplacementTensor:
    """Balanced affine two-colour urn: ``a_i = a0 + i h`` balls of colour 1
    after drawing ``i`` balls of colour 2."""
    a1, a2 = a0 + h, a0 + 2 * h
    return two_colour(
        [[a0, sigma - a0, a1, sigma - a1], [a1, sigma - a1, a2, sigma - a2]],
        name=f"affine({a0:g},{h:g},{sigma:g})",
    )


def first_draw(matrix, m: int = 2, name=None) -> ReplacementTensor:
    """Embed a single-draw replacement matrix: only the first draw matters."""
    a = np.asarray(matrix, dtype=float)
    d = a.shape[0]
    r = np.broadcast_to(a.reshape((d, d) + (1,) * (m - 1)), (d,) * (m + 1))
    return ReplacementTensor(d, m, r, name)


def chang_zhang() -> ReplacementTensor:
    """Positive 3-draw, 2-colour tensor with two fixed points on the simplex."""
    top = np.empty((2, 2, 2))
    top[0, 0, 0] = 0.872
    top[0, 0, 1] = top[0, 1, 0] = top[1, 0, 0] = 2.416 / 3
    top[0, 1, 1] = top[1, 0, 1] = top[1, 1, 0] = 0.616 / 3
    top[1, 1, 1] = 0.072
    bottom = np.empty((2, 2, 2))
    bottom[0, 0, 0] = 0.128
    bottom[0, 0, 1] = bottom[0, 1, 0] = bottom[1, 0, 0] = 0.584 / 3
    bottom[0, 1, 1] = bottom[1, 0, 1] = bottom[1, 1, 0] = 2.384 / 3
    bottom[1, 1, 1] = 0.928
    return ReplacementTensor(2, 3, np.stack([top, bottom]), "chang_zhang")


@dataclass
class CatalogEntry:
    name: str
    tensor: ReplacementTensor
    expected_sigma: float
    expected_lhs: float
    expected_e_holds: bool
    expected_fixed_points: List[np.ndarray] = field(default_factory=list)
    description: str = ""

    def summary(self) -> dict:
        return {
            "name": self.name,
            "d": self.tensor.d,
            "m": self.tensor.m,
            "sigma": self.expected_sigma,
            "ergodicity_lhs": self.expected_lhs,
            "e_holds": self.expected_e_holds,
            "fixed_points": [list(map(float, x)) for x in self.expected_fixed_points],
            "description": self.description,
        }


def _pt(p):
    return np.array([p, 1.0 - p])


def _affine_entry(a0=1.0, h=1.0, sigma=5.0) -> CatalogEntry:
    p = (a0 + 2 * h) / (sigma + 2 * h)
    return CatalogEntry(
        f"affine({a0:g},{h:g},{sigma:g})",
        affine(a0, h, sigma),
        sigma,
        4 * abs(h),
        4 * abs(h) < sigma,
        [_pt(p)],
        "Kuba-Mahmoud affine urn a_i = a0 + i h",
    )


def _build() -> Dict[str, Callable[[], CatalogEntry]]:
    s2 = math.sqrt(2.0)
    s11 = math.sqrt(11.0)
    return {
        "polya_identity": lambda: CatalogEntry(
            "polya_identity",
            two_colour([[2, 0, 1, 1], [1, 1, 0, 2]], "polya_identity"),
            2.0, 4.0, False, [],
            "R_ijk = 1{i=j} + 1{i=k}; random limit depending on U(0)",
        ),
        "all_ones": lambda: CatalogEntry(
            "all_ones",
            two_colour([[1, 1, 1, 1], [1, 1, 1, 1]], "all_ones"),
            2.0, 0.0, True, [_pt(0.5)],
            "one ball of each colour regardless of the draw",
        ),
        "affine": _affine_entry,
        "asym_sqrt2": lambda: CatalogEntry(
            "asym_sqrt2",
            two_colour([[1, 2, 1, 2], [2, 1, 1, 2]], "asym_sqrt2"),
            3.0, 2.0, True, [_pt(s2 - 1)],
            "order-dependent urn with x* = (sqrt2 - 1, 2 - sqrt2)",
        ),
        "asym_sqrt11": lambda: CatalogEntry(
            "asym_sqrt11",
            two_colour([[0, 5, 1, 4], [2, 3, 2, 3]], "asym_sqrt11"),
            5.0, 4.0, True, [_pt(s11 - 3)],
            "order-dependent urn with x* = (sqrt11 - 3, 4 - sqrt11)",
        ),
        "lms_ex1": lambda: CatalogEntry(
            "lms_ex1",
            two_colour([[1, 2, 2, 1], [2, 1, 1, 2]], "lms_ex1"),
            3.0, 2.0, True, [_pt(0.5)],
            "Lasmar-Mailler-Selmi example 1",
        ),
        "lms_ex2": lambda: CatalogEntry(
            "lms_ex2",
            two_colour([[4, 0, 1, 3], [1, 3, 1, 3]], "lms_ex2"),
            4.0, 6.0, False, [_pt(1 / 3), _pt(1.0)],
            "Lasmar-Mailler-Selmi example 2; two fixed points",
        ),
        "lms_ex3": lambda: CatalogEntry(
            "lms_ex3",
            two_colour([[7, 1, 3, 5], [3, 5, 1, 7]], "lms_ex3"),
            8.0, 12.0, False, [_pt(1 - 1 / s2)],
            "Lasmar-Mailler-Selmi example 3; unique fixed point but (E) fails",
        ),
        "li_ng": lambda: CatalogEntry(
            "li_ng",
            two_colour([[0, 1, 0, 1], [1, 0, 1, 0]], "li_ng"),
            1.0, 2.0, False, [_pt(0.5)],
            "Li-Ng example: power iteration oscillates",
        ),
        "chang_zhang": lambda: CatalogEntry(
            "chang_zhang",
            chang_zhang(),
            1.0, 1.6, False, [_pt(0.2), _pt(0.6)],
            "Chang-Zhang positive 3-draw tensor with two fixed points",
        ),
        "first_draw": lambda: CatalogEntry(
            "first_draw",
            first_draw([[2, 1], [1, 2]], name="first_draw"),
            3.0, 2.0, True, [_pt(0.5)],
            "single-draw matrix [[2,1],[1,2]] embedded as a 2-draw tensor",
        ),
    }


_BUILDERS = _build()
_AFFINE_RE = re.compile(r"^affine\(([^,]+),([^,]+),([^,]+)\)$")


def names() -> List[str]:
    return list(_BUILDERS)


def get(name: str) -> CatalogEntry:
    """Look up a catalog entry; ``affine(a0,h,sigma)`` builds a family member."""
    key = name.replace(" ", "")
    match = _AFFINE_RE.match(key)
    if match:
        a0, h, sigma = (float(v) for v in match.groups())
        return _affine_entry(a0, h, sigma)
    try:
        return _BUILDERS[key]()
    except KeyError:
        raise KeyError(f"unknown catalog entry {name!r}; choose from {names()}") from None


def entries() -> List[CatalogEntry]:
    return [get(n) for n in names()]


def tensor(name: str) -> ReplacementTensor:
    return get(name).tensor
