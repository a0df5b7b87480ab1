"""Hypothesis strategies shared by the property tests."""

import numpy as np
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from polyaurn.tensor import ReplacementTensor


@st.composite
def balanced_tensors(draw, d=st.integers(2, 3), m=st.integers(1, 3), sigma=None, spread=1.0):
    """Non-negative balanced tensors.

    Columns are ``sigma * (base + spread * noise)`` normalized, so a small
    ``spread`` makes the columns close together and (E) likely to hold.
    """
    d = draw(d)
    m = draw(m)
    sig = draw(sigma if sigma is not None else st.floats(0.5, 10.0))
    base = draw(hnp.arrays(float, d, elements=st.floats(0.05, 1.0)))
    noise = draw(hnp.arrays(float, (d, d**m), elements=st.floats(0.0, 1.0)))
    cols = base[:, None] + spread * noise
    cols = sig * cols / cols.sum(axis=0)
    return ReplacementTensor(d, m, cols.reshape((d,) * (m + 1)))


@st.composite
def simplex_points(draw, d):
    w = draw(hnp.arrays(float, d, elements=st.floats(0.0, 1.0)))
    w = w + 1e-3
    return w / w.sum()
