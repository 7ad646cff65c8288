"""Finite-difference building blocks.

Two flavours of the 1D first-derivative matrix are provided:

* ``zero_pad``: the 4th-order centered stencil applied as if the function
  were extended by zero beyond both ends. The matrix is exactly
  antisymmetric (banded Toeplitz), which is what makes the assembled
  channel generators exactly hermitian. Accurate only for functions that
  vanish at the ends together with their low derivatives.
* ``one_sided``: 4th-order centered interior stencil with 4th-order biased
  closures on the two rows at each end. Pointwise accurate for smooth
  functions regardless of boundary values, but not antisymmetric.

``diff4`` applies the same one-sided scheme along an axis of an nd-array;
it backs the 3D identity checks.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = ["d1_matrix", "diff4", "directional_derivative"]

# one-sided 4th-order closures for the first two rows (mirrored for the last)
_EDGE0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_EDGE1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


@lru_cache(maxsize=None)
def d1_matrix(n: int, h: float, boundary: str = "zero_pad") -> np.ndarray:
    """First-derivative matrix on n uniformly spaced points.

    boundary: "zero_pad" (exactly antisymmetric) or "one_sided".
    """
    if n < 5:
        raise ValueError("need at least 5 points for the 4th-order stencil")
    d = np.zeros((n, n))
    c1, c2 = 8.0 / (12.0 * h), 1.0 / (12.0 * h)
    idx = np.arange(n)
    for off, coef in ((1, c1), (2, -c2)):
        d[idx[:-off], idx[:-off] + off] += coef
        d[idx[off:], idx[off:] - off] += -coef
    if boundary == "zero_pad":
        pass  # truncated rows implement the zero extension
    elif boundary == "one_sided":
        d[0, :] = 0.0
        d[1, :] = 0.0
        d[-1, :] = 0.0
        d[-2, :] = 0.0
        d[0, :5] = _EDGE0 / h
        d[1, :5] = _EDGE1 / h
        d[-1, -5:] = -_EDGE0[::-1] / h
        d[-2, -5:] = -_EDGE1[::-1] / h
    else:
        raise ValueError(f"unknown boundary scheme {boundary!r}")
    d.setflags(write=False)
    return d


def diff4(arr: np.ndarray, h: float, axis: int) -> np.ndarray:
    """4th-order first derivative along ``axis`` with one-sided edge rows."""
    a = np.moveaxis(np.asarray(arr), axis, 0)
    out = np.empty_like(a, dtype=np.result_type(a.dtype, float))
    out[2:-2] = (a[:-4] - 8 * a[1:-3] + 8 * a[3:-1] - a[4:]) / (12 * h)
    out[0] = sum(c * a[k] for k, c in enumerate(_EDGE0)) / h
    out[1] = sum(c * a[k] for k, c in enumerate(_EDGE1)) / h
    out[-1] = -sum(c * a[-1 - k] for k, c in enumerate(_EDGE0)) / h
    out[-2] = -sum(c * a[-1 - k] for k, c in enumerate(_EDGE1)) / h
    return np.moveaxis(out, 0, axis)


def directional_derivative(f, x: np.ndarray, direction: int, h: float) -> np.ndarray:
    """4th-order central difference of a callable field along a coordinate.

    f maps points (..., 3) to values of any trailing shape; used to
    differentiate potentials sampled off-grid.
    """
    e = np.zeros(3)
    e[direction] = 1.0
    return (-f(x + 2 * h * e) + 8 * f(x + h * e)
            - 8 * f(x - h * e) + f(x - 2 * h * e)) / (12 * h)
