"""Wallis-Euler evaluation of terminating continued fractions.

For a chain of ``M`` coupled blocks the reflection and transmission amplitudes
are ratios of continuants,

    A_n = b_n A_{n-1} + a_n A_{n-2},     B_n = b_n B_{n-1} + a_n B_{n-2},

started from ``A_{-1} = 1, A_0 = 1`` and ``B_{-1} = 0, B_0 = 1``.  ``B_M`` is
the determinant of the tridiagonal system and ``A_M`` the same determinant with
the first diagonal entry shifted by the input coupling ``a_1``.

Both sequences are rescaled at every step so long chains (and huge detunings
far in the spectral tails) neither overflow nor underflow.  The optional
``t_factors`` are multiplied into a running product that is divided by the
same scales, giving ``prod(t_factors) / B_M`` without ever forming either
factor on its own.
"""

from __future__ import annotations

from typing import Optional

import numpy as np


def wallis_euler(a, b, t_factors: Optional[np.ndarray] = None):
    """Evaluate ``A_M / B_M`` and, optionally, ``prod(t_factors) / B_M``.

    Parameters
    ----------
    a, b : array_like, shape (M, ...)
        Partial numerators and denominators; ``a[0]`` is the input term.
    t_factors : array_like, shape (M - 1, ...), optional
        Sub-diagonal entries whose product forms the transmission numerator.

    Returns
    -------
    ratio : ndarray
        ``A_M / B_M``.
    trans : ndarray or None
        ``prod(t_factors) / B_M`` when ``t_factors`` is given.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or a.shape[0] == 0:
        raise ValueError("a and b must share a non-empty leading dimension")
    m = a.shape[0]
    shape = a.shape[1:]
    a_prev2 = np.ones(shape, dtype=complex)  # A_{-1}
    a_prev = np.ones(shape, dtype=complex)  # A_0
    b_prev2 = np.zeros(shape, dtype=complex)  # B_{-1}
    b_prev = np.ones(shape, dtype=complex)  # B_0
    prod = np.ones(shape, dtype=complex)
    tf = None if t_factors is None else np.asarray(t_factors, dtype=complex)
    if tf is not None and tf.shape[0] != m - 1:
        raise ValueError("t_factors must have one entry per coupling")
    for n in range(m):
        a_new = b[n] * a_prev + a[n] * a_prev2
        b_new = b[n] * b_prev + a[n] * b_prev2
        scale = np.maximum(np.abs(a_new), np.abs(b_new))
        scale = np.where(scale > 0, scale, 1.0)
        a_prev2, a_prev = a_prev / scale, a_new / scale
        b_prev2, b_prev = b_prev / scale, b_new / scale
        if tf is not None:
            factor = tf[n - 1] if n > 0 else 1.0
            prod = prod * factor / scale
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = a_prev / b_prev
        trans = None if tf is None else prod / b_prev
    return ratio, trans
