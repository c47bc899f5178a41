"""Log-gamma, digamma, and trigamma without an external math library.

Dirichlet losses and their gradients need these on arrays of concentration
parameters. All three accept scalars or numpy arrays of positive values and
are accurate well inside the documented bounds (lgamma abs err <= 1e-10,
digamma abs err <= 1e-9 on [1e-3, 1e4]).
"""

from __future__ import annotations

import numpy as np

from .exceptions import DomainError

_LN_SQRT_TWO_PI = 0.9189385332046727  # ln(sqrt(2*pi))
_LN_PI = 1.1447298858494002

# Lanczos approximation, g = 7, 9 coefficients. Standard double-precision
# set; relative error of the Gamma value ~1e-14 for x >= 0.5.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

# Asymptotic series are applied after shifting the argument above this.
_SERIES_MIN = 10.0


def _validate_positive(x: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(x)) or np.any(x <= 0.0):
        raise DomainError(f"{name} requires x > 0 and finite")


def _as_positive_array(x, name: str):
    arr = np.asarray(x, dtype=float)
    _validate_positive(arr, name)
    return arr, np.isscalar(x) or arr.ndim == 0


def _lanczos_lgamma(x: np.ndarray) -> np.ndarray:
    # valid for x >= 0.5
    z = x - 1.0
    acc = np.full_like(z, _LANCZOS_COEF[0])
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc = acc + c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _LN_SQRT_TWO_PI + (z + 0.5) * np.log(t) - t + np.log(acc)


def lgamma(x):
    """Natural log of the Gamma function for x > 0.

    Lanczos approximation for x >= 0.5, reflection below. Raises
    DomainError for nonpositive or non-finite input.
    """
    arr, scalar = _as_positive_array(x, "lgamma")
    small = arr < 0.5
    # Evaluate both branches on safe arguments, select afterwards.
    direct = _lanczos_lgamma(np.where(small, 1.0, arr))
    reflected = (
        _LN_PI
        - np.log(np.sin(np.pi * np.where(small, arr, 0.5)))
        - _lanczos_lgamma(1.0 - np.where(small, arr, 0.0))
    )
    out = np.where(small, reflected, direct)
    return float(out) if scalar else out


def digamma(x):
    """Derivative of lgamma for x > 0.

    Recurrence pushes the argument above 10, then a Bernoulli asymptotic
    series through x^-14. Raises DomainError for nonpositive input.
    """
    arr, scalar = _as_positive_array(x, "digamma")
    y = arr.astype(float).copy()
    shift = np.zeros_like(y)
    mask = y < _SERIES_MIN
    while np.any(mask):
        shift[mask] -= 1.0 / y[mask]
        y[mask] += 1.0
        mask = y < _SERIES_MIN
    inv2 = 1.0 / (y * y)
    series = (
        -1.0 / 12.0
        + inv2
        * (
            1.0 / 120.0
            + inv2
            * (
                -1.0 / 252.0
                + inv2
                * (
                    1.0 / 240.0
                    + inv2
                    * (-1.0 / 132.0 + inv2 * (691.0 / 32760.0 + inv2 * (-1.0 / 12.0)))
                )
            )
        )
    )
    out = shift + np.log(y) - 0.5 / y + inv2 * series
    return float(out) if scalar else out


def trigamma(x):
    """Second derivative of lgamma for x > 0 (needed by loss gradients)."""
    arr, scalar = _as_positive_array(x, "trigamma")
    y = arr.astype(float).copy()
    shift = np.zeros_like(y)
    mask = y < _SERIES_MIN
    while np.any(mask):
        shift[mask] += 1.0 / (y[mask] * y[mask])
        y[mask] += 1.0
        mask = y < _SERIES_MIN
    inv = 1.0 / y
    inv2 = inv * inv
    series = (
        1.0 / 6.0
        + inv2
        * (
            -1.0 / 30.0
            + inv2
            * (
                1.0 / 42.0
                + inv2
                * (
                    -1.0 / 30.0
                    + inv2
                    * (5.0 / 66.0 + inv2 * (-691.0 / 2730.0 + inv2 * (7.0 / 6.0)))
                )
            )
        )
    )
    out = shift + inv + 0.5 * inv2 + inv * inv2 * series
    return float(out) if scalar else out
