"""Smoothed absolute value, its antiderivative flux, and related scalars.

The degenerate mobility |p| is replaced by the smooth sqrt(p^2 + kappa^2);
kappa = 0 is a first-class branch that reproduces |p| exactly rather than a
small-kappa limit, because the degenerate case is studied directly.

All functions accept scalars or numpy arrays and broadcast elementwise.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "abs_kappa",
    "flux_kappa",
    "abs_kappa_mean",
    "flux_kappa_error_bound",
]

# Beyond this ratio |p|/kappa the asinh argument is evaluated in log form to
# dodge overflow of p/kappa; the switch is far outside any physical regime.
_ASINH_RATIO_LIMIT = 1e150


def _check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if kappa < 0:
        raise ValueError(f"kappa must be nonnegative, got {kappa}")
    return kappa


def abs_kappa(p, kappa: float):
    """Smoothed absolute value sqrt(p^2 + kappa^2).

    Satisfies |p| <= abs_kappa(p, kappa) <= |p| + kappa.
    """
    kappa = _check_kappa(kappa)
    return np.hypot(p, kappa)


def _stable_kappa2_asinh(p: np.ndarray, kappa: float) -> np.ndarray:
    """kappa^2 * asinh(p / kappa) without forming a huge ratio."""
    with np.errstate(over="ignore"):
        ratio = np.abs(p) / kappa
    small = ratio < _ASINH_RATIO_LIMIT
    out = np.empty_like(p, dtype=float)
    out[small] = kappa**2 * np.arcsinh(p[small] / kappa)
    if not np.all(small):
        big = ~small
        # asinh(x) = sign(x) * (log|2x|) for |x| >> 1
        out[big] = kappa**2 * np.sign(p[big]) * (
            np.log(np.abs(p[big])) - np.log(kappa) + np.log(2.0)
        )
    return out


def flux_kappa(p, kappa: float):
    """Antiderivative of the smoothed absolute value, int_0^p sqrt(y^2+k^2) dy.

    Closed form (p sqrt(p^2+k^2) + k^2 asinh(p/k)) / 2 for kappa > 0 and
    p|p|/2 for kappa = 0.  Odd in p; its derivative is abs_kappa(p, kappa).
    """
    kappa = _check_kappa(kappa)
    p_arr = np.asarray(p, dtype=float)
    if kappa == 0.0:
        out = 0.5 * p_arr * np.abs(p_arr)
    else:
        out = 0.5 * (p_arr * np.hypot(p_arr, kappa) + _stable_kappa2_asinh(p_arr, kappa))
    return out if isinstance(p, np.ndarray) else float(out)


def abs_kappa_mean(p, kappa: float):
    """Average of the smoothed absolute value over the segment [0, p].

    Equals flux_kappa(p, kappa) / p, continued by its limit kappa at p = 0.
    This is the chord slope of the flux: the nonnegative coefficient c(p)
    with c(p) * p = flux_kappa(p, kappa), used to freeze the diffusion
    operator in conservative form.
    """
    kappa = _check_kappa(kappa)
    p_arr = np.asarray(p, dtype=float)
    flux = np.asarray(flux_kappa(p_arr, kappa))
    out = np.divide(flux, p_arr, out=np.full_like(p_arr, kappa), where=p_arr != 0.0)
    return out if isinstance(p, np.ndarray) else float(out)


def flux_kappa_error_bound(p, kappa: float):
    """Upper bound kappa * |p| on |flux_kappa(p, kappa) - flux_kappa(p, 0)|.

    Follows from 0 <= sqrt(y^2+k^2) - |y| <= kappa integrated over [0, |p|].
    """
    kappa = _check_kappa(kappa)
    p_arr = np.asarray(p, dtype=float)
    out = kappa * np.abs(p_arr)
    return out if isinstance(p, np.ndarray) else float(out)
