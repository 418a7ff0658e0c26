"""Scalar special functions and root finding used by every other module.

Everything here is pure and deterministic. The Lambert solver is
hand-rolled so its iteration scheme (and therefore every downstream
crossing time) is reproducible bit-for-bit across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

_INV_E = -math.exp(-1.0)
_MAX_ITER = 100


class NumericsError(ValueError):
    """Domain or convergence failure in a numeric routine."""


def _w0_seed(x: float) -> float:
    # ln(1+x) tracks W0 well on x >= 0; near the branch point use the
    # series in p = sqrt(2(ex+1)): W = -1 + p - p^2/3 + (11/72)p^3.
    if x >= 0.0:
        return math.log1p(x)
    p = math.sqrt(2.0 * (math.e * x + 1.0))
    return -1.0 + p - p * p / 3.0 + (11.0 / 72.0) * p * p * p


def lambert_w0(x: float) -> float:
    """Principal branch of the Lambert function: w with w*e^w = x.

    Accepts x >= -1/e (up to 1e-15 slack below, clipped to the branch
    point). Halley iteration from a regime-dependent seed; relative
    residual is driven below 1e-12*max(1,|x|).
    """
    x = float(x)
    if math.isnan(x):
        raise NumericsError("lambert_w0: argument is NaN")
    if x < _INV_E:
        if x < _INV_E - 1e-15:
            raise NumericsError(f"lambert_w0: {x} below branch point -1/e")
        x = _INV_E
    if x == 0.0:
        return 0.0
    w = _w0_seed(x)
    for _ in range(_MAX_ITER):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= 1e-13 * max(1.0, abs(x)):
            return w
        wp1 = w + 1.0
        if wp1 == 0.0:
            return w  # exactly at the branch point
        # Halley step
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom
        w -= step
        if w < -1.0:
            w = -1.0
        if abs(step) <= 1e-16 * max(1.0, abs(w)):
            ew = math.exp(w)
            if abs(w * ew - x) <= 1e-12 * max(1.0, abs(x)):
                return w
    ew = math.exp(w)
    if abs(w * ew - x) <= 1e-12 * max(1.0, abs(x)):
        return w
    raise NumericsError(f"lambert_w0: no convergence at x={x}")


def lambert_w0_log(log_x: float) -> float:
    """W0(e^log_x), stable when e^log_x would overflow a double.

    Crossing times need W0 of exponentially large arguments when the
    pull rate is tiny; for log_x > 600 we solve w + ln w = log_x by
    Newton instead of forming e^log_x.
    """
    if log_x <= 600.0:
        return lambert_w0(math.exp(log_x))
    w = log_x - math.log(log_x)
    for _ in range(_MAX_ITER):
        g = w + math.log(w) - log_x
        step = g / (1.0 + 1.0 / w)
        w -= step
        if abs(step) <= 1e-15 * w:
            return w
    raise NumericsError(f"lambert_w0_log: no convergence at log_x={log_x}")


def lambert_w0_arr(x: np.ndarray) -> np.ndarray:
    """Vectorized W0 for the bulk oracle paths. Same scheme as lambert_w0."""
    x = np.asarray(x, dtype=float)
    if np.any(x < _INV_E - 1e-15):
        raise NumericsError("lambert_w0_arr: argument below branch point")
    xc = np.maximum(x, _INV_E)
    p = np.sqrt(np.maximum(2.0 * (math.e * xc + 1.0), 0.0))
    w = np.where(xc >= 0.0, np.log1p(np.maximum(xc, 0.0)),
                 -1.0 + p - p * p / 3.0 + (11.0 / 72.0) * p ** 3)
    for _ in range(_MAX_ITER):
        ew = np.exp(w)
        f = w * ew - xc
        if np.all(np.abs(f) <= 1e-13 * np.maximum(1.0, np.abs(xc))):
            break
        wp1 = w + 1.0
        safe = np.abs(wp1) > 1e-300
        denom = np.where(safe, ew * wp1 - (w + 2.0) * f / np.where(safe, 2.0 * wp1, 1.0), 1.0)
        w = np.where(safe, w - f / denom, w)
        w = np.maximum(w, -1.0)
    return w


def lambert_w0_log_arr(log_x: np.ndarray) -> np.ndarray:
    """Vectorized W0(e^log_x); array counterpart of lambert_w0_log."""
    log_x = np.asarray(log_x, dtype=float)
    out = np.empty_like(log_x)
    small = log_x <= 600.0
    if np.any(small):
        out[small] = lambert_w0_arr(np.exp(log_x[small]))
    if np.any(~small):
        lx = log_x[~small]
        w = lx - np.log(lx)
        for _ in range(_MAX_ITER):
            step = (w + np.log(w) - lx) / (1.0 + 1.0 / w)
            w -= step
            if np.all(np.abs(step) <= 1e-15 * w):
                break
        out[~small] = w
    return out


@dataclass(frozen=True)
class BracketedFunction:
    """A continuous function with a sign change on [a, b]."""

    f: Callable[[float], float]
    a: float
    b: float


def find_root(bf: BracketedFunction, tol: float) -> float:
    """Deterministic bisection on a bracketing interval.

    Stops when |f(mid)| <= tol or the bracket width drops below tol.
    Bisection over Brent on purpose: the callers invert monotone
    trajectories where bit-stable determinism matters and speed does not.
    """
    if tol <= 0.0:
        raise NumericsError("find_root: tol must be positive")
    a, b = float(bf.a), float(bf.b)
    fa, fb = bf.f(a), bf.f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise NumericsError(f"find_root: no sign change on [{a}, {b}]")
    for _ in range(200):
        mid = 0.5 * (a + b)
        fm = bf.f(mid)
        if abs(fm) <= tol or (b - a) <= tol:
            return mid
        if fa * fm <= 0.0:
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    raise NumericsError("find_root: iteration cap reached (malformed input?)")
