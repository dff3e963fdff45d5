"""Hot numeric kernels: Euclidean projections and the queue update.

Each kernel is written once, in numba-compatible vectorized numpy, and
compiled with ``@njit`` when numba is importable.  Setting the environment
variable ``VQOCO_NO_NUMBA=1`` (before import) selects the pure-numpy
interpreted path.  The uncompiled bodies stay reachable under ``*_py`` names
so ``benchmarks/bench_kernels.py`` can time both paths in one process.
"""

import os

import numpy as np

_FORCE_PURE = os.environ.get("VQOCO_NO_NUMBA", "").strip() not in ("", "0")

try:
    if _FORCE_PURE:
        raise ImportError("numba disabled via VQOCO_NO_NUMBA")
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False
    njit = None

# Bisection on the cap multiplier stops once the bracket is this tight
# (relative to the bracket scale); well inside the 1e-10 contract.
_CAP_BISECT_TOL = 1e-13
_CAP_BISECT_MAX = 200


def box_project_py(point, lower, upper):
    return np.minimum(np.maximum(point, lower), upper)


def ball_project_py(point, center, radius):
    d = point - center
    r = np.sqrt(np.dot(d, d))
    if r <= radius:
        return point.copy()
    scale = radius / r
    y = center + d * scale
    # Snap just inside the boundary so projecting twice is bit-for-bit
    # idempotent despite rounding in the rescale.
    e = y - center
    while np.sqrt(np.dot(e, e)) > radius:
        scale = np.nextafter(scale, 0.0)
        y = center + d * scale
        e = y - center
    return y


def capbox_project_py(point, lower, upper, weights, cap):
    x = np.minimum(np.maximum(point, lower), upper)
    if np.dot(weights, x) <= cap:
        return x
    # Shift along -weights until the clamped point meets the cap.  The shifted
    # load nu -> w . clip(p - nu w) is continuous and non-increasing, so a
    # bracketed bisection on the multiplier is exact up to the bracket width.
    nu_lo = 0.0
    nu_hi = 1.0
    for _ in range(_CAP_BISECT_MAX):
        y = np.minimum(np.maximum(point - nu_hi * weights, lower), upper)
        if np.dot(weights, y) <= cap:
            break
        nu_lo = nu_hi
        nu_hi *= 2.0
    for _ in range(_CAP_BISECT_MAX):
        if nu_hi - nu_lo <= _CAP_BISECT_TOL * (1.0 + nu_hi):
            break
        nu = 0.5 * (nu_lo + nu_hi)
        y = np.minimum(np.maximum(point - nu * weights, lower), upper)
        if np.dot(weights, y) > cap:
            nu_lo = nu
        else:
            nu_hi = nu
    # The upper end of the bracket is certified feasible; return that point.
    return np.minimum(np.maximum(point - nu_hi * weights, lower), upper)


def dual_update_py(lam, gamma, gvals):
    step = gamma * gvals
    return np.maximum(lam + step, -step)


if NUMBA_ENABLED:
    box_project = njit(cache=True)(box_project_py)
    ball_project = njit(cache=True)(ball_project_py)
    capbox_project = njit(cache=True)(capbox_project_py)
    dual_update = njit(cache=True)(dual_update_py)
else:
    box_project = box_project_py
    ball_project = ball_project_py
    capbox_project = capbox_project_py
    dual_update = dual_update_py
