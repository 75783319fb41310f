"""Brute-force Reeds-Shepp distance, used to validate the closed-form solver.

Shares no formulas with :mod:`dcaplan.reeds_shepp`. For every word template
the first free arc is swept over a grid in [-2 pi, 2 pi]. For each grid value
the rest of the word follows from tangent-circle geometry, which leaves one
scalar residual. Its sign changes are refined with Brent's method. Every
root is integrated forward from the start and kept only if it lands on the
target. The templates are a superset of the optimal word families, so the
minimum over verified candidates is the optimal length once the grid
resolves every root.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import brentq, minimize_scalar

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi

# curvature sign of each arc kind; S has none
CURV = {"L": 1.0, "R": -1.0}
OPP = {"L": "R", "R": "L"}

VERIFY_TOL = 1e-7
ROOT_TOL = 1e-9


def _step(x, y, h, kind, t):
    """Advance by signed length ``t`` (unit radius); floats or arrays."""
    lib = np if isinstance(h, np.ndarray) or isinstance(t, np.ndarray) else math
    if kind == "S":
        return x + t * lib.cos(h), y + t * lib.sin(h), h
    k = CURV[kind]
    # rotate about the turning centre
    cx, cy = x - k * lib.sin(h), y + k * lib.cos(h)
    ang = k * t
    rx, ry = x - cx, y - cy
    ca, sa = lib.cos(ang), lib.sin(ang)
    return cx + ca * rx - sa * ry, cy + sa * rx + ca * ry, h + ang


def _centre(x, y, h, kind):
    k = CURV[kind]
    return x - k * np.sin(h), y + k * np.cos(h)


def _heading_on_circle(jx, jy, ox, oy, kind):
    return np.arctan2(jy - oy, jx - ox) + CURV[kind] * HALF_PI


def _wrap(a):
    return np.mod(a + math.pi, TWO_PI) - math.pi


def _reps(w):
    """Signed arc lengths congruent to ``w`` mod 2 pi with |t| <= 2 pi."""
    w = float(_wrap(w))
    return [t for t in (w, w - TWO_PI, w + TWO_PI) if abs(t) <= TWO_PI + 1e-12]


def _integrate(word, params):
    x = y = h = 0.0
    for kind, t in zip(word, params):
        x, y, h = _step(x, y, h, kind, t)
    return x, y, h


def _lands(word, params, target) -> bool:
    x, y, h = _integrate(word, params)
    tx, ty, tphi = target
    return math.hypot(x - tx, y - ty) < VERIFY_TOL and abs(_wrap(h - tphi)) < VERIFY_TOL


def _roots(fun, grid: np.ndarray, admissible=None) -> list[float]:
    """Roots of ``fun`` bracketed on ``grid``, plus near-zero tangencies.

    ``admissible`` masks grid cells worth refining; roots are still verified
    by the caller, so the mask only saves work.
    """
    g = fun(grid)

    def scalar(a):
        return float(fun(float(a)))

    ok = np.ones(len(grid), dtype=bool) if admissible is None else admissible
    cell_ok = ok[:-1] | ok[1:]
    out = [float(a) for a in grid[(g == 0.0) & ok]]
    with np.errstate(invalid="ignore"):
        crossing = (g[:-1] * g[1:] < 0.0) & cell_ok
    for i in np.flatnonzero(crossing):
        out.append(brentq(scalar, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    # double roots never change sign: polish small local minima of |g|
    ag = np.where(np.isfinite(g), np.abs(g), np.inf)
    mid = ag[1:-1]
    dips = (mid <= ag[:-2]) & (mid <= ag[2:]) & (mid > 0.0) & (mid < 1e-3) & ok[1:-1]
    # a dip next to a sign change is an ordinary root already bracketed
    dips &= ~(crossing[:-1] | crossing[1:])
    for i in np.flatnonzero(dips) + 1:
        res = minimize_scalar(
            lambda a: abs(scalar(a)),
            bounds=(grid[i - 1], grid[i + 1]),
            method="bounded",
            options={"xatol": 1e-13},
        )
        if res.fun < ROOT_TOL:
            out.append(float(res.x))
    return out


def _straight_template(prefix, suffix, target, grid, best):
    """Words ``prefix S suffix``: first prefix arc swept, last suffix arc free.

    ``prefix`` and ``suffix`` are lists of (kind, fixed length or None).
    """
    tx, ty, tphi = target
    k_first = CURV[prefix[0][0]]
    k_last = CURV[suffix[-1][0]]
    fixed_turn = sum(CURV[k] * f for k, f in prefix[1:] + suffix[:-1])
    word = [k for k, _ in prefix] + ["S"] + [k for k, _ in suffix]

    def prefix_end(a):
        x, y, h = _step(0.0 * a, 0.0 * a, 0.0 * a, prefix[0][0], a)
        for kind, f in prefix[1:]:
            x, y, h = _step(x, y, h, kind, f)
        return x, y, h

    def suffix_start(e):
        # walk backwards from the target through the suffix
        x = tx + 0.0 * e
        y = ty + 0.0 * e
        h = tphi + 0.0 * e
        x, y, h = _step(x, y, h, suffix[-1][0], -e)
        for kind, f in reversed(suffix[:-1]):
            x, y, h = _step(x, y, h, kind, -f)
        return x, y

    for k in range(-3, 4):
        def last_arc(a, k=k):
            return k_last * (tphi - k_first * a - fixed_turn) + TWO_PI * k

        def residual(a):
            px, py, h = prefix_end(a)
            qx, qy = suffix_start(last_arc(a))
            return np.cos(h) * (qy - py) - np.sin(h) * (qx - px)

        admissible = np.abs(last_arc(grid)) <= TWO_PI + 1e-9
        if not admissible.any():
            continue
        for a in _roots(residual, grid, admissible):
            e = float(last_arc(a))
            if abs(e) > TWO_PI + 1e-9:
                continue
            px, py, h = (float(v[0]) for v in prefix_end(np.array([a])))
            qx, qy = (float(v[0]) for v in suffix_start(np.array([e])))
            s = math.cos(h) * (qx - px) + math.sin(h) * (qy - py)
            params = [a] + [f for _, f in prefix[1:]] + [s] + [f for _, f in suffix[:-1]] + [e]
            _consider(word, params, target, best)


def _ccc_template(kinds, target, grid, best):
    c1, c2, c3 = kinds
    tx, ty, tphi = target
    o3x, o3y = _centre(tx, ty, tphi, c3)

    def residual(a):
        px, py, h = _step(0.0 * a, 0.0 * a, 0.0 * a, c1, a)
        o2x, o2y = _centre(px, py, h, c2)
        return np.hypot(o2x - o3x, o2y - o3y) - 2.0

    for a in _roots(residual, grid):
        px, py, h = _step(0.0, 0.0, 0.0, c1, a)
        o2x, o2y = _centre(px, py, h, c2)
        jx, jy = 0.5 * (o2x + o3x), 0.5 * (o2y + o3y)
        hj = _heading_on_circle(jx, jy, o2x, o2y, c2)
        for b in _reps(CURV[c2] * (hj - h)):
            for c in _reps(CURV[c3] * (tphi - hj)):
                _consider(list(kinds), [a, b, c], target, best)


def _cccc_template(kinds, target, grid, best):
    """Four arcs whose middle two have equal magnitude."""
    c1, c2, c3, c4 = kinds
    tx, ty, tphi = target
    o4x, o4y = _centre(tx, ty, tphi, c4)

    def geometry(a, side):
        px, py, h = _step(0.0 * a, 0.0 * a, 0.0 * a, c1, a)
        o2x, o2y = _centre(px, py, h, c2)
        dx, dy = o4x - o2x, o4y - o2y
        d = np.hypot(dx, dy)
        with np.errstate(invalid="ignore", divide="ignore"):
            hh = np.sqrt(4.0 - 0.25 * d * d)
            ux, uy = dx / d, dy / d
        o3x = 0.5 * (o2x + o4x) - side * hh * uy
        o3y = 0.5 * (o2y + o4y) + side * hh * ux
        j2x, j2y = 0.5 * (o2x + o3x), 0.5 * (o2y + o3y)
        j3x, j3y = 0.5 * (o3x + o4x), 0.5 * (o3y + o4y)
        th2 = _heading_on_circle(j2x, j2y, o2x, o2y, c2)
        th3 = _heading_on_circle(j3x, j3y, o3x, o3y, c3)
        return h, th2, th3

    def signed(w, sign):
        pos = np.mod(w, TWO_PI)
        return pos if sign > 0 else pos - TWO_PI

    for side, sb, sc in itertools.product((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)):
        def residual(a, side=side, sb=sb, sc=sc):
            h, th2, th3 = geometry(a, side)
            b = signed(CURV[c2] * (th2 - h), sb)
            c = signed(CURV[c3] * (th3 - th2), sc)
            return np.abs(b) - np.abs(c)

        for a in _roots(residual, grid):
            h, th2, th3 = (float(v[0]) for v in geometry(np.array([a]), side))
            if not math.isfinite(th2):
                continue
            b = float(signed(CURV[c2] * (th2 - h), sb))
            c = float(signed(CURV[c3] * (th3 - th2), sc))
            for d in _reps(CURV[c4] * (tphi - th3)):
                _consider(list(kinds), [a, b, c, d], target, best)


def _consider(word, params, target, best):
    if not all(math.isfinite(p) for p in params):
        return
    if _lands(word, params, target):
        length = sum(abs(p) for p in params)
        if length < best[0]:
            best[0] = length
            best[1] = ("".join(word), tuple(params))


def _templates():
    out = []
    for c1, c2 in itertools.product("LR", repeat=2):
        out.append(("straight", [(c1, None)], [(c2, None)]))
    for c1, c3, f in itertools.product("LR", "LR", (HALF_PI, -HALF_PI)):
        out.append(("straight", [(c1, None), (OPP[c1], f)], [(c3, None)]))
    for c1, c2, f in itertools.product("LR", "LR", (HALF_PI, -HALF_PI)):
        out.append(("straight", [(c1, None)], [(c2, f), (OPP[c2], None)]))
    for c1, c3, f1, f2 in itertools.product("LR", "LR", (HALF_PI, -HALF_PI), (HALF_PI, -HALF_PI)):
        out.append(("straight", [(c1, None), (OPP[c1], f1)], [(c3, f2), (OPP[c3], None)]))
    out.append(("ccc", ("L", "R", "L")))
    out.append(("ccc", ("R", "L", "R")))
    out.append(("cccc", ("L", "R", "L", "R")))
    out.append(("cccc", ("R", "L", "R", "L")))
    return out


TEMPLATES = _templates()


def oracle_search(target, resolution: float = 1e-2):
    """Search in the normalized frame (start at origin, heading 0, unit radius).

    Returns (length, (word, params)) for the best verified candidate.
    """
    if not resolution > 0:
        raise ValueError(f"resolution must be positive, got {resolution}")
    tx, ty, tphi = (float(v) for v in target)
    tphi = float(_wrap(tphi))
    if tx == 0.0 and ty == 0.0 and tphi == 0.0:
        return 0.0, ("", ())
    target = (tx, ty, tphi)
    n = math.ceil(TWO_PI / resolution)
    grid = np.arange(-n, n + 1) * resolution
    best = [math.inf, None]
    for tpl in TEMPLATES:
        if tpl[0] == "straight":
            _straight_template(tpl[1], tpl[2], target, grid, best)
        elif tpl[0] == "ccc":
            _ccc_template(tpl[1], target, grid, best)
        else:
            _cccc_template(tpl[1], target, grid, best)
    return best[0], best[1]


def oracle_distance(start, goal, R: float, resolution: float = 1e-2) -> float:
    """Brute-force shortest Reeds-Shepp length between two poses."""
    if not R > 0:
        raise ValueError(f"turning radius must be positive, got {R}")
    x0, y0, th0 = (float(v) for v in start)
    x1, y1, th1 = (float(v) for v in goal)
    dx, dy = x1 - x0, y1 - y0
    c, s = math.cos(th0), math.sin(th0)
    local = ((c * dx + s * dy) / R, (-s * dx + c * dy) / R, th1 - th0)
    return R * oracle_search(local, resolution)[0]
