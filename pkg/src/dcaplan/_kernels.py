"""Compiled inner loops: Reeds-Shepp word solving, path sampling, polyline
collision tests.

Everything here works on plain floats and numpy arrays so numba can compile
it. Public wrappers live in :mod:`dcaplan.reeds_shepp` and
:mod:`dcaplan.environment`.

Reeds-Shepp solving works in the start frame with unit turning radius.
Segment lengths are signed: positive means forward motion, negative reverse.
Arc segments are measured in radians (= arc length at unit radius).
"""
import math

import numpy as np
from numba import njit

PI = math.pi
HALF_PI = 0.5 * math.pi
TWO_PI = 2.0 * math.pi

# lengths within ZERO of a sign constraint are clamped instead of rejected
ZERO = 1e-12
# equal-length window used for the fewer-segments tie break
TIE = 1e-12

NOP = 0
LEFT = 1
STRAIGHT = 2
RIGHT = 3

# segment kinds for each word family; rows padded with NOP
WORDS = np.array(
    [
        [LEFT, RIGHT, LEFT, NOP, NOP],  # 0  CCC
        [RIGHT, LEFT, RIGHT, NOP, NOP],  # 1
        [LEFT, RIGHT, LEFT, RIGHT, NOP],  # 2  CCCC
        [RIGHT, LEFT, RIGHT, LEFT, NOP],  # 3
        [LEFT, RIGHT, STRAIGHT, LEFT, NOP],  # 4  CC(pi/2)SC
        [RIGHT, LEFT, STRAIGHT, RIGHT, NOP],  # 5
        [LEFT, STRAIGHT, RIGHT, LEFT, NOP],  # 6  CSC(pi/2)C
        [RIGHT, STRAIGHT, LEFT, RIGHT, NOP],  # 7
        [LEFT, RIGHT, STRAIGHT, RIGHT, NOP],  # 8
        [RIGHT, LEFT, STRAIGHT, LEFT, NOP],  # 9
        [RIGHT, STRAIGHT, RIGHT, LEFT, NOP],  # 10
        [LEFT, STRAIGHT, LEFT, RIGHT, NOP],  # 11
        [LEFT, STRAIGHT, RIGHT, NOP, NOP],  # 12 CSC
        [RIGHT, STRAIGHT, LEFT, NOP, NOP],  # 13
        [LEFT, STRAIGHT, LEFT, NOP, NOP],  # 14
        [RIGHT, STRAIGHT, RIGHT, NOP, NOP],  # 15
        [LEFT, RIGHT, STRAIGHT, LEFT, RIGHT],  # 16 CC(pi/2)SC(pi/2)C
        [RIGHT, LEFT, STRAIGHT, RIGHT, LEFT],  # 17
    ],
    dtype=np.int64,
)

# solver state layout: [length, word, l0..l4, nonzero segment count]
STATE_SIZE = 8


@njit(cache=True)
def mod2pi(x):
    v = np.fmod(x, TWO_PI)
    if v < -PI:
        v += TWO_PI
    elif v > PI:
        v -= TWO_PI
    return v


@njit(cache=True)
def wrap_angle(a):
    """Map an angle into (-pi, pi]."""
    a = np.fmod(a + PI, TWO_PI)
    if a <= 0.0:
        a += TWO_PI
    return a - PI


@njit(cache=True)
def _clamp_unit(v):
    if v > 1.0:
        return 1.0
    if v < -1.0:
        return -1.0
    return v


@njit(cache=True)
def _polar(x, y):
    return math.sqrt(x * x + y * y), math.atan2(y, x)


@njit(cache=True)
def _tau_omega(u, v, xi, eta, phi):
    delta = mod2pi(u - v)
    a = math.sin(u) - math.sin(delta)
    b = math.cos(u) - math.cos(delta) - 1.0
    t1 = math.atan2(eta * a - xi * b, xi * a + eta * b)
    t2 = 2.0 * (math.cos(delta) - math.cos(v) - math.cos(u)) + 3.0
    if t2 < 0:
        tau = mod2pi(t1 + PI)
    else:
        tau = mod2pi(t1)
    omega = mod2pi(tau - u + v - phi)
    return tau, omega


@njit(cache=True)
def _nonneg(v):
    return 0.0 if v < 0.0 else v


@njit(cache=True)
def _nonpos(v):
    return 0.0 if v > 0.0 else v


@njit(cache=True)
def _lp_sp_lp(x, y, phi):
    u, t = _polar(x - math.sin(phi), y - 1.0 + math.cos(phi))
    if t >= -ZERO:
        v = mod2pi(phi - t)
        if v >= -ZERO:
            return True, _nonneg(t), u, _nonneg(v)
    return False, 0.0, 0.0, 0.0


@njit(cache=True)
def _lp_sp_rp(x, y, phi):
    u1, t1 = _polar(x + math.sin(phi), y - 1.0 - math.cos(phi))
    u1 = u1 * u1
    if u1 >= 4.0 - 4.0 * ZERO:
        u = math.sqrt(max(u1 - 4.0, 0.0))
        theta = math.atan2(2.0, u)
        t = mod2pi(t1 + theta)
        v = mod2pi(t - phi)
        if t >= -ZERO and v >= -ZERO:
            return True, _nonneg(t), u, _nonneg(v)
    return False, 0.0, 0.0, 0.0


@njit(cache=True)
def _lp_rm_l(x, y, phi):
    xi = x - math.sin(phi)
    eta = y - 1.0 + math.cos(phi)
    u1, theta = _polar(xi, eta)
    if u1 <= 4.0 + 4.0 * ZERO:
        u = -2.0 * math.asin(_clamp_unit(0.25 * u1))
        t = mod2pi(theta + 0.5 * u + PI)
        v = mod2pi(phi - t + u)
        if t >= -ZERO and u <= ZERO:
            return True, _nonneg(t), _nonpos(u), v
    return False, 0.0, 0.0, 0.0


@njit(cache=True)
def _lp_rup_lum_rm(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho = 0.25 * (2.0 + math.sqrt(xi * xi + eta * eta))
    if rho <= 1.0 + ZERO:
        u = math.acos(_clamp_unit(rho))
        t, v = _tau_omega(u, -u, xi, eta, phi)
        if t >= -ZERO and v <= ZERO:
            return True, _nonneg(t), u, _nonpos(v)
    return False, 0.0, 0.0, 0.0


@njit(cache=True)
def _lp_rum_lum_rp(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho = (20.0 - xi * xi - eta * eta) / 16.0
    if rho >= -ZERO and rho <= 1.0 + ZERO:
        u = -math.acos(_clamp_unit(rho))
        if u >= -HALF_PI:
            t, v = _tau_omega(u, u, xi, eta, phi)
            if t >= -ZERO and v >= -ZERO:
                return True, _nonneg(t), u, _nonneg(v)
    return False, 0.0, 0.0, 0.0


@njit(cache=True)
def _lp_rm_sm_lm(x, y, phi):
    xi = x - math.sin(phi)
    eta = y - 1.0 + math.cos(phi)
    rho, theta = _polar(xi, eta)
    if rho >= 2.0 - 2.0 * ZERO:
        r = math.sqrt(max(rho * rho - 4.0, 0.0))
        u = 2.0 - r
        t = mod2pi(theta + math.atan2(r, -2.0))
        v = mod2pi(phi - HALF_PI - t)
        if t >= -ZERO and u <= ZERO and v <= ZERO:
            return True, _nonneg(t), _nonpos(u), _nonpos(v)
    return False, 0.0, 0.0, 0.0


@njit(cache=True)
def _lp_rm_sm_rm(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho, theta = _polar(-eta, xi)
    if rho >= 2.0 - 2.0 * ZERO:
        t = theta
        u = 2.0 - rho
        v = mod2pi(t + HALF_PI - phi)
        if t >= -ZERO and u <= ZERO and v <= ZERO:
            return True, _nonneg(t), _nonpos(u), _nonpos(v)
    return False, 0.0, 0.0, 0.0


@njit(cache=True)
def _lp_rm_s_lm_rp(x, y, phi):
    xi = x + math.sin(phi)
    eta = y - 1.0 - math.cos(phi)
    rho, theta = _polar(xi, eta)
    if rho >= 2.0 - 2.0 * ZERO:
        u = 4.0 - math.sqrt(max(rho * rho - 4.0, 0.0))
        if u <= ZERO:
            t = mod2pi(math.atan2((4.0 - u) * xi - 2.0 * eta, -2.0 * xi + (u - 4.0) * eta))
            v = mod2pi(t - phi)
            if t >= -ZERO and v >= -ZERO:
                return True, _nonneg(t), _nonpos(u), _nonneg(v)
    return False, 0.0, 0.0, 0.0


@njit(cache=True)
def _count_nonzero(l0, l1, l2, l3, l4):
    n = 0
    for v in (l0, l1, l2, l3, l4):
        if abs(v) > ZERO:
            n += 1
    return n


@njit(cache=True)
def _offer(state, word, l0, l1, l2, l3, l4):
    total = abs(l0) + abs(l1) + abs(l2) + abs(l3) + abs(l4)
    nseg = _count_nonzero(l0, l1, l2, l3, l4)
    best = state[0]
    if total < best - TIE or (total <= best + TIE and nseg < state[7]):
        state[0] = total
        state[1] = word
        state[2] = l0
        state[3] = l1
        state[4] = l2
        state[5] = l3
        state[6] = l4
        state[7] = nseg


@njit(cache=True)
def _csc(x, y, phi, st):
    ok, t, u, v = _lp_sp_lp(x, y, phi)
    if ok:
        _offer(st, 14, t, u, v, 0.0, 0.0)
    ok, t, u, v = _lp_sp_lp(-x, y, -phi)
    if ok:
        _offer(st, 14, -t, -u, -v, 0.0, 0.0)
    ok, t, u, v = _lp_sp_lp(x, -y, -phi)
    if ok:
        _offer(st, 15, t, u, v, 0.0, 0.0)
    ok, t, u, v = _lp_sp_lp(-x, -y, phi)
    if ok:
        _offer(st, 15, -t, -u, -v, 0.0, 0.0)
    ok, t, u, v = _lp_sp_rp(x, y, phi)
    if ok:
        _offer(st, 12, t, u, v, 0.0, 0.0)
    ok, t, u, v = _lp_sp_rp(-x, y, -phi)
    if ok:
        _offer(st, 12, -t, -u, -v, 0.0, 0.0)
    ok, t, u, v = _lp_sp_rp(x, -y, -phi)
    if ok:
        _offer(st, 13, t, u, v, 0.0, 0.0)
    ok, t, u, v = _lp_sp_rp(-x, -y, phi)
    if ok:
        _offer(st, 13, -t, -u, -v, 0.0, 0.0)


@njit(cache=True)
def _ccc(x, y, phi, st):
    ok, t, u, v = _lp_rm_l(x, y, phi)
    if ok:
        _offer(st, 0, t, u, v, 0.0, 0.0)
    ok, t, u, v = _lp_rm_l(-x, y, -phi)
    if ok:
        _offer(st, 0, -t, -u, -v, 0.0, 0.0)
    ok, t, u, v = _lp_rm_l(x, -y, -phi)
    if ok:
        _offer(st, 1, t, u, v, 0.0, 0.0)
    ok, t, u, v = _lp_rm_l(-x, -y, phi)
    if ok:
        _offer(st, 1, -t, -u, -v, 0.0, 0.0)
    # time-reversed words, solved from the goal frame
    xb = x * math.cos(phi) + y * math.sin(phi)
    yb = x * math.sin(phi) - y * math.cos(phi)
    ok, t, u, v = _lp_rm_l(xb, yb, phi)
    if ok:
        _offer(st, 0, v, u, t, 0.0, 0.0)
    ok, t, u, v = _lp_rm_l(-xb, yb, -phi)
    if ok:
        _offer(st, 0, -v, -u, -t, 0.0, 0.0)
    ok, t, u, v = _lp_rm_l(xb, -yb, -phi)
    if ok:
        _offer(st, 1, v, u, t, 0.0, 0.0)
    ok, t, u, v = _lp_rm_l(-xb, -yb, phi)
    if ok:
        _offer(st, 1, -v, -u, -t, 0.0, 0.0)


@njit(cache=True)
def _cccc(x, y, phi, st):
    ok, t, u, v = _lp_rup_lum_rm(x, y, phi)
    if ok:
        _offer(st, 2, t, u, -u, v, 0.0)
    ok, t, u, v = _lp_rup_lum_rm(-x, y, -phi)
    if ok:
        _offer(st, 2, -t, -u, u, -v, 0.0)
    ok, t, u, v = _lp_rup_lum_rm(x, -y, -phi)
    if ok:
        _offer(st, 3, t, u, -u, v, 0.0)
    ok, t, u, v = _lp_rup_lum_rm(-x, -y, phi)
    if ok:
        _offer(st, 3, -t, -u, u, -v, 0.0)
    ok, t, u, v = _lp_rum_lum_rp(x, y, phi)
    if ok:
        _offer(st, 2, t, u, u, v, 0.0)
    ok, t, u, v = _lp_rum_lum_rp(-x, y, -phi)
    if ok:
        _offer(st, 2, -t, -u, -u, -v, 0.0)
    ok, t, u, v = _lp_rum_lum_rp(x, -y, -phi)
    if ok:
        _offer(st, 3, t, u, u, v, 0.0)
    ok, t, u, v = _lp_rum_lum_rp(-x, -y, phi)
    if ok:
        _offer(st, 3, -t, -u, -u, -v, 0.0)


@njit(cache=True)
def _ccsc(x, y, phi, st):
    ok, t, u, v = _lp_rm_sm_lm(x, y, phi)
    if ok:
        _offer(st, 4, t, -HALF_PI, u, v, 0.0)
    ok, t, u, v = _lp_rm_sm_lm(-x, y, -phi)
    if ok:
        _offer(st, 4, -t, HALF_PI, -u, -v, 0.0)
    ok, t, u, v = _lp_rm_sm_lm(x, -y, -phi)
    if ok:
        _offer(st, 5, t, -HALF_PI, u, v, 0.0)
    ok, t, u, v = _lp_rm_sm_lm(-x, -y, phi)
    if ok:
        _offer(st, 5, -t, HALF_PI, -u, -v, 0.0)
    ok, t, u, v = _lp_rm_sm_rm(x, y, phi)
    if ok:
        _offer(st, 8, t, -HALF_PI, u, v, 0.0)
    ok, t, u, v = _lp_rm_sm_rm(-x, y, -phi)
    if ok:
        _offer(st, 8, -t, HALF_PI, -u, -v, 0.0)
    ok, t, u, v = _lp_rm_sm_rm(x, -y, -phi)
    if ok:
        _offer(st, 9, t, -HALF_PI, u, v, 0.0)
    ok, t, u, v = _lp_rm_sm_rm(-x, -y, phi)
    if ok:
        _offer(st, 9, -t, HALF_PI, -u, -v, 0.0)
    xb = x * math.cos(phi) + y * math.sin(phi)
    yb = x * math.sin(phi) - y * math.cos(phi)
    ok, t, u, v = _lp_rm_sm_lm(xb, yb, phi)
    if ok:
        _offer(st, 6, v, u, -HALF_PI, t, 0.0)
    ok, t, u, v = _lp_rm_sm_lm(-xb, yb, -phi)
    if ok:
        _offer(st, 6, -v, -u, HALF_PI, -t, 0.0)
    ok, t, u, v = _lp_rm_sm_lm(xb, -yb, -phi)
    if ok:
        _offer(st, 7, v, u, -HALF_PI, t, 0.0)
    ok, t, u, v = _lp_rm_sm_lm(-xb, -yb, phi)
    if ok:
        _offer(st, 7, -v, -u, HALF_PI, -t, 0.0)
    ok, t, u, v = _lp_rm_sm_rm(xb, yb, phi)
    if ok:
        _offer(st, 10, v, u, -HALF_PI, t, 0.0)
    ok, t, u, v = _lp_rm_sm_rm(-xb, yb, -phi)
    if ok:
        _offer(st, 10, -v, -u, HALF_PI, -t, 0.0)
    ok, t, u, v = _lp_rm_sm_rm(xb, -yb, -phi)
    if ok:
        _offer(st, 11, v, u, -HALF_PI, t, 0.0)
    ok, t, u, v = _lp_rm_sm_rm(-xb, -yb, phi)
    if ok:
        _offer(st, 11, -v, -u, HALF_PI, -t, 0.0)


@njit(cache=True)
def _ccscc(x, y, phi, st):
    ok, t, u, v = _lp_rm_s_lm_rp(x, y, phi)
    if ok:
        _offer(st, 16, t, -HALF_PI, u, -HALF_PI, v)
    ok, t, u, v = _lp_rm_s_lm_rp(-x, y, -phi)
    if ok:
        _offer(st, 16, -t, HALF_PI, -u, HALF_PI, -v)
    ok, t, u, v = _lp_rm_s_lm_rp(x, -y, -phi)
    if ok:
        _offer(st, 17, t, -HALF_PI, u, -HALF_PI, v)
    ok, t, u, v = _lp_rm_s_lm_rp(-x, -y, phi)
    if ok:
        _offer(st, 17, -t, HALF_PI, -u, HALF_PI, -v)


@njit(cache=True)
def solve_normalized(x, y, phi):
    """Shortest word from the origin (heading 0) to (x, y, phi), unit radius.

    Returns the solver state array (see STATE_SIZE).
    """
    st = np.empty(STATE_SIZE)
    st[0] = np.inf
    st[1] = -1.0
    st[2:7] = 0.0
    st[7] = 99.0
    _csc(x, y, phi, st)
    _ccc(x, y, phi, st)
    _cccc(x, y, phi, st)
    _ccsc(x, y, phi, st)
    _ccscc(x, y, phi, st)
    return st


@njit(cache=True)
def _to_local(x0, y0, th0, x1, y1, th1, radius):
    dx = x1 - x0
    dy = y1 - y0
    c = math.cos(th0)
    s = math.sin(th0)
    return (c * dx + s * dy) / radius, (-s * dx + c * dy) / radius, wrap_angle(th1 - th0)


@njit(cache=True)
def solve(x0, y0, th0, x1, y1, th1, radius):
    x, y, phi = _to_local(x0, y0, th0, x1, y1, th1, radius)
    return solve_normalized(x, y, phi)


@njit(cache=True)
def distance(x0, y0, th0, x1, y1, th1, radius):
    x, y, phi = _to_local(x0, y0, th0, x1, y1, th1, radius)
    return solve_normalized(x, y, phi)[0] * radius


@njit(cache=True)
def distances_from(p, q, radius):
    """Distances from one pose ``p`` to every row of ``q``."""
    out = np.empty(q.shape[0])
    for k in range(q.shape[0]):
        out[k] = distance(p[0], p[1], p[2], q[k, 0], q[k, 1], q[k, 2], radius)
    return out


@njit(cache=True)
def distances_to(q, p, radius):
    """Distances from every row of ``q`` to one pose ``p``."""
    out = np.empty(q.shape[0])
    for k in range(q.shape[0]):
        out[k] = distance(q[k, 0], q[k, 1], q[k, 2], p[0], p[1], p[2], radius)
    return out


@njit(cache=True)
def paired_distances(a, b, radius):
    out = np.empty(a.shape[0])
    for k in range(a.shape[0]):
        out[k] = distance(a[k, 0], a[k, 1], a[k, 2], b[k, 0], b[k, 1], b[k, 2], radius)
    return out


@njit(cache=True)
def vertex_pair_distances(verts, i, j, radius):
    """Distance for each index pair, always solved from the lower index."""
    out = np.empty(i.shape[0])
    for k in range(i.shape[0]):
        a = i[k]
        b = j[k]
        if b < a:
            a, b = b, a
        out[k] = distance(
            verts[a, 0], verts[a, 1], verts[a, 2], verts[b, 0], verts[b, 1], verts[b, 2], radius
        )
    return out


# --------------------------------------------------------------------------
# path geometry


@njit(cache=True)
def advance(x, y, th, kind, t, radius):
    """Pose after a segment of signed normalized length ``t``."""
    if kind == LEFT:
        th1 = th + t
        return x + radius * (math.sin(th1) - math.sin(th)), y - radius * (math.cos(th1) - math.cos(th)), th1
    if kind == RIGHT:
        th1 = th - t
        return x - radius * (math.sin(th1) - math.sin(th)), y + radius * (math.cos(th1) - math.cos(th)), th1
    if kind == STRAIGHT:
        return x + radius * t * math.cos(th), y + radius * t * math.sin(th), th
    return x, y, th


@njit(cache=True)
def sample_points(x0, y0, th0, kinds, lens, radius, step):
    """Planar points at arc lengths 0, step, 2 step, ... and the endpoint.

    Segment junctions are inserted as extra vertices. Without them a chord
    can cut straight across a cusp and miss where the car actually turns back.
    """
    total = 0.0
    for j in range(kinds.shape[0]):
        total += abs(lens[j]) * radius
    n = int(math.ceil(total / step)) if total > 0.0 else 0
    # start pose of every segment
    nseg = kinds.shape[0]
    sx = np.empty(nseg + 1)
    sy = np.empty(nseg + 1)
    sth = np.empty(nseg + 1)
    cum = np.empty(nseg + 1)
    sx[0] = x0
    sy[0] = y0
    sth[0] = th0
    cum[0] = 0.0
    for j in range(nseg):
        sx[j + 1], sy[j + 1], sth[j + 1] = advance(sx[j], sy[j], sth[j], kinds[j], lens[j], radius)
        cum[j + 1] = cum[j] + abs(lens[j]) * radius
    pts = np.empty((n + nseg + 1, 2))
    m = 0
    seg = 0
    for k in range(n + 1):
        s = k * step
        if s > total or k == n:
            s = total
        while seg < nseg - 1 and s > cum[seg + 1]:
            seg += 1
            if cum[seg] > (k - 1) * step:
                pts[m, 0] = sx[seg]
                pts[m, 1] = sy[seg]
                m += 1
        into = s - cum[seg]
        sgn = 1.0 if lens[seg] >= 0.0 else -1.0
        px, py, _ = advance(sx[seg], sy[seg], sth[seg], kinds[seg], sgn * into / radius, radius)
        pts[m, 0] = px
        pts[m, 1] = py
        m += 1
    return pts[:m]


# --------------------------------------------------------------------------
# polygon tests (closed sets: boundary contact counts)


@njit(cache=True)
def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


@njit(cache=True)
def _within(ax, ay, bx, by, px, py):
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


@njit(cache=True)
def segments_touch(ax, ay, bx, by, cx, cy, dx, dy):
    d1 = _orient(cx, cy, dx, dy, ax, ay)
    d2 = _orient(cx, cy, dx, dy, bx, by)
    d3 = _orient(ax, ay, bx, by, cx, cy)
    d4 = _orient(ax, ay, bx, by, dx, dy)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    if d1 == 0 and _within(cx, cy, dx, dy, ax, ay):
        return True
    if d2 == 0 and _within(cx, cy, dx, dy, bx, by):
        return True
    if d3 == 0 and _within(ax, ay, bx, by, cx, cy):
        return True
    if d4 == 0 and _within(ax, ay, bx, by, dx, dy):
        return True
    return False


@njit(cache=True)
def point_in_polygon(px, py, xy, start, stop):
    """Closed point-in-polygon test for vertices ``xy[start:stop]``."""
    inside = False
    j = stop - 1
    for i in range(start, stop):
        xi = xy[i, 0]
        yi = xy[i, 1]
        xj = xy[j, 0]
        yj = xy[j, 1]
        if _orient(xj, yj, xi, yi, px, py) == 0 and _within(xj, yj, xi, yi, px, py):
            return True
        if (yi > py) != (yj > py):
            xcross = xi + (py - yi) * (xj - xi) / (yj - yi)
            if px < xcross:
                inside = not inside
        j = i
    return inside


@njit(cache=True)
def points_free(pts, xy, offsets, bbox, bounds):
    """Mask of points inside ``bounds`` and outside every obstacle."""
    out = np.ones(pts.shape[0], dtype=np.bool_)
    for k in range(pts.shape[0]):
        px = pts[k, 0]
        py = pts[k, 1]
        if px < bounds[0] or px > bounds[2] or py < bounds[1] or py > bounds[3]:
            out[k] = False
            continue
        for o in range(bbox.shape[0]):
            if px < bbox[o, 0] or px > bbox[o, 2] or py < bbox[o, 1] or py > bbox[o, 3]:
                continue
            if point_in_polygon(px, py, xy, offsets[o], offsets[o + 1]):
                out[k] = False
                break
    return out


@njit(cache=True)
def polyline_collides(pts, xy, offsets, bbox, bounds):
    nobs = bbox.shape[0]
    for k in range(pts.shape[0]):
        px = pts[k, 0]
        py = pts[k, 1]
        if px < bounds[0] or px > bounds[2] or py < bounds[1] or py > bounds[3]:
            return True
        for o in range(nobs):
            if px < bbox[o, 0] or px > bbox[o, 2] or py < bbox[o, 1] or py > bbox[o, 3]:
                continue
            if point_in_polygon(px, py, xy, offsets[o], offsets[o + 1]):
                return True
    for k in range(pts.shape[0] - 1):
        ax = pts[k, 0]
        ay = pts[k, 1]
        bx = pts[k + 1, 0]
        by = pts[k + 1, 1]
        lox = min(ax, bx)
        hix = max(ax, bx)
        loy = min(ay, by)
        hiy = max(ay, by)
        for o in range(nobs):
            if hix < bbox[o, 0] or lox > bbox[o, 2] or hiy < bbox[o, 1] or loy > bbox[o, 3]:
                continue
            start = offsets[o]
            stop = offsets[o + 1]
            j = stop - 1
            for i in range(start, stop):
                if segments_touch(ax, ay, bx, by, xy[j, 0], xy[j, 1], xy[i, 0], xy[i, 1]):
                    return True
                j = i
    return False


@njit(cache=True)
def pair_path_collides(verts, a, b, radius, step, xy, offsets, bbox, bounds):
    """Collision test of the optimal path from vertex ``a`` to ``b``."""
    st = solve(verts[a, 0], verts[a, 1], verts[a, 2], verts[b, 0], verts[b, 1], verts[b, 2], radius)
    word = int(st[1])
    kinds = WORDS[word]
    lens = st[2:7].copy()
    pts = sample_points(verts[a, 0], verts[a, 1], verts[a, 2], kinds, lens, radius, step)
    return polyline_collides(pts, xy, offsets, bbox, bounds)


@njit(cache=True)
def pairs_collide(verts, i, j, radius, step, xy, offsets, bbox, bounds):
    out = np.empty(i.shape[0], dtype=np.bool_)
    for k in range(i.shape[0]):
        out[k] = pair_path_collides(verts, i[k], j[k], radius, step, xy, offsets, bbox, bounds)
    return out


@njit(cache=True)
def _find_sorted(arr, lo, hi, value):
    """Position of ``value`` in sorted ``arr[lo:hi]`` or -1."""
    end = hi
    while lo < hi:
        mid = (lo + hi) // 2
        if arr[mid] < value:
            lo = mid + 1
        else:
            hi = mid
    if lo < end and arr[lo] == value:
        return lo
    return -1


@njit(cache=True)
def _best_parent(x, starts, lens, nbr, nbr_d, cost, frontier, best_y, best_v, best_d, seen_upto, log, log_len):
    """Cheapest frontier neighbour of ``x`` as (index, value, edge length).

    Ties go to the lowest index. The answer from the previous visit of ``x``
    is reused when its parent is still on the frontier; then only vertices
    that joined the frontier since that visit can change it.
    """
    xs = starts[x]
    xe = xs + lens[x]
    y = best_y[x]
    if y == -2 or (y >= 0 and not frontier[y]):
        best = np.inf
        y = -1
        dy = 0.0
        for b in range(xs, xe):
            u = nbr[b]
            if not frontier[u]:
                continue
            val = cost[u] + nbr_d[b]
            if val < best:
                best = val
                y = u
                dy = nbr_d[b]
    else:
        best = best_v[x]
        dy = best_d[x]
        for t in range(seen_upto[x], log_len):
            u = log[t]
            if not frontier[u]:
                continue
            b = _find_sorted(nbr, xs, xe, u)
            if b < 0:
                continue
            val = cost[u] + nbr_d[b]
            if val < best or (val == best and u < y):
                best = val
                y = u
                dy = nbr_d[b]
    best_y[x] = y
    best_v[x] = best
    best_d[x] = dy
    seen_upto[x] = log_len
    return y, best, dy


@njit(cache=True)
def fmt_expand(z, verts, starts, lens, nbr, nbr_d, cost, parent, edge_d, unvisited, frontier, memo, radius, step,
               xy, offsets, bbox, bounds, added, best_y, best_v, best_d, seen_upto, log, log_len):
    """One frontier expansion of the marching tree around vertex ``z``.

    Every unvisited neighbour ``x`` of ``z`` is offered its cheapest parent
    among the frontier neighbours of ``x`` (ties go to the lowest index);
    only that single connection is collision checked. ``memo`` maps a vertex
    pair key to its collision result. Afterwards ``z`` leaves the frontier
    and the new vertices join it, appended to ``log``.

    Returns the number of vertices written to ``added``, the number of fresh
    collision checks and the new log length.
    """
    n = verts.shape[0]
    count = 0
    checks = 0
    zs = starts[z]
    for a in range(zs, zs + lens[z]):
        x = nbr[a]
        if not unvisited[x]:
            continue
        y, best, dy = _best_parent(x, starts, lens, nbr, nbr_d, cost, frontier, best_y, best_v, best_d,
                                   seen_upto, log, log_len)
        if y < 0:
            continue
        lo = min(x, y)
        hi = max(x, y)
        key = lo * n + hi
        if key in memo:
            hit = memo[key]
        else:
            hit = pair_path_collides(verts, lo, hi, radius, step, xy, offsets, bbox, bounds)
            memo[key] = hit
            checks += 1
        if hit:
            continue
        parent[x] = y
        cost[x] = best
        edge_d[x] = dy
        unvisited[x] = False
        added[count] = x
        count += 1
    frontier[z] = False
    for k in range(count):
        frontier[added[k]] = True
        log[log_len] = added[k]
        log_len += 1
    return count, checks, log_len
