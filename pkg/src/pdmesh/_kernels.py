"""Low-level numba kernels over flat mesh arrays.

Array layout shared by every kernel:

    pos    (nv, 2) float64   vertex coordinates
    wgt    (nv,)   float64   vertex weights
    fixed  (nv,)   uint8     1 = boundary-fixed position
    vdead  (nv,)   uint8     1 = removed vertex (tombstone)
    tri    (nt, 3) int32     CCW vertex triples; tri[t, 0] == -1 marks a dead slot
    neigh  (nt, 3) int32     neigh[t, e] = triangle across edge e, -1 at boundary
    con    (nt, 3) uint8     1 = edge (t, e) is constrained
    v2t    (nv,)   int32     some live triangle containing v, -1 if none

Edge e of triangle t is the edge opposite local vertex e, i.e. between
tri[t, (e+1)%3] and tri[t, (e+2)%3].

Mutations that may need to be rolled back go through the _set_* helpers,
which append (kind, i, j, old) records to a caller-owned log; _undo replays
the log in reverse.  Acceptance-tested operations (vertex moves, weight
steps, collapses, refinements) are simulated in place and undone on reject.
"""

import math

import numpy as np
from numba import njit

BOUNDARY = -1

EPS_LEN2 = 1e-24     # squared-length floor for collapsed edges
EPS_DET = 1e-12      # relative determinant floor for degenerate faces
EPS_BAR_REG = 1e-10  # weighted flip-criterion tolerance
FD_REL = 1e-6        # finite-difference step, relative to local length scale
GRAD_GUARD = 1e-12   # scaled gradient magnitude below which updates are skipped

# undo-log record kinds
_L_TRI = 0
_L_NEIGH = 1
_L_CON = 2
_L_V2T = 3
_L_POS = 4
_L_WGT = 5
_L_VDEAD = 6

QT = 0  # primal (area-length) metric selector
QD = 1  # dual (staggering defect) metric selector


# ---------------------------------------------------------------------------
# scalar geometry
# ---------------------------------------------------------------------------

@njit(cache=True, fastmath=False)
def area2(ax, ay, bx, by, cx, cy):
    """Twice the signed area of (a, b, c)."""
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


@njit(cache=True)
def power_dist(px, py, qx, qy, qw):
    dx = px - qx
    dy = py - qy
    return dx * dx + dy * dy - qw


@njit(cache=True)
def edge_ortho_t(xi, yi, wi, xj, yj, wj):
    """Line parameter of the edge orthocentre; t = 0.5 at equal weights."""
    dx = xj - xi
    dy = yj - yi
    l2 = dx * dx + dy * dy
    if l2 < EPS_LEN2:
        return 0.5, False
    return 0.5 * ((wi - wj + l2) / l2), True


@njit(cache=True)
def face_ortho(xi, yi, wi, xj, yj, wj, xk, yk, wk):
    """Weighted face orthocentre in difference form.  Returns (ox, oy, ok)."""
    axx = xj - xi
    axy = yj - yi
    ayx = xk - xi
    ayy = yk - yi
    bx = 0.5 * (axx * axx + axy * axy - (wj - wi))
    by = 0.5 * (ayx * ayx + ayy * ayy - (wk - wi))
    det = axx * ayy - axy * ayx
    scale = max(axx * axx + axy * axy, ayx * ayx + ayy * ayy)
    if abs(det) < EPS_DET * scale:
        return 0.0, 0.0, False
    inv = 1.0 / det
    return xi + (bx * ayy - by * axy) * inv, yi + (axx * by - ayx * bx) * inv, True


@njit(cache=True)
def orthoball_of(xi, yi, wi, xj, yj, wj, xk, yk, wk):
    ox, oy, ok = face_ortho(xi, yi, wi, xj, yj, wj, xk, yk, wk)
    if not ok:
        return 0.0, 0.0, 0.0, False
    return ox, oy, power_dist(ox, oy, xi, yi, wi), True


@njit(cache=True)
def tri_q(ax, ay, bx, by, cx, cy):
    """Area-length quality: +1 equilateral, 0 degenerate, <0 inverted."""
    a2 = area2(ax, ay, bx, by, cx, cy)
    e0 = (bx - ax) * (bx - ax) + (by - ay) * (by - ay)
    e1 = (cx - bx) * (cx - bx) + (cy - by) * (cy - by)
    e2 = (ax - cx) * (ax - cx) + (ay - cy) * (ay - cy)
    rms2 = (e0 + e1 + e2) / 3.0
    if rms2 < EPS_LEN2:
        return 0.0
    # (4*sqrt(3)/3) * A / rms2, with A = a2/2
    return 1.1547005383792515 * a2 / rms2


@njit(cache=True)
def dual_q(ax, ay, aw, bx, by, bw, cx, cy, cw, beta_f):
    """Dual staggering quality of one triangle; 0 for a degenerate face."""
    ox, oy, ok = face_ortho(ax, ay, aw, bx, by, bw, cx, cy, cw)
    if not ok:
        return 0.0
    mx = (ax + bx + cx) / 3.0
    my = (ay + by + cy) / 3.0
    l0 = math.sqrt((bx - ax) ** 2 + (by - ay) ** 2)
    l1 = math.sqrt((cx - bx) ** 2 + (cy - by) ** 2)
    l2 = math.sqrt((ax - cx) ** 2 + (ay - cy) ** 2)
    lbar = (l0 + l1 + l2) / 3.0
    if lbar * lbar < EPS_LEN2:
        return 0.0
    df2 = (ox - mx) ** 2 + (oy - my) ** 2
    face_term = 1.0 - df2 / (lbar * lbar)
    # edge orthocentre sits on the edge line: delta_e / l_e == |t - 1/2|
    t0, ok0 = edge_ortho_t(ax, ay, aw, bx, by, bw)
    t1, ok1 = edge_ortho_t(bx, by, bw, cx, cy, cw)
    t2, ok2 = edge_ortho_t(cx, cy, cw, ax, ay, aw)
    if not (ok0 and ok1 and ok2):
        return 0.0
    edge_term = (3.0 - (t0 - 0.5) ** 2 - (t1 - 0.5) ** 2 - (t2 - 0.5) ** 2) / 3.0
    return beta_f * face_term + (1.0 - beta_f) * edge_term


@njit(cache=True)
def point_in_tri(px, py, ax, ay, bx, by, cx, cy):
    return (
        area2(ax, ay, bx, by, px, py) >= 0.0
        and area2(bx, by, cx, cy, px, py) >= 0.0
        and area2(cx, cy, ax, ay, px, py) >= 0.0
    )


@njit(cache=True)
def tri_q_of(pos, tri, t):
    a, b, c = tri[t, 0], tri[t, 1], tri[t, 2]
    return tri_q(pos[a, 0], pos[a, 1], pos[b, 0], pos[b, 1], pos[c, 0], pos[c, 1])


@njit(cache=True)
def dual_q_of(pos, wgt, tri, t, beta_f):
    a, b, c = tri[t, 0], tri[t, 1], tri[t, 2]
    return dual_q(
        pos[a, 0], pos[a, 1], wgt[a],
        pos[b, 0], pos[b, 1], wgt[b],
        pos[c, 0], pos[c, 1], wgt[c],
        beta_f,
    )


# ---------------------------------------------------------------------------
# spacing field sampling (0 = constant, 1 = raster bilinear, clamped)
# ---------------------------------------------------------------------------

@njit(cache=True)
def eval_h(hkind, hconst, hx0, hy0, hcs, hgrid, x, y):
    if hkind == 0:
        return hconst
    nr, nc = hgrid.shape
    gx = (x - hx0) / hcs
    gy = (y - hy0) / hcs
    if gx < 0.0:
        gx = 0.0
    if gy < 0.0:
        gy = 0.0
    if gx > nc - 1.000000001:
        gx = nc - 1.000000001
    if gy > nr - 1.000000001:
        gy = nr - 1.000000001
    j0 = int(gx)
    i0 = int(gy)
    fx = gx - j0
    fy = gy - i0
    return (
        hgrid[i0, j0] * (1 - fx) * (1 - fy)
        + hgrid[i0, j0 + 1] * fx * (1 - fy)
        + hgrid[i0 + 1, j0] * (1 - fx) * fy
        + hgrid[i0 + 1, j0 + 1] * fx * fy
    )


# ---------------------------------------------------------------------------
# connectivity helpers
# ---------------------------------------------------------------------------

@njit(cache=True)
def lidx(tri, t, v):
    if tri[t, 0] == v:
        return 0
    if tri[t, 1] == v:
        return 1
    if tri[t, 2] == v:
        return 2
    return -1


@njit(cache=True)
def adj_index(neigh, t2, t):
    """Local edge of t2 facing t."""
    if neigh[t2, 0] == t:
        return 0
    if neigh[t2, 1] == t:
        return 1
    if neigh[t2, 2] == t:
        return 2
    return -1


@njit(cache=True)
def star(tri, neigh, v2t, v, out):
    """Incident triangles of v in CCW order.  Returns (count, closed)."""
    t0 = v2t[v]
    if t0 < 0:
        return 0, False
    cap = out.shape[0]
    # rewind clockwise to the CW-most triangle (or detect a closed fan)
    t = t0
    closed = False
    for _ in range(4 * cap):
        a = lidx(tri, t, v)
        if a < 0:
            return 0, False
        nt = neigh[t, (a + 2) % 3]
        if nt < 0:
            break
        if nt == t0:
            closed = True
            t = t0
            break
        t = nt
    start = t
    cnt = 0
    for _ in range(4 * cap):
        if cnt >= cap:
            return cnt, closed
        out[cnt] = t
        cnt += 1
        a = lidx(tri, t, v)
        nt = neigh[t, (a + 1) % 3]
        if nt < 0 or nt == start:
            break
        t = nt
    return cnt, closed


@njit(cache=True)
def find_edge(tri, neigh, v2t, a, b, sbuf):
    """Locate edge (a, b).  Returns (t, e) or (-1, -1)."""
    cnt, _ = star(tri, neigh, v2t, a, sbuf)
    for i in range(cnt):
        t = sbuf[i]
        la = lidx(tri, t, a)
        if tri[t, (la + 1) % 3] == b:
            return t, (la + 2) % 3
        if tri[t, (la + 2) % 3] == b:
            return t, (la + 1) % 3
    return -1, -1


# ---------------------------------------------------------------------------
# undo log
# ---------------------------------------------------------------------------

@njit(cache=True)
def _rec(log_i, log_f, log_n, kind, i, j, old_i, old_f):
    n = log_n[0]
    if n >= log_i.shape[0]:
        return False
    log_i[n, 0] = kind
    log_i[n, 1] = i
    log_i[n, 2] = j
    log_i[n, 3] = old_i
    log_f[n] = old_f
    log_n[0] = n + 1
    return True


@njit(cache=True)
def set_tri(tri, t, c, val, log_i, log_f, log_n):
    _rec(log_i, log_f, log_n, _L_TRI, t, c, tri[t, c], 0.0)
    tri[t, c] = val


@njit(cache=True)
def set_neigh(neigh, t, c, val, log_i, log_f, log_n):
    _rec(log_i, log_f, log_n, _L_NEIGH, t, c, neigh[t, c], 0.0)
    neigh[t, c] = val


@njit(cache=True)
def set_con(con, t, c, val, log_i, log_f, log_n):
    _rec(log_i, log_f, log_n, _L_CON, t, c, con[t, c], 0.0)
    con[t, c] = val


@njit(cache=True)
def set_v2t(v2t, v, val, log_i, log_f, log_n):
    _rec(log_i, log_f, log_n, _L_V2T, v, 0, v2t[v], 0.0)
    v2t[v] = val


@njit(cache=True)
def set_pos(pos, v, ax, val, log_i, log_f, log_n):
    _rec(log_i, log_f, log_n, _L_POS, v, ax, 0, pos[v, ax])
    pos[v, ax] = val


@njit(cache=True)
def set_wgt(wgt, v, val, log_i, log_f, log_n):
    _rec(log_i, log_f, log_n, _L_WGT, v, 0, 0, wgt[v])
    wgt[v] = val


@njit(cache=True)
def set_vdead(vdead, v, val, log_i, log_f, log_n):
    _rec(log_i, log_f, log_n, _L_VDEAD, v, 0, vdead[v], 0.0)
    vdead[v] = val


@njit(cache=True)
def undo(tri, neigh, con, v2t, pos, wgt, vdead, log_i, log_f, log_n, upto):
    for k in range(log_n[0] - 1, upto - 1, -1):
        kind = log_i[k, 0]
        i = log_i[k, 1]
        j = log_i[k, 2]
        oi = log_i[k, 3]
        if kind == _L_TRI:
            tri[i, j] = oi
        elif kind == _L_NEIGH:
            neigh[i, j] = oi
        elif kind == _L_CON:
            con[i, j] = oi
        elif kind == _L_V2T:
            v2t[i] = oi
        elif kind == _L_POS:
            pos[i, j] = log_f[k]
        elif kind == _L_WGT:
            wgt[i] = log_f[k]
        else:
            vdead[i] = oi
    log_n[0] = upto


# ---------------------------------------------------------------------------
# affected-region tracking
#
# mark/stamp implement a set of triangle slots touched by the current
# operation; befores[0:2] fold the pre-mutation min Q^T / Q^D over that set
# (slots must be touched before their contents change).
# ---------------------------------------------------------------------------

@njit(cache=True)
def touch(pos, wgt, tri, t, mark, stamp, aff, aff_n, befores, beta_f,
          need_qd=True):
    if mark[t] == stamp[0]:
        return True
    mark[t] = stamp[0]
    if aff_n[0] >= aff.shape[0]:
        return False
    aff[aff_n[0]] = t
    aff_n[0] += 1
    if tri[t, 0] >= 0:
        qt = tri_q_of(pos, tri, t)
        if qt < befores[0]:
            befores[0] = qt
        if need_qd:
            qd = dual_q_of(pos, wgt, tri, t, beta_f)
            if qd < befores[1]:
                befores[1] = qd
    return True


@njit(cache=True)
def affected_mins(pos, wgt, tri, aff, aff_n, beta_f, need_qd=True):
    """Min Q^T and Q^D over the live slots of the affected list."""
    qt = 1e300
    qd = 1e300
    for i in range(aff_n[0]):
        t = aff[i]
        if tri[t, 0] < 0:
            continue
        q1 = tri_q_of(pos, tri, t)
        if q1 < qt:
            qt = q1
        if need_qd:
            q2 = dual_q_of(pos, wgt, tri, t, beta_f)
            if q2 < qd:
                qd = q2
    return qt, qd


# ---------------------------------------------------------------------------
# flips and the regularity cascade
# ---------------------------------------------------------------------------

@njit(cache=True)
def flip_violation(pos, wgt, tri, neigh, con, t, e, eps_bar):
    """True when edge (t, e) violates the weighted criterion and flipping it
    yields a valid (positively oriented) pair."""
    t2 = neigh[t, e]
    if t2 < 0 or con[t, e] != 0:
        return False
    a = tri[t, e]
    u = tri[t, (e + 1) % 3]
    v = tri[t, (e + 2) % 3]
    e2 = adj_index(neigh, t2, t)
    if e2 < 0:
        return False
    b = tri[t2, e2]
    ox1, oy1, r1, ok1 = orthoball_of(
        pos[a, 0], pos[a, 1], wgt[a],
        pos[u, 0], pos[u, 1], wgt[u],
        pos[v, 0], pos[v, 1], wgt[v],
    )
    ox2, oy2, r2, ok2 = orthoball_of(
        pos[b, 0], pos[b, 1], wgt[b],
        pos[v, 0], pos[v, 1], wgt[v],
        pos[u, 0], pos[u, 1], wgt[u],
    )
    if not (ok1 and ok2):
        return False
    eps = max(r1, r2) * eps_bar
    if power_dist(ox1, oy1, pos[b, 0], pos[b, 1], wgt[b]) >= r1 - eps:
        return False
    if power_dist(ox2, oy2, pos[a, 0], pos[a, 1], wgt[a]) >= r2 - eps:
        return False
    if area2(pos[a, 0], pos[a, 1], pos[u, 0], pos[u, 1], pos[b, 0], pos[b, 1]) <= 0.0:
        return False
    if area2(pos[a, 0], pos[a, 1], pos[b, 0], pos[b, 1], pos[v, 0], pos[v, 1]) <= 0.0:
        return False
    return True


@njit(cache=True)
def flip_edge_raw(pos, tri, neigh, con, v2t, t, e, log_i, log_f, log_n):
    """Flip edge (t, e), assumed interior and unconstrained.  Checks only
    orientation validity.  Returns True on success."""
    if log_n[0] + 40 > log_i.shape[0]:
        return False
    t2 = neigh[t, e]
    if t2 < 0 or con[t, e] != 0:
        return False
    a = tri[t, e]
    u = tri[t, (e + 1) % 3]
    v = tri[t, (e + 2) % 3]
    e2 = adj_index(neigh, t2, t)
    if e2 < 0:
        return False
    b = tri[t2, e2]
    if area2(pos[a, 0], pos[a, 1], pos[u, 0], pos[u, 1], pos[b, 0], pos[b, 1]) <= 0.0:
        return False
    if area2(pos[a, 0], pos[a, 1], pos[b, 0], pos[b, 1], pos[v, 0], pos[v, 1]) <= 0.0:
        return False
    n1 = neigh[t, (e + 1) % 3]   # across (v, a) in t
    c1 = con[t, (e + 1) % 3]
    n2 = neigh[t, (e + 2) % 3]   # across (a, u) in t
    c2 = con[t, (e + 2) % 3]
    n3 = neigh[t2, (e2 + 1) % 3]  # across (u, b) in t2
    c3 = con[t2, (e2 + 1) % 3]
    n4 = neigh[t2, (e2 + 2) % 3]  # across (b, v) in t2
    c4 = con[t2, (e2 + 2) % 3]
    # new triangles: t = (a, u, b), t2 = (a, b, v)
    set_tri(tri, t, 0, a, log_i, log_f, log_n)
    set_tri(tri, t, 1, u, log_i, log_f, log_n)
    set_tri(tri, t, 2, b, log_i, log_f, log_n)
    set_tri(tri, t2, 0, a, log_i, log_f, log_n)
    set_tri(tri, t2, 1, b, log_i, log_f, log_n)
    set_tri(tri, t2, 2, v, log_i, log_f, log_n)
    set_neigh(neigh, t, 0, n3, log_i, log_f, log_n)
    set_con(con, t, 0, c3, log_i, log_f, log_n)
    set_neigh(neigh, t, 1, t2, log_i, log_f, log_n)
    set_con(con, t, 1, 0, log_i, log_f, log_n)
    set_neigh(neigh, t, 2, n2, log_i, log_f, log_n)
    set_con(con, t, 2, c2, log_i, log_f, log_n)
    set_neigh(neigh, t2, 0, n4, log_i, log_f, log_n)
    set_con(con, t2, 0, c4, log_i, log_f, log_n)
    set_neigh(neigh, t2, 1, n1, log_i, log_f, log_n)
    set_con(con, t2, 1, c1, log_i, log_f, log_n)
    set_neigh(neigh, t2, 2, t, log_i, log_f, log_n)
    set_con(con, t2, 2, 0, log_i, log_f, log_n)
    if n3 >= 0:
        k = adj_index(neigh, n3, t2)
        if k >= 0:
            set_neigh(neigh, n3, k, t, log_i, log_f, log_n)
    if n1 >= 0:
        k = adj_index(neigh, n1, t)
        if k >= 0:
            set_neigh(neigh, n1, k, t2, log_i, log_f, log_n)
    set_v2t(v2t, a, t, log_i, log_f, log_n)
    set_v2t(v2t, u, t, log_i, log_f, log_n)
    set_v2t(v2t, b, t, log_i, log_f, log_n)
    set_v2t(v2t, v, t2, log_i, log_f, log_n)
    return True


@njit(cache=True)
def cascade(pos, wgt, tri, neigh, con, v2t, seeds, nseeds, stack,
            mark, stamp, aff, aff_n, befores, beta_f,
            eps_bar, max_flips, log_i, log_f, log_n, keep_log, need_qd=True):
    """Lawson-style flip cascade restoring local regularity.

    Seeds and every slot a flip touches are folded into the affected set
    before modification, so `befores` stays a valid pre-operation bound.
    Returns (nflips, ok); ok == False signals an exceeded budget.
    """
    sp = 0
    for i in range(nseeds):
        if sp >= stack.shape[0]:
            return 0, False
        stack[sp] = seeds[i]
        sp += 1
    nflips = 0
    while sp > 0:
        sp -= 1
        t = stack[sp]
        if tri[t, 0] < 0:
            continue
        e = 0
        while e < 3:
            if flip_violation(pos, wgt, tri, neigh, con, t, e, eps_bar):
                t2 = neigh[t, e]
                if not touch(pos, wgt, tri, t, mark, stamp, aff, aff_n,
                             befores, beta_f, need_qd):
                    return nflips, False
                if not touch(pos, wgt, tri, t2, mark, stamp, aff, aff_n,
                             befores, beta_f, need_qd):
                    return nflips, False
                if not flip_edge_raw(pos, tri, neigh, con, v2t, t, e, log_i, log_f, log_n):
                    e += 1
                    continue
                nflips += 1
                if not keep_log:
                    log_n[0] = 0
                if nflips > max_flips:
                    return nflips, False
                if sp + 1 >= stack.shape[0]:
                    return nflips, False
                stack[sp] = t2
                sp += 1
                e = 0  # re-scan this slot from scratch
            else:
                e += 1
    return nflips, True


# ---------------------------------------------------------------------------
# dual cells
# ---------------------------------------------------------------------------

@njit(cache=True)
def cell_area(pos, wgt, tri, neigh, v2t, v, sbuf, px, py):
    """Signed area of the dual cell of v (orthocentre fan; boundary cells
    are closed with the two boundary edge orthocentres and v itself).
    Returns (area, ok)."""
    cnt, closed = star(tri, neigh, v2t, v, sbuf)
    if cnt == 0 or cnt + 3 > px.shape[0]:
        return 0.0, False
    k = 0
    if not closed:
        # CW-most boundary edge orthocentre: edge (v, first ring vertex)
        t = sbuf[0]
        a = lidx(tri, t, v)
        u = tri[t, (a + 1) % 3]
        tt, ok = edge_ortho_t(pos[v, 0], pos[v, 1], wgt[v], pos[u, 0], pos[u, 1], wgt[u])
        if not ok:
            return 0.0, False
        px[k] = pos[v, 0] + tt * (pos[u, 0] - pos[v, 0])
        py[k] = pos[v, 1] + tt * (pos[u, 1] - pos[v, 1])
        k += 1
    for i in range(cnt):
        t = sbuf[i]
        a, b, c = tri[t, 0], tri[t, 1], tri[t, 2]
        ox, oy, ok = face_ortho(
            pos[a, 0], pos[a, 1], wgt[a],
            pos[b, 0], pos[b, 1], wgt[b],
            pos[c, 0], pos[c, 1], wgt[c],
        )
        if not ok:
            return 0.0, False
        px[k] = ox
        py[k] = oy
        k += 1
    if not closed:
        t = sbuf[cnt - 1]
        a = lidx(tri, t, v)
        u = tri[t, (a + 2) % 3]
        tt, ok = edge_ortho_t(pos[v, 0], pos[v, 1], wgt[v], pos[u, 0], pos[u, 1], wgt[u])
        if not ok:
            return 0.0, False
        px[k] = pos[v, 0] + tt * (pos[u, 0] - pos[v, 0])
        py[k] = pos[v, 1] + tt * (pos[u, 1] - pos[v, 1])
        k += 1
        px[k] = pos[v, 0]
        py[k] = pos[v, 1]
        k += 1
    s = 0.0
    for i in range(k):
        j = (i + 1) % k
        s += px[i] * py[j] - px[j] * py[i]
    return 0.5 * s, True


@njit(cache=True)
def cells_positive(pos, wgt, tri, neigh, v2t, fixed, aff, aff_n, vmark, vstamp,
                   sbuf, px, py):
    """Check that no interior vertex of the affected region has an empty
    (non-positive) power cell.  Boundary vertices are pinned by constrained
    edges and can never drop out of the triangulation."""
    vstamp[0] += 1
    for i in range(aff_n[0]):
        t = aff[i]
        if tri[t, 0] < 0:
            continue
        for c in range(3):
            v = tri[t, c]
            if vmark[v] == vstamp[0]:
                continue
            vmark[v] = vstamp[0]
            if fixed[v] != 0:
                continue
            ar, ok = cell_area(pos, wgt, tri, neigh, v2t, v, sbuf, px, py)
            if not ok or ar <= 0.0:
                return False
    return True


# ---------------------------------------------------------------------------
# gradients
# ---------------------------------------------------------------------------

@njit(cache=True)
def grad_qd_w_analytic(pos, wgt, tri, t, v, beta_f):
    """d Q^D(t) / d w_v, closed form."""
    i, j, k = tri[t, 0], tri[t, 1], tri[t, 2]
    # rotate so the differences are taken from base vertex i
    xi, yi, wi = pos[i, 0], pos[i, 1], wgt[i]
    xj, yj, wj = pos[j, 0], pos[j, 1], wgt[j]
    xk, yk, wk = pos[k, 0], pos[k, 1], wgt[k]
    axx = xj - xi
    axy = yj - yi
    ayx = xk - xi
    ayy = yk - yi
    det = axx * ayy - axy * ayx
    scale = max(axx * axx + axy * axy, ayx * ayx + ayy * ayy)
    if abs(det) < EPS_DET * scale:
        return 0.0
    bx = 0.5 * (axx * axx + axy * axy - (wj - wi))
    by = 0.5 * (ayx * ayx + ayy * ayy - (wk - wi))
    inv = 1.0 / det
    dx = (bx * ayy - by * axy) * inv
    dy = (axx * by - ayx * bx) * inv
    ox = xi + dx
    oy = yi + dy
    # d b / d w_v
    if v == i:
        dbx, dby = 0.5, 0.5
    elif v == j:
        dbx, dby = -0.5, 0.0
    elif v == k:
        dbx, dby = 0.0, -0.5
    else:
        return 0.0
    dox = (dbx * ayy - dby * axy) * inv
    doy = (axx * dby - ayx * dbx) * inv
    mx = (xi + xj + xk) / 3.0
    my = (yi + yj + yk) / 3.0
    l0 = math.sqrt((xj - xi) ** 2 + (yj - yi) ** 2)
    l1 = math.sqrt((xk - xj) ** 2 + (yk - yj) ** 2)
    l2 = math.sqrt((xi - xk) ** 2 + (yi - yk) ** 2)
    lbar = (l0 + l1 + l2) / 3.0
    if lbar * lbar < EPS_LEN2:
        return 0.0
    d_face = -(2.0 * ((ox - mx) * dox + (oy - my) * doy)) / (lbar * lbar)
    # edge terms: d/dw (t_e - 1/2)^2 = 2 (t_e - 1/2) * dt/dw
    d_edge = 0.0
    # edge (i, j)
    t01, _ = edge_ortho_t(xi, yi, wi, xj, yj, wj)
    if v == i:
        dt01 = 0.5 / (l0 * l0)
    elif v == j:
        dt01 = -0.5 / (l0 * l0)
    else:
        dt01 = 0.0
    d_edge -= 2.0 * (t01 - 0.5) * dt01
    # edge (j, k)
    t12, _ = edge_ortho_t(xj, yj, wj, xk, yk, wk)
    if v == j:
        dt12 = 0.5 / (l1 * l1)
    elif v == k:
        dt12 = -0.5 / (l1 * l1)
    else:
        dt12 = 0.0
    d_edge -= 2.0 * (t12 - 0.5) * dt12
    # edge (k, i)
    t20, _ = edge_ortho_t(xk, yk, wk, xi, yi, wi)
    if v == k:
        dt20 = 0.5 / (l2 * l2)
    elif v == i:
        dt20 = -0.5 / (l2 * l2)
    else:
        dt20 = 0.0
    d_edge -= 2.0 * (t20 - 0.5) * dt20
    return beta_f * d_face + (1.0 - beta_f) * d_edge / 3.0


@njit(cache=True)
def grad_qt_x_analytic(pos, tri, t, v):
    """(d Q^T(t) / d x_v, d Q^T / d y_v), closed form."""
    i, j, k = tri[t, 0], tri[t, 1], tri[t, 2]
    xi, yi = pos[i, 0], pos[i, 1]
    xj, yj = pos[j, 0], pos[j, 1]
    xk, yk = pos[k, 0], pos[k, 1]
    a2 = area2(xi, yi, xj, yj, xk, yk)
    e0 = (xj - xi) ** 2 + (yj - yi) ** 2
    e1 = (xk - xj) ** 2 + (yk - yj) ** 2
    e2 = (xi - xk) ** 2 + (yi - yk) ** 2
    rms2 = (e0 + e1 + e2) / 3.0
    if rms2 < EPS_LEN2:
        return 0.0, 0.0
    c = 1.1547005383792515
    if v == i:
        da2x, da2y = yj - yk, xk - xj
        drx = (2.0 * (xi - xj) + 2.0 * (xi - xk)) / 3.0
        dry = (2.0 * (yi - yj) + 2.0 * (yi - yk)) / 3.0
    elif v == j:
        da2x, da2y = yk - yi, xi - xk
        drx = (2.0 * (xj - xi) + 2.0 * (xj - xk)) / 3.0
        dry = (2.0 * (yj - yi) + 2.0 * (yj - yk)) / 3.0
    elif v == k:
        da2x, da2y = yi - yj, xj - xi
        drx = (2.0 * (xk - xi) + 2.0 * (xk - xj)) / 3.0
        dry = (2.0 * (yk - yi) + 2.0 * (yk - yj)) / 3.0
    else:
        return 0.0, 0.0
    gx = c * (da2x * rms2 - a2 * drx) / (rms2 * rms2)
    gy = c * (da2y * rms2 - a2 * dry) / (rms2 * rms2)
    return gx, gy


@njit(cache=True)
def grad_qd_w_fd(pos, wgt, tri, t, v, beta_f, dw):
    w0 = wgt[v]
    wgt[v] = w0 + dw
    qp = dual_q_of(pos, wgt, tri, t, beta_f)
    wgt[v] = w0 - dw
    qm = dual_q_of(pos, wgt, tri, t, beta_f)
    wgt[v] = w0
    return (qp - qm) / (2.0 * dw)


@njit(cache=True)
def grad_qt_x_fd(pos, tri, t, v, dx):
    x0 = pos[v, 0]
    y0 = pos[v, 1]
    pos[v, 0] = x0 + dx
    qxp = tri_q_of(pos, tri, t)
    pos[v, 0] = x0 - dx
    qxm = tri_q_of(pos, tri, t)
    pos[v, 0] = x0
    pos[v, 1] = y0 + dx
    qyp = tri_q_of(pos, tri, t)
    pos[v, 1] = y0 - dx
    qym = tri_q_of(pos, tri, t)
    pos[v, 1] = y0
    return (qxp - qxm) / (2.0 * dx), (qyp - qym) / (2.0 * dx)


# ---------------------------------------------------------------------------
# local vertex / weight updates (monotone, simulate-and-rollback)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _mean_incident_edge(pos, tri, star1, cnt, closed, v):
    s = 0.0
    n = 0
    for i in range(cnt):
        t = star1[i]
        a = lidx(tri, t, v)
        u = tri[t, (a + 1) % 3]
        s += math.sqrt((pos[u, 0] - pos[v, 0]) ** 2 + (pos[u, 1] - pos[v, 1]) ** 2)
        n += 1
    if not closed and cnt > 0:
        t = star1[cnt - 1]
        a = lidx(tri, t, v)
        u = tri[t, (a + 2) % 3]
        s += math.sqrt((pos[u, 0] - pos[v, 0]) ** 2 + (pos[u, 1] - pos[v, 1]) ** 2)
        n += 1
    if n == 0:
        return 0.0
    return s / n


@njit(cache=True)
def owt_target_of(pos, wgt, tri, star1, cnt, v,
                  hkind, hconst, hx0, hy0, hcs, hgrid):
    """Spacing-weighted mean of incident face orthocentres."""
    num_x = 0.0
    num_y = 0.0
    den = 0.0
    for i in range(cnt):
        t = star1[i]
        a, b, c = tri[t, 0], tri[t, 1], tri[t, 2]
        a2 = area2(pos[a, 0], pos[a, 1], pos[b, 0], pos[b, 1], pos[c, 0], pos[c, 1])
        if a2 <= 0.0:
            return 0.0, 0.0, False
        ox, oy, ok = face_ortho(
            pos[a, 0], pos[a, 1], wgt[a],
            pos[b, 0], pos[b, 1], wgt[b],
            pos[c, 0], pos[c, 1], wgt[c],
        )
        if not ok:
            return 0.0, 0.0, False
        hbar = (
            eval_h(hkind, hconst, hx0, hy0, hcs, hgrid, pos[a, 0], pos[a, 1])
            + eval_h(hkind, hconst, hx0, hy0, hcs, hgrid, pos[b, 0], pos[b, 1])
            + eval_h(hkind, hconst, hx0, hy0, hcs, hgrid, pos[c, 0], pos[c, 1])
        ) / 3.0
        wj = 0.5 * a2 / (hbar * hbar)
        num_x += wj * ox
        num_y += wj * oy
        den += wj
    if den <= 0.0:
        return 0.0, 0.0, False
    return num_x / den, num_y / den, True


@njit(cache=True)
def _try_vertex_pos(pos, wgt, fixed, vdead, tri, neigh, con, v2t, v, nx, ny,
                    star1, cnt, beta_f, eps_q, eps_bar,
                    stack, mark, stamp, aff, aff_n, befores,
                    vmark, vstamp, sbuf2, cpx, cpy, log_i, log_f, log_n,
                    check_cells):
    stamp[0] += 1
    aff_n[0] = 0
    befores[0] = 1e300
    befores[1] = 1e300
    for i in range(cnt):
        if not touch(pos, wgt, tri, star1[i], mark, stamp, aff, aff_n,
                     befores, beta_f, False):
            return False
    log_n[0] = 0
    set_pos(pos, v, 0, nx, log_i, log_f, log_n)
    set_pos(pos, v, 1, ny, log_i, log_f, log_n)
    ok = True
    for i in range(cnt):
        t = star1[i]
        a, b, c = tri[t, 0], tri[t, 1], tri[t, 2]
        if area2(pos[a, 0], pos[a, 1], pos[b, 0], pos[b, 1], pos[c, 0], pos[c, 1]) <= 0.0:
            ok = False
            break
    if ok:
        nflips, cok = cascade(pos, wgt, tri, neigh, con, v2t, star1, cnt, stack,
                              mark, stamp, aff, aff_n, befores, beta_f,
                              eps_bar, 200, log_i, log_f, log_n, True, False)
        if not cok:
            ok = False
    if ok:
        qt_after, qd_after = affected_mins(pos, wgt, tri, aff, aff_n, beta_f, False)
        if not (qt_after > befores[0] + eps_q):
            ok = False
    if ok and check_cells:
        if not cells_positive(pos, wgt, tri, neigh, v2t, fixed, aff, aff_n,
                              vmark, vstamp, sbuf2, cpx, cpy):
            ok = False
    if not ok:
        undo(tri, neigh, con, v2t, pos, wgt, vdead, log_i, log_f, log_n, 0)
        return False
    return True


@njit(cache=True)
def update_vertex(pos, wgt, fixed, vdead, tri, neigh, con, v2t, v,
                  hkind, hconst, hx0, hy0, hcs, hgrid,
                  beta_f, eps_q, max_bisect, eps_bar,
                  star1, sbuf2, stack, mark, stamp, aff, aff_n, befores,
                  vmark, vstamp, cpx, cpy, log_i, log_f, log_n, check_cells):
    """OWT relaxation first, gradient ascent fallback.  Returns 1 if moved."""
    if fixed[v] != 0 or vdead[v] != 0:
        return 0
    cnt, closed = star(tri, neigh, v2t, v, star1)
    if cnt == 0:
        return 0
    lbar = _mean_incident_edge(pos, tri, star1, cnt, closed, v)
    if lbar <= 0.0:
        return 0
    x0 = pos[v, 0]
    y0 = pos[v, 1]
    tx, ty, owt_ok = owt_target_of(pos, wgt, tri, star1, cnt, v,
                                   hkind, hconst, hx0, hy0, hcs, hgrid)
    # a relaxation step shorter than this cannot clear the acceptance bar
    step_floor = lbar * max(1e-12, 0.25 * eps_q)
    if owt_ok and math.hypot(tx - x0, ty - y0) > step_floor:
        for m in range(max_bisect + 1):
            d = 0.5 ** m
            nx = (1.0 - d) * x0 + d * tx
            ny = (1.0 - d) * y0 + d * ty
            if _try_vertex_pos(pos, wgt, fixed, vdead, tri, neigh, con, v2t, v, nx, ny,
                               star1, cnt, beta_f, eps_q, eps_bar,
                               stack, mark, stamp, aff, aff_n, befores,
                               vmark, vstamp, sbuf2, cpx, cpy,
                               log_i, log_f, log_n, check_cells):
                return 1
    # fall back to steepest ascent on the worst incident triangle
    qworst = 1e300
    qsum = 0.0
    jworst = -1
    for i in range(cnt):
        q = tri_q_of(pos, tri, star1[i])
        qsum += q
        if q < qworst:
            qworst = q
            jworst = star1[i]
    qbar = qsum / cnt
    if qbar - qworst <= eps_q:
        return 0
    gx, gy = grad_qt_x_fd(pos, tri, jworst, v, FD_REL * lbar)
    gn2 = gx * gx + gy * gy
    if math.sqrt(gn2) * lbar < GRAD_GUARD:
        return 0
    dbar = (qbar - qworst) / gn2
    if dbar <= 0.0:
        return 0
    for m in range(max_bisect + 1):
        d = (0.5 ** m) * dbar
        if _try_vertex_pos(pos, wgt, fixed, vdead, tri, neigh, con, v2t, v,
                           x0 + d * gx, y0 + d * gy,
                           star1, cnt, beta_f, eps_q, eps_bar,
                           stack, mark, stamp, aff, aff_n, befores,
                           vmark, vstamp, sbuf2, cpx, cpy,
                           log_i, log_f, log_n, check_cells):
            return 1
    return 0


@njit(cache=True)
def update_weight(pos, wgt, fixed, vdead, tri, neigh, con, v2t, v,
                  beta_f, eps_q, max_bisect, eps_bar, eps_t,
                  star1, sbuf2, stack, mark, stamp, aff, aff_n, befores,
                  vmark, vstamp, cpx, cpy, log_i, log_f, log_n, guard_qt,
                  check_cells):
    """Worst-first gradient ascent on the dual metric.  Returns 1 if changed."""
    if vdead[v] != 0:
        return 0
    cnt, closed = star(tri, neigh, v2t, v, star1)
    if cnt == 0:
        return 0
    lbar = _mean_incident_edge(pos, tri, star1, cnt, closed, v)
    if lbar <= 0.0:
        return 0
    qworst = 1e300
    qsum = 0.0
    jworst = -1
    for i in range(cnt):
        q = dual_q_of(pos, wgt, tri, star1[i], beta_f)
        qsum += q
        if q < qworst:
            qworst = q
            jworst = star1[i]
    qbar = qsum / cnt
    if qbar - qworst <= eps_q:
        return 0
    g = grad_qd_w_fd(pos, wgt, tri, jworst, v, beta_f, FD_REL * lbar * lbar)
    if abs(g) * lbar * lbar < GRAD_GUARD:
        return 0
    dwbar = (qbar - qworst) / g
    w0 = wgt[v]
    for m in range(max_bisect + 1):
        wnew = w0 + (0.5 ** m) * dwbar
        stamp[0] += 1
        aff_n[0] = 0
        befores[0] = 1e300
        befores[1] = 1e300
        okbuf = True
        for i in range(cnt):
            if not touch(pos, wgt, tri, star1[i], mark, stamp, aff, aff_n, befores, beta_f):
                okbuf = False
        if not okbuf:
            return 0
        log_n[0] = 0
        set_wgt(wgt, v, wnew, log_i, log_f, log_n)
        nflips, cok = cascade(pos, wgt, tri, neigh, con, v2t, star1, cnt, stack,
                              mark, stamp, aff, aff_n, befores, beta_f,
                              eps_bar, 200, log_i, log_f, log_n, True)
        ok = cok
        if ok:
            qt_after, qd_after = affected_mins(pos, wgt, tri, aff, aff_n, beta_f)
            if not (qd_after > befores[1] + eps_q):
                ok = False
            elif guard_qt and nflips > 0 and qt_after < befores[0] - eps_t:
                ok = False
        if ok and check_cells:
            if not cells_positive(pos, wgt, tri, neigh, v2t, fixed, aff, aff_n,
                                  vmark, vstamp, sbuf2, cpx, cpy):
                ok = False
        if ok:
            return 1
        undo(tri, neigh, con, v2t, pos, wgt, vdead, log_i, log_f, log_n, 0)
    return 0


@njit(cache=True)
def vertex_sweep_kernel(pos, wgt, fixed, vdead, tri, neigh, con, v2t, perm,
                        hkind, hconst, hx0, hy0, hcs, hgrid,
                        beta_f, eps_q, max_bisect, eps_bar,
                        star1, sbuf2, stack, mark, stamp, aff, aff_n, befores,
                        vmark, vstamp, cpx, cpy, log_i, log_f, log_n,
                        check_cells):
    attempted = 0
    accepted = 0
    for idx in range(perm.shape[0]):
        v = perm[idx]
        if fixed[v] != 0 or vdead[v] != 0 or v2t[v] < 0:
            continue
        attempted += 1
        accepted += update_vertex(pos, wgt, fixed, vdead, tri, neigh, con, v2t, v,
                                  hkind, hconst, hx0, hy0, hcs, hgrid,
                                  beta_f, eps_q, max_bisect, eps_bar,
                                  star1, sbuf2, stack, mark, stamp, aff, aff_n,
                                  befores, vmark, vstamp, cpx, cpy,
                                  log_i, log_f, log_n, check_cells)
    return attempted, accepted


@njit(cache=True)
def weight_sweep_kernel(pos, wgt, fixed, vdead, tri, neigh, con, v2t, perm,
                        beta_f, eps_q, max_bisect, eps_bar, eps_t,
                        star1, sbuf2, stack, mark, stamp, aff, aff_n, befores,
                        vmark, vstamp, cpx, cpy, log_i, log_f, log_n, guard_qt,
                        check_cells):
    attempted = 0
    accepted = 0
    for idx in range(perm.shape[0]):
        v = perm[idx]
        if vdead[v] != 0 or v2t[v] < 0:
            continue
        attempted += 1
        accepted += update_weight(pos, wgt, fixed, vdead, tri, neigh, con, v2t, v,
                                  beta_f, eps_q, max_bisect, eps_bar, eps_t,
                                  star1, sbuf2, stack, mark, stamp, aff, aff_n,
                                  befores, vmark, vstamp, cpx, cpy,
                                  log_i, log_f, log_n, guard_qt, check_cells)
    return attempted, accepted


# ---------------------------------------------------------------------------
# global statistics
# ---------------------------------------------------------------------------

@njit(cache=True)
def mesh_stats(pos, wgt, tri, nt, beta_f):
    """(n_live, min_qt, mean_qt, min_qd, mean_qd, n_poorly_staggered)."""
    n = 0
    min_qt = 1e300
    min_qd = 1e300
    s_qt = 0.0
    s_qd = 0.0
    nbad = 0
    for t in range(nt):
        if tri[t, 0] < 0:
            continue
        n += 1
        a, b, c = tri[t, 0], tri[t, 1], tri[t, 2]
        qt = tri_q_of(pos, tri, t)
        qd = dual_q_of(pos, wgt, tri, t, beta_f)
        s_qt += qt
        s_qd += qd
        if qt < min_qt:
            min_qt = qt
        if qd < min_qd:
            min_qd = qd
        ox, oy, ok = face_ortho(
            pos[a, 0], pos[a, 1], wgt[a],
            pos[b, 0], pos[b, 1], wgt[b],
            pos[c, 0], pos[c, 1], wgt[c],
        )
        if not ok or not point_in_tri(ox, oy, pos[a, 0], pos[a, 1],
                                      pos[b, 0], pos[b, 1], pos[c, 0], pos[c, 1]):
            nbad += 1
    if n == 0:
        return 0, 0.0, 0.0, 0.0, 0.0, 0
    return n, min_qt, s_qt / n, min_qd, s_qd / n, nbad


@njit(cache=True)
def edge_snapshot(tri, neigh, nt, out):
    """Canonical live edges as (t, e, a, b) rows; returns count."""
    k = 0
    for t in range(nt):
        if tri[t, 0] < 0:
            continue
        for e in range(3):
            t2 = neigh[t, e]
            if t2 >= 0 and t2 < t:
                continue
            if k >= out.shape[0]:
                return -1
            out[k, 0] = t
            out[k, 1] = e
            out[k, 2] = tri[t, (e + 1) % 3]
            out[k, 3] = tri[t, (e + 2) % 3]
            k += 1
    return k


# ---------------------------------------------------------------------------
# topology operations: collapse / refine (simulate, accept or roll back)
# ---------------------------------------------------------------------------

@njit(cache=True)
def touch_nofold(t, mark, stamp, aff, aff_n):
    if mark[t] == stamp[0]:
        return True
    mark[t] = stamp[0]
    if aff_n[0] >= aff.shape[0]:
        return False
    aff[aff_n[0]] = t
    aff_n[0] += 1
    return True


@njit(cache=True)
def _ring(tri, neigh, v2t, v, star_buf, ring_buf):
    """Ring of neighbour vertices around v, CCW.  Returns count."""
    cnt, closed = star(tri, neigh, v2t, v, star_buf)
    k = 0
    for i in range(cnt):
        t = star_buf[i]
        a = lidx(tri, t, v)
        if k >= ring_buf.shape[0]:
            return -1
        ring_buf[k] = tri[t, (a + 1) % 3]
        k += 1
    if not closed and cnt > 0:
        t = star_buf[cnt - 1]
        a = lidx(tri, t, v)
        if k >= ring_buf.shape[0]:
            return -1
        ring_buf[k] = tri[t, (a + 2) % 3]
        k += 1
    return k


@njit(cache=True)
def try_collapse(pos, wgt, fixed, vdead, tri, neigh, con, v2t, a, b,
                 beta_f, eps_bar, eps_t, q_floor, spacing_trigger,
                 star1, star2, ring1, ring2, sbuf2, cpx, cpy, stack,
                 mark, stamp, aff, aff_n, befores, vmark, vstamp,
                 log_i, log_f, log_n):
    """Merge b into a at the mean of cavity orthocentres.  Returns 1/0."""
    if vdead[a] != 0 or vdead[b] != 0 or fixed[a] != 0 or fixed[b] != 0:
        return 0
    t, e = find_edge(tri, neigh, v2t, a, b, star1)
    if t < 0:
        return 0
    t2 = neigh[t, e]
    if t2 < 0 or con[t, e] != 0:
        return 0
    p = tri[t, e]
    e2 = adj_index(neigh, t2, t)
    q = tri[t2, e2]
    cnt_a, closed_a = star(tri, neigh, v2t, a, star1)
    cnt_b, closed_b = star(tri, neigh, v2t, b, star2)
    if not (closed_a and closed_b) or cnt_a < 3 or cnt_b < 3:
        return 0
    # link condition: ring(a) and ring(b) may share only p and q
    ka = _ring(tri, neigh, v2t, a, star1, ring1)
    kb = _ring(tri, neigh, v2t, b, star2, ring2)
    if ka < 0 or kb < 0:
        return 0
    for i in range(ka):
        x = ring1[i]
        if x == b or x == p or x == q:
            continue
        for jj in range(kb):
            if ring2[jj] == x:
                return 0
    # stars again (ring walk reused the buffers)
    cnt_a, _ = star(tri, neigh, v2t, a, star1)
    cnt_b, _ = star(tri, neigh, v2t, b, star2)
    # affected region = both stars, folded pre-op
    stamp[0] += 1
    aff_n[0] = 0
    befores[0] = 1e300
    befores[1] = 1e300
    for i in range(cnt_a):
        if not touch(pos, wgt, tri, star1[i], mark, stamp, aff, aff_n, befores, beta_f):
            return 0
    for i in range(cnt_b):
        if not touch(pos, wgt, tri, star2[i], mark, stamp, aff, aff_n, befores, beta_f):
            return 0
    # merge target: mean of cavity orthocentres
    sx = 0.0
    sy = 0.0
    nn = 0
    for i in range(aff_n[0]):
        tc = aff[i]
        i0, i1, i2 = tri[tc, 0], tri[tc, 1], tri[tc, 2]
        ox, oy, ok = face_ortho(
            pos[i0, 0], pos[i0, 1], wgt[i0],
            pos[i1, 0], pos[i1, 1], wgt[i1],
            pos[i2, 0], pos[i2, 1], wgt[i2],
        )
        if not ok:
            return 0
        sx += ox
        sy += oy
        nn += 1
    xm = sx / nn
    ym = sy / nn
    q_before = befores[0]
    # simulate
    log_n[0] = 0
    set_pos(pos, a, 0, xm, log_i, log_f, log_n)
    set_pos(pos, a, 1, ym, log_i, log_f, log_n)
    set_wgt(wgt, a, 0.5 * (wgt[a] + wgt[b]), log_i, log_f, log_n)
    for i in range(cnt_b):
        tb = star2[i]
        if tb == t or tb == t2:
            continue
        set_tri(tri, tb, lidx(tri, tb, b), a, log_i, log_f, log_n)
    ok = True
    # stitch across the two dying slots
    for pass_i in range(2):
        tt = t if pass_i == 0 else t2
        apex = p if pass_i == 0 else q
        # tt was skipped by the retargeting loop and still holds original ids
        la = lidx(tri, tt, a)
        lb = lidx(tri, tt, b)
        na = neigh[tt, lb]  # across edge (a, apex)
        ca = con[tt, lb]
        nb = neigh[tt, la]  # across edge (b, apex)
        cb = con[tt, la]
        if na < 0 and nb < 0:
            ok = False
            break
        cm = ca | cb
        if na >= 0:
            k = adj_index(neigh, na, tt)
            set_neigh(neigh, na, k, nb, log_i, log_f, log_n)
            set_con(con, na, k, cm, log_i, log_f, log_n)
        if nb >= 0:
            k = adj_index(neigh, nb, tt)
            set_neigh(neigh, nb, k, na, log_i, log_f, log_n)
            set_con(con, nb, k, cm, log_i, log_f, log_n)
        set_tri(tri, tt, 0, -1, log_i, log_f, log_n)
        hold = na if na >= 0 else nb
        set_v2t(v2t, apex, hold, log_i, log_f, log_n)
    if ok:
        set_vdead(vdead, b, 1, log_i, log_f, log_n)
        set_v2t(v2t, b, -1, log_i, log_f, log_n)
        # repoint a into a surviving triangle
        hold_a = -1
        for i in range(cnt_b):
            tb = star2[i]
            if tb != t and tb != t2:
                hold_a = tb
                break
        if hold_a < 0:
            for i in range(cnt_a):
                ta = star1[i]
                if ta != t and ta != t2:
                    hold_a = ta
                    break
        if hold_a < 0:
            ok = False
        else:
            set_v2t(v2t, a, hold_a, log_i, log_f, log_n)
    if ok:
        for i in range(aff_n[0]):
            tc = aff[i]
            if tri[tc, 0] < 0:
                continue
            i0, i1, i2 = tri[tc, 0], tri[tc, 1], tri[tc, 2]
            if area2(pos[i0, 0], pos[i0, 1], pos[i1, 0], pos[i1, 1],
                     pos[i2, 0], pos[i2, 1]) <= 0.0:
                ok = False
                break
    if ok:
        nf, cok = cascade(pos, wgt, tri, neigh, con, v2t, aff, aff_n[0], stack,
                          mark, stamp, aff, aff_n, befores, beta_f,
                          eps_bar, 400, log_i, log_f, log_n, True)
        ok = cok
    if ok:
        qt_after, qd_after = affected_mins(pos, wgt, tri, aff, aff_n, beta_f)
        good = qt_after >= q_before + eps_t
        if not good and spacing_trigger:
            floor = q_before if q_before < q_floor else q_floor
            good = qt_after >= floor
        ok = good
    if ok:
        ok = cells_positive(pos, wgt, tri, neigh, v2t, fixed, aff, aff_n,
                            vmark, vstamp, sbuf2, cpx, cpy)
    if not ok:
        undo(tri, neigh, con, v2t, pos, wgt, vdead, log_i, log_f, log_n, 0)
        return 0
    return 1


@njit(cache=True)
def try_refine(pos, wgt, fixed, vdead, tri, neigh, con, v2t, a, b,
               nv_n, nt_n, beta_f, eps_bar, eps_t, q_floor, spacing_trigger,
               max_cavity_depth, star1, sbuf2, cpx, cpy, stack,
               mark, stamp, aff, aff_n, befores, vmark, vstamp,
               log_i, log_f, log_n):
    """Insert a vertex at the orthoball centre of the worse triangle on edge
    (a, b), re-fanning a greedily grown cavity.  Returns 1, 0, or -2 when
    vertex/triangle capacity is exhausted (caller grows and retries)."""
    if vdead[a] != 0 or vdead[b] != 0:
        return 0
    t, e = find_edge(tri, neigh, v2t, a, b, star1)
    if t < 0:
        return 0
    t2 = neigh[t, e]
    # pick the lower-quality adjacent triangle (deterministic tie: t)
    qt1 = tri_q_of(pos, tri, t)
    tau = t
    if t2 >= 0 and con[t, e] == 0:
        if tri_q_of(pos, tri, t2) < qt1:
            tau = t2
    elif t2 >= 0 and con[t, e] != 0:
        # constrained interior edge: stay on one side
        if tri_q_of(pos, tri, t2) < qt1:
            tau = t2
        t2 = -1 if tau == t else t2
    i0, i1, i2 = tri[tau, 0], tri[tau, 1], tri[tau, 2]
    cx, cy, r2, okb = orthoball_of(
        pos[i0, 0], pos[i0, 1], wgt[i0],
        pos[i1, 0], pos[i1, 1], wgt[i1],
        pos[i2, 0], pos[i2, 1], wgt[i2],
    )
    if not okb:
        return 0
    # cavity slots
    cav = np.empty(64, dtype=np.int64)
    cavn = 0
    cav[cavn] = t
    cavn += 1
    if t2 >= 0 and con[t, e] == 0:
        cav[cavn] = t2
        cavn += 1
    elif tau != t:
        cav[0] = tau
    # ordered boundary loop: edges (bu -> bv) CCW, outer neighbour, con, owner
    bcap = 96
    bu = np.empty(bcap, dtype=np.int64)
    bv = np.empty(bcap, dtype=np.int64)
    bout = np.empty(bcap, dtype=np.int64)
    bcon = np.empty(bcap, dtype=np.int64)
    bown = np.empty(bcap, dtype=np.int64)
    bn = 0
    for ci in range(cavn):
        c = cav[ci]
        for ce in range(3):
            nb = neigh[c, ce]
            inside = False
            for cj in range(cavn):
                if cav[cj] == nb:
                    inside = True
                    break
            if inside:
                continue
            if bn >= bcap:
                return 0
            bu[bn] = tri[c, (ce + 1) % 3]
            bv[bn] = tri[c, (ce + 2) % 3]
            bout[bn] = nb
            bcon[bn] = con[c, ce]
            bown[bn] = c
            bn += 1
    # chain into a loop
    for i in range(bn - 1):
        want = bv[i]
        for j in range(i + 1, bn):
            if bu[j] == want:
                if j != i + 1:
                    bu[i+1], bu[j] = bu[j], bu[i+1]
                    bv[i+1], bv[j] = bv[j], bv[i+1]
                    bout[i+1], bout[j] = bout[j], bout[i+1]
                    bcon[i+1], bcon[j] = bcon[j], bcon[i+1]
                    bown[i+1], bown[j] = bown[j], bown[i+1]
                break
    if bv[bn - 1] != bu[0]:
        return 0
    # current fan quality
    fan_min = 1e300
    for i in range(bn):
        qf = tri_q(pos[bu[i], 0], pos[bu[i], 1], pos[bv[i], 0], pos[bv[i], 1], cx, cy)
        if qf < fan_min:
            fan_min = qf
    # greedy breadth-first cavity expansion
    for _depth in range(max_cavity_depth):
        grew = False
        i = 0
        while i < bn:
            nb = bout[i]
            if nb < 0 or bcon[i] != 0 or tri[nb, 0] < 0 or bn + 1 > bcap or cavn + 1 > 64:
                i += 1
                continue
            already = False
            for cj in range(cavn):
                if cav[cj] == nb:
                    already = True
                    break
            if already:
                i += 1
                continue
            # apex of nb off the shared edge
            lw = -1
            for c in range(3):
                vv = tri[nb, c]
                if vv != bu[i] and vv != bv[i]:
                    lw = c
                    break
            w = tri[nb, lw]
            pinch = False
            for jj in range(bn):
                if bu[jj] == w:
                    pinch = True
                    break
            if pinch:
                i += 1
                continue
            q1 = tri_q(pos[bu[i], 0], pos[bu[i], 1], pos[w, 0], pos[w, 1], cx, cy)
            q2 = tri_q(pos[w, 0], pos[w, 1], pos[bv[i], 0], pos[bv[i], 1], cx, cy)
            # recompute fan min with edge i replaced by the two new edges
            new_min = q1 if q1 < q2 else q2
            for jj in range(bn):
                if jj == i:
                    continue
                qf = tri_q(pos[bu[jj], 0], pos[bu[jj], 1],
                           pos[bv[jj], 0], pos[bv[jj], 1], cx, cy)
                if qf < new_min:
                    new_min = qf
            if new_min <= fan_min:
                i += 1
                continue
            # absorb nb: replace edge i by (bu[i], w) and insert (w, bv[i])
            lu = lidx(tri, nb, bu[i])
            lv = lidx(tri, nb, bv[i])
            n_uw = neigh[nb, lv]
            c_uw = con[nb, lv]
            n_wv = neigh[nb, lu]
            c_wv = con[nb, lu]
            v0 = bv[i]
            for jj in range(bn, i + 1, -1):
                bu[jj] = bu[jj - 1]
                bv[jj] = bv[jj - 1]
                bout[jj] = bout[jj - 1]
                bcon[jj] = bcon[jj - 1]
                bown[jj] = bown[jj - 1]
            bv[i] = w
            bout[i] = n_uw
            bcon[i] = c_uw
            bown[i] = nb
            bu[i + 1] = w
            bv[i + 1] = v0
            bout[i + 1] = n_wv
            bcon[i + 1] = c_wv
            bown[i + 1] = nb
            bn += 1
            cav[cavn] = nb
            cavn += 1
            fan_min = new_min
            grew = True
            i += 2
        if not grew:
            break
    if fan_min <= 0.0:
        return 0
    # capacity
    fresh = bn - cavn
    if nv_n[0] + 1 > pos.shape[0] or nt_n[0] + fresh > tri.shape[0]:
        return -2
    # fold pre-op cavity
    stamp[0] += 1
    aff_n[0] = 0
    befores[0] = 1e300
    befores[1] = 1e300
    for ci in range(cavn):
        if not touch(pos, wgt, tri, cav[ci], mark, stamp, aff, aff_n, befores, beta_f):
            return 0
    q_before = befores[0]
    # apply
    old_nv = nv_n[0]
    old_nt = nt_n[0]
    np_v = old_nv
    nv_n[0] = old_nv + 1
    pos[np_v, 0] = cx
    pos[np_v, 1] = cy
    wgt[np_v] = 0.0
    fixed[np_v] = 0
    vdead[np_v] = 0
    log_n[0] = 0
    slots = np.empty(bn, dtype=np.int64)
    for i in range(bn):
        if i < cavn:
            slots[i] = cav[i]
        else:
            slots[i] = nt_n[0]
            nt_n[0] += 1
    for i in range(bn):
        s = slots[i]
        set_tri(tri, s, 0, bu[i], log_i, log_f, log_n)
        set_tri(tri, s, 1, bv[i], log_i, log_f, log_n)
        set_tri(tri, s, 2, np_v, log_i, log_f, log_n)
        set_neigh(neigh, s, 0, slots[(i + 1) % bn], log_i, log_f, log_n)
        set_con(con, s, 0, 0, log_i, log_f, log_n)
        set_neigh(neigh, s, 1, slots[(i - 1) % bn], log_i, log_f, log_n)
        set_con(con, s, 1, 0, log_i, log_f, log_n)
        set_neigh(neigh, s, 2, bout[i], log_i, log_f, log_n)
        set_con(con, s, 2, bcon[i], log_i, log_f, log_n)
    for i in range(bn):
        if bout[i] >= 0:
            k = adj_index(neigh, bout[i], bown[i])
            if k >= 0:
                set_neigh(neigh, bout[i], k, slots[i], log_i, log_f, log_n)
        set_v2t(v2t, bu[i], slots[i], log_i, log_f, log_n)
    v2t[np_v] = slots[0]
    ok = True
    for i in range(bn):
        if not touch_nofold(slots[i], mark, stamp, aff, aff_n):
            ok = False
    if ok:
        nf, cok = cascade(pos, wgt, tri, neigh, con, v2t, slots, bn, stack,
                          mark, stamp, aff, aff_n, befores, beta_f,
                          eps_bar, 400, log_i, log_f, log_n, True)
        ok = cok
    if ok:
        qt_after, qd_after = affected_mins(pos, wgt, tri, aff, aff_n, beta_f)
        good = qt_after >= q_before + eps_t
        if not good and spacing_trigger:
            floor = q_before if q_before < q_floor else q_floor
            good = qt_after >= floor
        ok = good
    if ok:
        ok = cells_positive(pos, wgt, tri, neigh, v2t, fixed, aff, aff_n,
                            vmark, vstamp, sbuf2, cpx, cpy)
    if not ok:
        undo(tri, neigh, con, v2t, pos, wgt, vdead, log_i, log_f, log_n, 0)
        nv_n[0] = old_nv
        nt_n[0] = old_nt
        return 0
    return 1


@njit(cache=True)
def pass_prune(pos, wgt, fixed, vdead, tri, neigh, con, v2t, edges, nedges, start,
               hkind, hconst, hx0, hy0, hcs, hgrid, h_lo,
               beta_f, eps_bar, eps_t, q_floor,
               star1, star2, ring1, ring2, sbuf2, cpx, cpy, stack,
               mark, stamp, aff, aff_n, befores, vmark, vstamp,
               log_i, log_f, log_n):
    """One collapse sweep over an edge snapshot.  Returns ops count."""
    nops = 0
    for i in range(start, nedges):
        a = edges[i, 2]
        b = edges[i, 3]
        if vdead[a] != 0 or vdead[b] != 0:
            continue
        t, e = find_edge(tri, neigh, v2t, a, b, star1)
        if t < 0:
            continue
        ll = math.sqrt((pos[b, 0] - pos[a, 0]) ** 2 + (pos[b, 1] - pos[a, 1]) ** 2)
        he = eval_h(hkind, hconst, hx0, hy0, hcs, hgrid,
                    0.5 * (pos[a, 0] + pos[b, 0]), 0.5 * (pos[a, 1] + pos[b, 1]))
        trig = (ll / he) < h_lo
        log_n[0] = 0
        nops += try_collapse(pos, wgt, fixed, vdead, tri, neigh, con, v2t, a, b,
                             beta_f, eps_bar, eps_t, q_floor, trig,
                             star1, star2, ring1, ring2, sbuf2, cpx, cpy, stack,
                             mark, stamp, aff, aff_n, befores, vmark, vstamp,
                             log_i, log_f, log_n)
    return nops


@njit(cache=True)
def pass_refine(pos, wgt, fixed, vdead, tri, neigh, con, v2t, nv_n, nt_n,
                edges, nedges, start,
                hkind, hconst, hx0, hy0, hcs, hgrid, h_hi,
                beta_f, eps_bar, eps_t, q_floor, max_cavity_depth,
                star1, sbuf2, cpx, cpy, stack,
                mark, stamp, aff, aff_n, befores, vmark, vstamp,
                log_i, log_f, log_n):
    """One refinement sweep.  Returns (ops, resume_index); resume >= 0 means
    capacity was exhausted at that edge and the caller must grow and retry."""
    nops = 0
    for i in range(start, nedges):
        a = edges[i, 2]
        b = edges[i, 3]
        if vdead[a] != 0 or vdead[b] != 0:
            continue
        ll = math.sqrt((pos[b, 0] - pos[a, 0]) ** 2 + (pos[b, 1] - pos[a, 1]) ** 2)
        he = eval_h(hkind, hconst, hx0, hy0, hcs, hgrid,
                    0.5 * (pos[a, 0] + pos[b, 0]), 0.5 * (pos[a, 1] + pos[b, 1]))
        trig = (ll / he) > h_hi
        log_n[0] = 0
        r = try_refine(pos, wgt, fixed, vdead, tri, neigh, con, v2t, a, b,
                       nv_n, nt_n, beta_f, eps_bar, eps_t, q_floor, trig,
                       max_cavity_depth, star1, sbuf2, cpx, cpy, stack,
                       mark, stamp, aff, aff_n, befores, vmark, vstamp,
                       log_i, log_f, log_n)
        if r == -2:
            return nops, i
        nops += r
    return nops, -1


# ---------------------------------------------------------------------------
# construction primitives (plain writes, no rollback)
# ---------------------------------------------------------------------------

LOC_INSIDE = 0
LOC_EDGE = 1
LOC_VERTEX = 2
LOC_BLOCKED = 3
LOC_OUTSIDE = 4
LOC_FAILED = 5


@njit(cache=True)
def locate(pos, tri, neigh, con, qx, qy, t_start, eps, max_steps):
    """Walk towards (qx, qy).  Returns (t, code, e)."""
    t = t_start
    for _ in range(max_steps):
        if tri[t, 0] < 0:
            return t, LOC_FAILED, 0
        for c in range(3):
            v = tri[t, c]
            if (pos[v, 0] - qx) ** 2 + (pos[v, 1] - qy) ** 2 <= eps * eps:
                return t, LOC_VERTEX, c
        d_min = 1e300
        e_min = -1
        on_e = -1
        for e in range(3):
            u = tri[t, (e + 1) % 3]
            v = tri[t, (e + 2) % 3]
            s = area2(pos[u, 0], pos[u, 1], pos[v, 0], pos[v, 1], qx, qy)
            l2 = (pos[v, 0] - pos[u, 0]) ** 2 + (pos[v, 1] - pos[u, 1]) ** 2
            if l2 <= 0.0:
                continue
            d = s / math.sqrt(l2)
            if abs(d) <= eps:
                dot = ((qx - pos[u, 0]) * (pos[v, 0] - pos[u, 0])
                       + (qy - pos[u, 1]) * (pos[v, 1] - pos[u, 1]))
                if -eps * eps <= dot <= l2 + eps * eps:
                    on_e = e
                continue
            if d < d_min:
                d_min = d
                e_min = e
        if e_min >= 0 and d_min < -eps:
            nb = neigh[t, e_min]
            if con[t, e_min] != 0:
                return t, LOC_BLOCKED, e_min
            if nb < 0:
                return t, LOC_OUTSIDE, e_min
            t = nb
            continue
        if on_e >= 0:
            return t, LOC_EDGE, on_e
        return t, LOC_INSIDE, 0
    return t, LOC_FAILED, 0


@njit(cache=True)
def split_tri_at(pos, wgt, tri, neigh, con, v2t, t, p,
                 nt_n, stack, mark, stamp, aff, aff_n, befores,
                 log_i, log_f, log_n, eps_bar):
    """3-split of t at interior vertex p, then restore regularity."""
    if nt_n[0] + 2 > tri.shape[0]:
        return False
    A, B, C = tri[t, 0], tri[t, 1], tri[t, 2]
    nA, cA = neigh[t, 0], con[t, 0]
    nB, cB = neigh[t, 1], con[t, 1]
    nC, cC = neigh[t, 2], con[t, 2]
    t1 = nt_n[0]
    t2 = nt_n[0] + 1
    nt_n[0] += 2
    # t = (A, B, P), t1 = (B, C, P), t2 = (C, A, P)
    tri[t, 0], tri[t, 1], tri[t, 2] = A, B, p
    tri[t1, 0], tri[t1, 1], tri[t1, 2] = B, C, p
    tri[t2, 0], tri[t2, 1], tri[t2, 2] = C, A, p
    neigh[t, 0], con[t, 0] = t1, 0
    neigh[t, 1], con[t, 1] = t2, 0
    neigh[t, 2], con[t, 2] = nC, cC
    neigh[t1, 0], con[t1, 0] = t2, 0
    neigh[t1, 1], con[t1, 1] = t, 0
    neigh[t1, 2], con[t1, 2] = nA, cA
    neigh[t2, 0], con[t2, 0] = t, 0
    neigh[t2, 1], con[t2, 1] = t1, 0
    neigh[t2, 2], con[t2, 2] = nB, cB
    if nA >= 0:
        k = adj_index(neigh, nA, t)
        if k >= 0:
            neigh[nA, k] = t1
    if nB >= 0:
        k = adj_index(neigh, nB, t)
        if k >= 0:
            neigh[nB, k] = t2
    v2t[A] = t
    v2t[B] = t
    v2t[C] = t1
    v2t[p] = t
    stamp[0] += 1
    aff_n[0] = 0
    befores[0] = 1e300
    befores[1] = 1e300
    touch_nofold(t, mark, stamp, aff, aff_n)
    touch_nofold(t1, mark, stamp, aff, aff_n)
    touch_nofold(t2, mark, stamp, aff, aff_n)
    seeds = np.empty(3, dtype=np.int64)
    seeds[0] = t
    seeds[1] = t1
    seeds[2] = t2
    log_n[0] = 0
    nf, ok = cascade(pos, wgt, tri, neigh, con, v2t, seeds, 3, stack,
                     mark, stamp, aff, aff_n, befores, 0.5,
                     eps_bar, 100000, log_i, log_f, log_n, False)
    return ok


@njit(cache=True)
def split_edge_at(pos, wgt, tri, neigh, con, v2t, t, e, p,
                  nt_n, stack, mark, stamp, aff, aff_n, befores,
                  log_i, log_f, log_n, eps_bar):
    """2/4-split of edge (t, e) at vertex p (p lies on the edge), then
    restore regularity.  Constrained flags are inherited by the halves."""
    t2 = neigh[t, e]
    need = 1 if t2 < 0 else 2
    if nt_n[0] + need > tri.shape[0]:
        return False
    cf = con[t, e]
    w1 = tri[t, e]
    u = tri[t, (e + 1) % 3]
    v = tri[t, (e + 2) % 3]
    n_v = neigh[t, (e + 2) % 3]   # across (w1, u)
    c_v = con[t, (e + 2) % 3]
    n_u = neigh[t, (e + 1) % 3]   # across (v, w1)
    c_u = con[t, (e + 1) % 3]
    ta = nt_n[0]
    nt_n[0] += 1
    tb = -1
    w2 = -1
    if t2 >= 0:
        e2 = adj_index(neigh, t2, t)
        w2 = tri[t2, e2]
        n_v2 = neigh[t2, (e2 + 2) % 3]  # across (w2, v)
        c_v2 = con[t2, (e2 + 2) % 3]
        n_u2 = neigh[t2, (e2 + 1) % 3]  # across (u, w2)
        c_u2 = con[t2, (e2 + 1) % 3]
        tb = nt_n[0]
        nt_n[0] += 1
    # t := (w1, u, P), ta := (w1, P, v)
    tri[t, 0], tri[t, 1], tri[t, 2] = w1, u, p
    tri[ta, 0], tri[ta, 1], tri[ta, 2] = w1, p, v
    neigh[t, 0], con[t, 0] = (tb, cf) if t2 >= 0 else (-1, cf)
    neigh[t, 1], con[t, 1] = ta, 0
    neigh[t, 2], con[t, 2] = n_v, c_v
    neigh[ta, 0], con[ta, 0] = (t2, cf) if t2 >= 0 else (-1, cf)
    neigh[ta, 1], con[ta, 1] = n_u, c_u
    neigh[ta, 2], con[ta, 2] = t, 0
    if n_u >= 0:
        k = adj_index(neigh, n_u, t)
        if k >= 0:
            neigh[n_u, k] = ta
    v2t[w1] = t
    v2t[u] = t
    v2t[v] = ta
    v2t[p] = t
    if t2 >= 0:
        # t2 := (w2, v, P), tb := (w2, P, u)
        tri[t2, 0], tri[t2, 1], tri[t2, 2] = w2, v, p
        tri[tb, 0], tri[tb, 1], tri[tb, 2] = w2, p, u
        neigh[t2, 0], con[t2, 0] = ta, cf
        neigh[t2, 1], con[t2, 1] = tb, 0
        neigh[t2, 2], con[t2, 2] = n_v2, c_v2
        neigh[tb, 0], con[tb, 0] = t, cf
        neigh[tb, 1], con[tb, 1] = n_u2, c_u2
        neigh[tb, 2], con[tb, 2] = t2, 0
        if n_u2 >= 0:
            k = adj_index(neigh, n_u2, t2)
            if k >= 0:
                neigh[n_u2, k] = tb
        v2t[w2] = t2
    stamp[0] += 1
    aff_n[0] = 0
    befores[0] = 1e300
    befores[1] = 1e300
    nseeds = 2 if t2 < 0 else 4
    seeds = np.empty(4, dtype=np.int64)
    seeds[0] = t
    seeds[1] = ta
    if t2 >= 0:
        seeds[2] = t2
        seeds[3] = tb
    for i in range(nseeds):
        touch_nofold(seeds[i], mark, stamp, aff, aff_n)
    log_n[0] = 0
    nf, ok = cascade(pos, wgt, tri, neigh, con, v2t, seeds, nseeds, stack,
                     mark, stamp, aff, aff_n, befores, 0.5,
                     eps_bar, 100000, log_i, log_f, log_n, False)
    return ok


@njit(cache=True)
def segment_recovery_step(pos, tri, neigh, con, v2t, a, b, sbuf,
                          log_i, log_f, log_n):
    """Advance recovery of segment (a, b) by one flip.

    Returns 1 if the edge already exists, 0 after flipping one crossing
    edge, -1 if no crossing edge is currently flippable, -2 when the
    segment crosses a constrained edge (invalid input)."""
    t0, e0 = find_edge(tri, neigh, v2t, a, b, sbuf)
    if t0 >= 0:
        return 1
    # star triangle of a whose opposite edge is crossed by a->b
    cnt, _ = star(tri, neigh, v2t, a, sbuf)
    t = -1
    ax, ay = pos[a, 0], pos[a, 1]
    bx, by = pos[b, 0], pos[b, 1]
    for i in range(cnt):
        tc = sbuf[i]
        la = lidx(tri, tc, a)
        u = tri[tc, (la + 1) % 3]
        v = tri[tc, (la + 2) % 3]
        s1 = area2(ax, ay, pos[u, 0], pos[u, 1], bx, by)
        s2 = area2(ax, ay, pos[v, 0], pos[v, 1], bx, by)
        if s1 <= 0.0 and s2 >= 0.0:
            t = tc
            e = la
            break
    if t < 0:
        return -1
    # walk the crossing sequence until a flippable edge is found
    for _ in range(10000):
        if con[t, e] != 0:
            return -2
        u = tri[t, (e + 1) % 3]
        v = tri[t, (e + 2) % 3]
        t2 = neigh[t, e]
        if t2 < 0:
            return -1
        log_n[0] = 0
        if flip_edge_raw(pos, tri, neigh, con, v2t, t, e, log_i, log_f, log_n):
            return 0
        # move into t2; next crossing edge depends on which side its apex is
        e2 = adj_index(neigh, t2, t)
        w = tri[t2, e2]
        if w == b:
            return -1
        sw = area2(ax, ay, bx, by, pos[w, 0], pos[w, 1])
        lw = lidx(tri, t2, w)
        if sw > 0.0:
            # w left of a->b: cross edge (u, w) = edge of t2 opposite v
            e_next = lidx(tri, t2, v)
        else:
            e_next = lidx(tri, t2, u)
        t = t2
        e = e_next
    return -1
