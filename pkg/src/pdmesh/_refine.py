"""Initial mesh construction: constrained Delaunay + refinement.

Pipeline: bulk Delaunay of the input points under a super-triangle,
flip-based recovery of the constrained segments, even-odd trimming of
exterior/hole regions, then Delaunay refinement driven by a minimum-angle
bound and the target spacing field.  Runs at zero weights throughout.
"""

from __future__ import annotations

import collections
import math

import numpy as np

from . import _kernels as K
from .errors import GeometryError, NoConvergence
from .tessellation import TriMesh

MIN_ANGLE_DEG = 25.0
# radius-to-shortest-edge bound equivalent to the angle bound
_B_RATIO = 1.0 / (2.0 * math.sin(math.radians(MIN_ANGLE_DEG)))
# split a triangle when its circumradius exceeds SIZE_FAC * h(centre)
SIZE_FAC = 0.75


def build_initial_mesh(geom, h, seed=0, max_vertices=2_000_000):
    geom.validate()
    pts = geom.points
    n_input = len(pts)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    diam = float(np.hypot(*(hi - lo)))
    if diam <= 0.0:
        raise GeometryError("degenerate input extent")
    eps = 1e-12 * diam
    mesh = _super_mesh(lo, hi, diam, n_input)
    # bulk insertion in seeded random order
    rng = np.random.default_rng(seed)
    order = rng.permutation(n_input)
    hint = 0
    for p in order:
        hint = _insert_point(mesh, float(pts[p, 0]), float(pts[p, 1]), int(p),
                             hint, eps)
    _recover_segments(mesh, geom.segments, eps)
    vmap = _trim_outside(mesh, n_input)
    is_input = np.zeros(len(mesh.pos), bool)
    old = np.flatnonzero(vmap >= 0)
    is_input[vmap[old[old < n_input]]] = True
    _refine(mesh, h, is_input, eps, max_vertices)
    mesh.fixed[:] = 0
    for a, b in mesh.constrained:
        mesh.fixed[a] = 1
        mesh.fixed[b] = 1
    vmap = _compact_with_map(mesh)
    mesh.validate()
    return mesh


def _super_mesh(lo, hi, diam, n_input):
    cx, cy = (lo + hi) / 2.0
    r = 8.0 * diam
    sup = np.array([[cx - 2.0 * r, cy - r], [cx + 2.0 * r, cy - r], [cx, cy + 2.0 * r]])
    cap_v = 2 * n_input + 64
    cap_t = 4 * cap_v + 64
    pos = np.zeros((cap_v, 2))
    pos[n_input:n_input + 3] = sup
    wgt = np.zeros(cap_v)
    fixed = np.zeros(cap_v, np.uint8)
    tri = np.full((cap_t, 3), -1, np.int32)
    neigh = np.full((cap_t, 3), -1, np.int32)
    con = np.zeros((cap_t, 3), np.uint8)
    v2t = np.full(cap_v, -1, np.int32)
    tri[0] = (n_input, n_input + 1, n_input + 2)
    v2t[n_input:n_input + 3] = 0
    mesh = TriMesh(pos, wgt, fixed, tri, neigh, con, v2t)
    mesh.nv_n[0] = n_input + 3
    mesh.nt_n[0] = 1
    return mesh


def _insert_point(mesh, x, y, idx, hint, eps):
    """Insert vertex idx at (x, y); returns a triangle containing it."""
    mesh.ensure_capacity(0, 4)
    s = mesh.scratch
    t, code, e = K.locate(mesh.pos, mesh.tri, mesh.neigh, mesh.con,
                          x, y, hint, eps, 10_000_000)
    if code == K.LOC_VERTEX:
        raise GeometryError(f"duplicate input point near vertex {mesh.tri[t, e]}")
    if code in (K.LOC_OUTSIDE, K.LOC_FAILED):
        raise GeometryError("point location failed during construction")
    mesh.pos[idx] = (x, y)
    mesh.wgt[idx] = 0.0
    mesh.vdead[idx] = 0
    if code == K.LOC_INSIDE:
        ok = K.split_tri_at(mesh.pos, mesh.wgt, mesh.tri, mesh.neigh, mesh.con,
                            mesh.v2t, t, idx, mesh.nt_n, s.stack, s.mark,
                            s.stamp, s.aff, s.aff_n, s.befores,
                            s.log_i, s.log_f, s.log_n, K.EPS_BAR_REG)
    else:
        if code == K.LOC_BLOCKED:
            raise GeometryError("input point lies on a constrained segment")
        ok = K.split_edge_at(mesh.pos, mesh.wgt, mesh.tri, mesh.neigh, mesh.con,
                             mesh.v2t, t, e, idx, mesh.nt_n, s.stack, s.mark,
                             s.stamp, s.aff, s.aff_n, s.befores,
                             s.log_i, s.log_f, s.log_n, K.EPS_BAR_REG)
    if not ok:
        raise GeometryError("flip cascade failed during construction")
    return int(mesh.v2t[idx])


def _recover_segments(mesh, segments, eps):
    s = mesh.scratch
    for a, b in segments:
        a, b = int(a), int(b)
        for _ in range(100_000):
            r = K.segment_recovery_step(mesh.pos, mesh.tri, mesh.neigh,
                                        mesh.con, mesh.v2t, a, b, s.star1,
                                        s.log_i, s.log_f, s.log_n)
            if r == 1:
                break
            if r == -2:
                raise GeometryError(f"segment ({a}, {b}) crosses a constraint")
            if r == -1:
                raise GeometryError(f"cannot recover segment ({a}, {b})")
        else:
            raise GeometryError(f"segment recovery stalled on ({a}, {b})")
        mesh.set_constrained(a, b)


def _trim_outside(mesh, n_input):
    """Even-odd classification from the super-triangle region; removes
    exterior and hole triangles plus the super vertices.  Returns the
    vertex remap of the compaction."""
    nt = int(mesh.nt_n[0])
    parity = np.full(nt, -1, np.int8)
    start = int(mesh.v2t[n_input])  # any triangle on a super vertex
    parity[start] = 0
    queue = collections.deque([start])
    while queue:
        t = queue.popleft()
        for e in range(3):
            t2 = mesh.neigh[t, e]
            if t2 < 0:
                continue
            p = parity[t] ^ (1 if mesh.con[t, e] else 0)
            if parity[t2] < 0:
                parity[t2] = p
                queue.append(t2)
            elif parity[t2] != p:
                raise GeometryError("inconsistent boundary loops (open or crossing)")
    kill = parity != 1
    for t in np.flatnonzero(kill):
        mesh.tri[t, 0] = -1
    # detach dead neighbours
    for t in np.flatnonzero(~kill):
        for e in range(3):
            t2 = mesh.neigh[t, e]
            if t2 >= 0 and kill[t2]:
                mesh.neigh[t, e] = -1
    # rebuild v2t, tombstone unused vertices (e.g. points inside holes)
    mesh.v2t[: mesh.nv_n[0]] = -1
    for t in np.flatnonzero(~kill):
        for c in range(3):
            mesh.v2t[mesh.tri[t, c]] = t
    nv = int(mesh.nv_n[0])
    mesh.vdead[:nv] = (mesh.v2t[:nv] < 0).astype(np.uint8)
    return _compact_with_map(mesh)


def _compact_with_map(mesh):
    nv = int(mesh.nv_n[0])
    vlive = mesh.vdead[:nv] == 0
    vmap = np.full(nv, -1, np.int64)
    vmap[vlive] = np.arange(vlive.sum())
    mesh.compact()
    return vmap


def _refine(mesh, h, is_input, eps, max_vertices):
    hkind, hconst, hx0, hy0, hcs, hgrid = h.kernel_params()

    def h_at(x, y):
        return K.eval_h(hkind, hconst, hx0, hy0, hcs, hgrid, x, y)

    is_input = list(is_input)

    def input_flag(v):
        return v < len(is_input) and is_input[v]

    seg_queue = collections.deque(sorted(mesh.constrained))
    tri_queue = collections.deque(int(t) for t in mesh.live_triangles())

    def seg_alive(a, b):
        loc = mesh.find_edge(a, b)
        if loc is None:
            return None
        t, e = loc
        return (t, e) if mesh.con[t, e] else None

    def needs_split(a, b):
        loc = seg_alive(a, b)
        if loc is None:
            return False
        t, e = loc
        mx = 0.5 * (mesh.pos[a, 0] + mesh.pos[b, 0])
        my = 0.5 * (mesh.pos[a, 1] + mesh.pos[b, 1])
        ll = math.hypot(mesh.pos[b, 0] - mesh.pos[a, 0],
                        mesh.pos[b, 1] - mesh.pos[a, 1])
        if ll > 1.5 * h_at(mx, my):
            return True
        return _encroached_at(t, e, a, b)

    def _encroached_at(t, e, a, b):
        mx = 0.5 * (mesh.pos[a, 0] + mesh.pos[b, 0])
        my = 0.5 * (mesh.pos[a, 1] + mesh.pos[b, 1])
        r2 = 0.25 * ((mesh.pos[b, 0] - mesh.pos[a, 0]) ** 2
                     + (mesh.pos[b, 1] - mesh.pos[a, 1]) ** 2)
        for tt, ee in ((t, e), (mesh.neigh[t, e], -1)):
            if tt < 0:
                continue
            if ee < 0:
                ee = K.adj_index(mesh.neigh, tt, t)
            w = int(mesh.tri[tt, ee])
            d2 = (mesh.pos[w, 0] - mx) ** 2 + (mesh.pos[w, 1] - my) ** 2
            if d2 < r2 * (1.0 - 1e-12):
                return True
        return False

    all_segments = set(mesh.constrained)

    def point_encroaches(x, y):
        """First live segment whose diametral circle contains (x, y)."""
        for a, b in sorted(all_segments):
            if mesh.vdead[a] or mesh.vdead[b]:
                continue
            mx = 0.5 * (mesh.pos[a, 0] + mesh.pos[b, 0])
            my = 0.5 * (mesh.pos[a, 1] + mesh.pos[b, 1])
            r2 = 0.25 * ((mesh.pos[b, 0] - mesh.pos[a, 0]) ** 2
                         + (mesh.pos[b, 1] - mesh.pos[a, 1]) ** 2)
            if (x - mx) ** 2 + (y - my) ** 2 < r2 * (1.0 - 1e-12):
                return (a, b)
        return None

    def split_segment(a, b):
        loc = seg_alive(a, b)
        if loc is None:
            return False
        t, e = loc
        pa = mesh.pos[a]
        pb = mesh.pos[b]
        ll = float(np.hypot(*(pb - pa)))
        ha = min(h_at(pa[0], pa[1]), h_at(pb[0], pb[1]))
        if ll < 1e-6 * ha:
            return False  # refuse pathological shortening
        frac = 0.5
        if input_flag(a) != input_flag(b):
            # concentric-shell rounding away from the input endpoint
            d = 2.0 ** round(math.log2(ll / 2.0))
            d = min(max(d, 0.25 * ll), 0.75 * ll)
            frac = d / ll if input_flag(a) else 1.0 - d / ll
        x = pa[0] + frac * (pb[0] - pa[0])
        y = pa[1] + frac * (pb[1] - pa[1])
        mesh.ensure_capacity(1, 4)
        s = mesh.scratch
        m = int(mesh.nv_n[0])
        mesh.nv_n[0] += 1
        mesh.pos[m] = (x, y)
        mesh.wgt[m] = 0.0
        mesh.vdead[m] = 0
        mesh.fixed[m] = 1
        while len(is_input) < m + 1:
            is_input.append(False)
        loc = mesh.find_edge(a, b)
        t, e = loc
        ok = K.split_edge_at(mesh.pos, mesh.wgt, mesh.tri, mesh.neigh, mesh.con,
                             mesh.v2t, t, e, m, mesh.nt_n, s.stack, s.mark,
                             s.stamp, s.aff, s.aff_n, s.befores,
                             s.log_i, s.log_f, s.log_n, K.EPS_BAR_REG)
        if not ok:
            raise GeometryError("flip cascade failed while splitting a segment")
        all_segments.discard((min(a, b), max(a, b)))
        for u, v in ((a, m), (m, b)):
            key = (min(u, v), max(u, v))
            all_segments.add(key)
            seg_queue.append(key)
        for i in range(int(s.aff_n[0])):
            tri_queue.append(int(s.aff[i]))
        return True

    def tri_bad(t):
        if mesh.tri[t, 0] < 0:
            return None
        a, b, c = (int(v) for v in mesh.tri[t])
        ox, oy, r2, ok = K.orthoball_of(
            mesh.pos[a, 0], mesh.pos[a, 1], 0.0,
            mesh.pos[b, 0], mesh.pos[b, 1], 0.0,
            mesh.pos[c, 0], mesh.pos[c, 1], 0.0)
        if not ok:
            return None
        lmin2 = min(
            (mesh.pos[b, 0] - mesh.pos[a, 0]) ** 2 + (mesh.pos[b, 1] - mesh.pos[a, 1]) ** 2,
            (mesh.pos[c, 0] - mesh.pos[b, 0]) ** 2 + (mesh.pos[c, 1] - mesh.pos[b, 1]) ** 2,
            (mesh.pos[a, 0] - mesh.pos[c, 0]) ** 2 + (mesh.pos[a, 1] - mesh.pos[c, 1]) ** 2)
        if r2 > lmin2 * _B_RATIO * _B_RATIO * (1.0 + 1e-9):
            return ox, oy
        ht = h_at(ox, oy)
        if r2 > (SIZE_FAC * ht) ** 2:
            return ox, oy
        return None

    inserted = 0
    while True:
        while seg_queue:
            a, b = seg_queue.popleft()
            if needs_split(a, b):
                split_segment(a, b)
                inserted += 1
                if mesh.nv_n[0] > max_vertices:
                    raise NoConvergence("refinement exceeded the vertex budget")
        if not tri_queue:
            break
        t = int(tri_queue.popleft())
        if t >= mesh.nt_n[0] or mesh.tri[t, 0] < 0:
            continue
        bad = tri_bad(t)
        if bad is None:
            continue
        cx, cy = bad
        enc = point_encroaches(cx, cy)
        if enc is not None:
            if split_segment(*enc):
                tri_queue.append(t)
                inserted += 1
            continue
        mesh.ensure_capacity(1, 4)
        s = mesh.scratch
        tl, code, e = K.locate(mesh.pos, mesh.tri, mesh.neigh, mesh.con,
                               cx, cy, t, eps, 1_000_000)
        if code == K.LOC_VERTEX:
            continue
        if code == K.LOC_BLOCKED:
            a = int(mesh.tri[tl, (e + 1) % 3])
            b = int(mesh.tri[tl, (e + 2) % 3])
            if split_segment(a, b):
                tri_queue.append(t)
                inserted += 1
            continue
        if code in (K.LOC_OUTSIDE, K.LOC_FAILED):
            continue
        if code == K.LOC_EDGE and mesh.con[tl, e]:
            a = int(mesh.tri[tl, (e + 1) % 3])
            b = int(mesh.tri[tl, (e + 2) % 3])
            if split_segment(a, b):
                tri_queue.append(t)
                inserted += 1
            continue
        p = int(mesh.nv_n[0])
        mesh.nv_n[0] += 1
        mesh.pos[p] = (cx, cy)
        mesh.wgt[p] = 0.0
        mesh.vdead[p] = 0
        mesh.fixed[p] = 0
        while len(is_input) < p + 1:
            is_input.append(False)
        if code == K.LOC_INSIDE:
            ok = K.split_tri_at(mesh.pos, mesh.wgt, mesh.tri, mesh.neigh,
                                mesh.con, mesh.v2t, tl, p, mesh.nt_n, s.stack,
                                s.mark, s.stamp, s.aff, s.aff_n, s.befores,
                                s.log_i, s.log_f, s.log_n, K.EPS_BAR_REG)
        else:
            ok = K.split_edge_at(mesh.pos, mesh.wgt, mesh.tri, mesh.neigh,
                                 mesh.con, mesh.v2t, tl, e, p, mesh.nt_n,
                                 s.stack, s.mark, s.stamp, s.aff, s.aff_n,
                                 s.befores, s.log_i, s.log_f, s.log_n,
                                 K.EPS_BAR_REG)
        if not ok:
            raise GeometryError("flip cascade failed during refinement")
        inserted += 1
        if mesh.nv_n[0] > max_vertices:
            raise NoConvergence("refinement exceeded the vertex budget")
        for i in range(int(s.aff_n[0])):
            tri_queue.append(int(s.aff[i]))
        # re-examine constrained edges of the affected region
        for i in range(int(s.aff_n[0])):
            tt = int(s.aff[i])
            if tt >= mesh.nt_n[0] or mesh.tri[tt, 0] < 0:
                continue
            for ee in range(3):
                if mesh.con[tt, ee]:
                    u = int(mesh.tri[tt, (ee + 1) % 3])
                    v = int(mesh.tri[tt, (ee + 2) % 3])
                    seg_queue.append((min(u, v), max(u, v)))
