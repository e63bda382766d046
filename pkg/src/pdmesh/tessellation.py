"""Triangulation mesh structure, its power-diagram dual, and queries.

TriMesh stores the weighted triangulation as flat arrays (see _kernels for
the layout) so the optimisation kernels can run on it directly.  Dead
triangle slots and removed vertices are tombstoned during optimisation and
squeezed out by compact().
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import DegenerateFace, EmptyStar, GeometryError

BOUNDARY = -1


class _Scratch:
    """Preallocated work buffers shared by kernel calls on one mesh."""

    def __init__(self, nv_cap, nt_cap):
        self.star1 = np.empty(512, np.int64)
        self.star2 = np.empty(512, np.int64)
        self.ring1 = np.empty(512, np.int64)
        self.ring2 = np.empty(512, np.int64)
        self.sbuf2 = np.empty(512, np.int64)
        self.stack = np.empty(4 * nt_cap + 8192, np.int64)
        self.mark = np.zeros(nt_cap, np.int64)
        self.stamp = np.zeros(1, np.int64)
        self.aff = np.empty(nt_cap + 4096, np.int64)
        self.aff_n = np.zeros(1, np.int64)
        self.befores = np.zeros(2, np.float64)
        self.vmark = np.zeros(nv_cap, np.int64)
        self.vstamp = np.zeros(1, np.int64)
        self.cpx = np.empty(600, np.float64)
        self.cpy = np.empty(600, np.float64)
        self.log_i = np.empty((1 << 17, 4), np.int64)
        self.log_f = np.empty(1 << 17, np.float64)
        self.log_n = np.zeros(1, np.int64)


@dataclass
class Pslg:
    """Planar straight-line graph: boundary loops (outer + holes)."""

    points: np.ndarray                 # (n, 2) float64
    segments: np.ndarray               # (m, 2) int indices, closed loops

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=np.float64)
        self.segments = np.ascontiguousarray(self.segments, dtype=np.int64)

    def validate(self):
        n = len(self.points)
        if n < 3:
            raise GeometryError("need at least 3 points")
        if not np.all(np.isfinite(self.points)):
            raise GeometryError("non-finite point coordinates")
        if len(self.segments) < 3:
            raise GeometryError("need at least 3 segments")
        if self.segments.min() < 0 or self.segments.max() >= n:
            raise GeometryError("segment index out of range")
        # closed loops: every endpoint must appear an even number of times,
        # with each vertex used exactly twice per loop pass
        counts = np.zeros(n, np.int64)
        for a, b in self.segments:
            if a == b:
                raise GeometryError(f"zero-length segment at vertex {a}")
            counts[a] += 1
            counts[b] += 1
        used = counts > 0
        if not np.all(counts[used] == 2):
            raise GeometryError("segments do not form closed loops")
        self._check_crossings()

    def _check_crossings(self):
        p = self.points
        segs = self.segments
        for i in range(len(segs)):
            a1, b1 = segs[i]
            for j in range(i + 1, len(segs)):
                a2, b2 = segs[j]
                if a1 in (a2, b2) or b1 in (a2, b2):
                    continue
                if _segments_cross(p[a1], p[b1], p[a2], p[b2]):
                    raise GeometryError(f"segments {i} and {j} intersect")


def _segments_cross(p1, p2, p3, p4):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


class TriMesh:
    """Weighted regular triangulation with triangle-neighbour adjacency."""

    def __init__(self, pos, wgt, fixed, tri, neigh, con, v2t, vdead=None):
        self.pos = pos
        self.wgt = wgt
        self.fixed = fixed
        self.tri = tri
        self.neigh = neigh
        self.con = con
        self.v2t = v2t
        self.vdead = vdead if vdead is not None else np.zeros(len(pos), np.uint8)
        self.nv_n = np.array([len(pos)], np.int64)
        self.nt_n = np.array([len(tri)], np.int64)
        self._scratch = None

    # -- construction -------------------------------------------------------

    @classmethod
    def from_data(cls, points, triangles, weights=None, fixed=None,
                  constrained=()):
        """Build a mesh from vertex/triangle tables.

        Triangles are reoriented CCW; adjacency is derived.  `constrained`
        is an iterable of vertex-index pairs.
        """
        pos = np.ascontiguousarray(points, dtype=np.float64).copy()
        tri = np.ascontiguousarray(triangles, dtype=np.int32).copy()
        nv = len(pos)
        nt = len(tri)
        if nt and (tri.min() < 0 or tri.max() >= nv):
            raise GeometryError("triangle index out of range")
        wgt = (np.zeros(nv) if weights is None
               else np.ascontiguousarray(weights, dtype=np.float64).copy())
        fx = (np.zeros(nv, np.uint8) if fixed is None
              else np.ascontiguousarray(fixed, dtype=np.uint8).copy())
        for t in range(nt):
            a, b, c = tri[t]
            if K.area2(pos[a, 0], pos[a, 1], pos[b, 0], pos[b, 1],
                       pos[c, 0], pos[c, 1]) < 0.0:
                tri[t, 1], tri[t, 2] = tri[t, 2], tri[t, 1]
        neigh, v2t = _build_adjacency(nv, tri)
        con = np.zeros((nt, 3), np.uint8)
        mesh = cls(pos, wgt, fx, tri, neigh, con, v2t)
        for a, b in constrained:
            mesh.set_constrained(int(a), int(b))
        return mesh

    # -- capacity -----------------------------------------------------------

    @property
    def scratch(self):
        if self._scratch is None:
            self._scratch = _Scratch(len(self.pos), len(self.tri))
        return self._scratch

    def ensure_capacity(self, extra_v, extra_t):
        nv, nt = self.nv_n[0], self.nt_n[0]
        grew = False
        if nv + extra_v > len(self.pos):
            cap = max(2 * len(self.pos), nv + extra_v + 64)
            self.pos = _grow2(self.pos, cap)
            self.wgt = _grow1(self.wgt, cap)
            self.fixed = _grow1(self.fixed, cap)
            self.vdead = _grow1(self.vdead, cap)
            self.v2t = _grow1(self.v2t, cap, fill=-1)
            grew = True
        if nt + extra_t > len(self.tri):
            cap = max(2 * len(self.tri), nt + extra_t + 64)
            self.tri = _grow2(self.tri, cap, fill=-1)
            self.neigh = _grow2(self.neigh, cap, fill=-1)
            self.con = _grow2(self.con, cap)
            grew = True
        if grew:
            self._scratch = None

    # -- sizes and views ----------------------------------------------------

    @property
    def n_vertices(self):
        return int(self.nv_n[0] - self.vdead[: self.nv_n[0]].sum())

    @property
    def n_triangles(self):
        nt = self.nt_n[0]
        return int((self.tri[:nt, 0] >= 0).sum())

    def live_triangles(self):
        nt = self.nt_n[0]
        return np.flatnonzero(self.tri[:nt, 0] >= 0)

    def live_vertices(self):
        nv = self.nv_n[0]
        return np.flatnonzero(self.vdead[:nv] == 0)

    def edges(self):
        """Canonical live edges as an (n, 4) array of (t, e, a, b)."""
        nt = int(self.nt_n[0])
        out = np.empty((3 * max(nt, 1), 4), np.int64)
        k = K.edge_snapshot(self.tri, self.neigh, nt, out)
        if k < 0:
            raise RuntimeError("edge buffer overflow")
        return out[:k]

    def copy(self):
        m = TriMesh(self.pos.copy(), self.wgt.copy(), self.fixed.copy(),
                    self.tri.copy(), self.neigh.copy(), self.con.copy(),
                    self.v2t.copy(), self.vdead.copy())
        m.nv_n[0] = self.nv_n[0]
        m.nt_n[0] = self.nt_n[0]
        return m

    # -- queries ------------------------------------------------------------

    def star(self, i):
        """Indices of the triangles containing vertex i (CCW order)."""
        s = self.scratch
        cnt, _ = K.star(self.tri, self.neigh, self.v2t, i, s.star1)
        if cnt == 0:
            raise EmptyStar(f"vertex {i} has no incident triangles")
        return [int(t) for t in s.star1[:cnt]]

    def find_edge(self, a, b):
        s = self.scratch
        t, e = K.find_edge(self.tri, self.neigh, self.v2t, a, b, s.star1)
        return (int(t), int(e)) if t >= 0 else None

    def is_locally_regular(self, edge):
        """Weighted local criterion of the flip test (tolerance-relaxed)."""
        a, b = edge
        loc = self.find_edge(a, b)
        if loc is None:
            raise ValueError(f"({a}, {b}) is not an edge of the mesh")
        t, e = loc
        if self.neigh[t, e] < 0:
            raise ValueError(f"({a}, {b}) is a boundary edge")
        return not K.flip_violation(self.pos, self.wgt, self.tri, self.neigh,
                                    self.con, t, e, K.EPS_BAR_REG)

    def set_constrained(self, a, b):
        loc = self.find_edge(a, b)
        if loc is None:
            raise GeometryError(f"constrained pair ({a}, {b}) is not an edge")
        t, e = loc
        self.con[t, e] = 1
        t2 = self.neigh[t, e]
        if t2 >= 0:
            self.con[t2, K.adj_index(self.neigh, t2, t)] = 1

    @property
    def constrained(self):
        """Set of constrained edges as (min, max) vertex pairs."""
        out = set()
        for t in self.live_triangles():
            for e in range(3):
                if self.con[t, e]:
                    a = int(self.tri[t, (e + 1) % 3])
                    b = int(self.tri[t, (e + 2) % 3])
                    out.add((min(a, b), max(a, b)))
        return out

    def count_poorly_staggered(self):
        """Triangles whose dual vertex falls outside them."""
        return int(K.mesh_stats(self.pos, self.wgt, self.tri,
                                int(self.nt_n[0]), 0.5)[5])

    def stats(self, beta_f=0.5):
        """(n_live, min_qt, mean_qt, min_qd, mean_qd, n_bad)."""
        return K.mesh_stats(self.pos, self.wgt, self.tri,
                            int(self.nt_n[0]), beta_f)

    # -- dual ---------------------------------------------------------------

    def build_dual(self):
        """Power diagram dual clipped to the domain boundary."""
        live = self.live_triangles()
        nt = int(self.nt_n[0])
        dv = np.full((nt, 2), np.nan)
        for t in live:
            a, b, c = self.tri[t]
            ox, oy, ok = K.face_ortho(
                self.pos[a, 0], self.pos[a, 1], self.wgt[a],
                self.pos[b, 0], self.pos[b, 1], self.wgt[b],
                self.pos[c, 0], self.pos[c, 1], self.wgt[c])
            if not ok:
                raise DegenerateFace(f"triangle {t} is degenerate")
            dv[t, 0] = ox
            dv[t, 1] = oy
        snap = self.edges()
        interior = snap[self.neigh[snap[:, 0], snap[:, 1]] >= 0]
        dual_edges = np.empty((len(interior), 4), np.int64)
        dual_edges[:, 0] = interior[:, 2]
        dual_edges[:, 1] = interior[:, 3]
        dual_edges[:, 2] = interior[:, 0]
        dual_edges[:, 3] = self.neigh[interior[:, 0], interior[:, 1]]
        cells = {}
        areas = np.full(len(self.pos), np.nan)
        s = self.scratch
        for v in self.live_vertices():
            poly = self._cell_polygon(int(v), dv, s)
            cells[int(v)] = poly
            n = len(poly)
            x, y = poly[:, 0], poly[:, 1]
            areas[v] = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
        return PowerDual(vertices=dv, edges=dual_edges, cells=cells,
                         cell_area=areas, mesh=self)

    def _cell_polygon(self, v, dv, s):
        cnt, closed = K.star(self.tri, self.neigh, self.v2t, v, s.star1)
        if cnt == 0:
            raise EmptyStar(f"vertex {v} has no incident triangles")
        pts = []
        if not closed:
            t = int(s.star1[0])
            a = K.lidx(self.tri, t, v)
            u = self.tri[t, (a + 1) % 3]
            tt, _ = K.edge_ortho_t(self.pos[v, 0], self.pos[v, 1], self.wgt[v],
                                   self.pos[u, 0], self.pos[u, 1], self.wgt[u])
            pts.append(self.pos[v] + tt * (self.pos[u] - self.pos[v]))
        for i in range(cnt):
            pts.append(dv[s.star1[i]])
        if not closed:
            t = int(s.star1[cnt - 1])
            a = K.lidx(self.tri, t, v)
            u = self.tri[t, (a + 2) % 3]
            tt, _ = K.edge_ortho_t(self.pos[v, 0], self.pos[v, 1], self.wgt[v],
                                   self.pos[u, 0], self.pos[u, 1], self.wgt[u])
            pts.append(self.pos[v] + tt * (self.pos[u] - self.pos[v]))
            pts.append(self.pos[v].copy())
        return np.asarray(pts)

    # -- maintenance --------------------------------------------------------

    def compact(self):
        """Squeeze out dead vertices and triangle slots (order-preserving)."""
        nv, nt = int(self.nv_n[0]), int(self.nt_n[0])
        vlive = self.vdead[:nv] == 0
        tlive = self.tri[:nt, 0] >= 0
        vmap = np.full(nv, -1, np.int32)
        vmap[vlive] = np.arange(vlive.sum(), dtype=np.int32)
        tmap = np.full(nt + 1, -1, np.int32)   # tmap[-1] stays -1
        tmap[:nt][tlive] = np.arange(tlive.sum(), dtype=np.int32)
        tri = vmap[self.tri[:nt][tlive]]
        neigh = tmap[self.neigh[:nt][tlive]]
        con = self.con[:nt][tlive].copy()
        pos = self.pos[:nv][vlive].copy()
        wgt = self.wgt[:nv][vlive].copy()
        fixed = self.fixed[:nv][vlive].copy()
        v2t = tmap[self.v2t[:nv][vlive]]
        self.pos, self.wgt, self.fixed = pos, wgt, fixed
        self.tri = np.ascontiguousarray(tri, np.int32)
        self.neigh = np.ascontiguousarray(neigh, np.int32)
        self.con = con
        self.v2t = np.ascontiguousarray(v2t, np.int32)
        self.vdead = np.zeros(len(pos), np.uint8)
        self.nv_n = np.array([len(pos)], np.int64)
        self.nt_n = np.array([len(tri)], np.int64)
        self._scratch = None

    def validate(self):
        """Check structural invariants; raises GeometryError on violation."""
        nv, nt = int(self.nv_n[0]), int(self.nt_n[0])
        for t in self.live_triangles():
            a, b, c = self.tri[t]
            if self.vdead[a] or self.vdead[b] or self.vdead[c]:
                raise GeometryError(f"triangle {t} references a dead vertex")
            if K.area2(self.pos[a, 0], self.pos[a, 1], self.pos[b, 0],
                       self.pos[b, 1], self.pos[c, 0], self.pos[c, 1]) <= 0:
                raise GeometryError(f"triangle {t} is not CCW")
            for e in range(3):
                t2 = self.neigh[t, e]
                if t2 < 0:
                    continue
                if self.tri[t2, 0] < 0:
                    raise GeometryError(f"neighbour of {t} is dead")
                k = K.adj_index(self.neigh, t2, t)
                if k < 0:
                    raise GeometryError(f"asymmetric adjacency {t}/{t2}")
                if self.con[t, e] != self.con[t2, k]:
                    raise GeometryError(f"constraint flag mismatch {t}/{t2}")
                u = {int(self.tri[t, (e + 1) % 3]), int(self.tri[t, (e + 2) % 3])}
                u2 = {int(self.tri[t2, (k + 1) % 3]), int(self.tri[t2, (k + 2) % 3])}
                if u != u2:
                    raise GeometryError(f"shared edge mismatch {t}/{t2}")
        for v in self.live_vertices():
            t = self.v2t[v]
            if t >= 0:
                if self.tri[t, 0] < 0 or K.lidx(self.tri, t, v) < 0:
                    raise GeometryError(f"stale v2t for vertex {v}")


@dataclass
class PowerDual:
    """Dual power diagram: one vertex per triangle, one cell per vertex."""

    vertices: np.ndarray          # (nt, 2) face orthocentres (NaN for dead)
    edges: np.ndarray             # (ne, 4): primal a, b, triangle t1, t2
    cells: dict                   # vertex id -> (k, 2) polygon
    cell_area: np.ndarray         # per-vertex signed area (NaN for dead)
    mesh: TriMesh = field(repr=False, default=None)

    def orthogonality_error(self):
        """Max |angle - 90 deg| in radians over interior dual edges; dual
        edges shorter than 1e-12 of their primal edge are skipped."""
        worst = 0.0
        pos = self.mesh.pos
        for a, b, t1, t2 in self.edges:
            d = self.vertices[t2] - self.vertices[t1]
            p = pos[b] - pos[a]
            ld = np.hypot(d[0], d[1])
            lp = np.hypot(p[0], p[1])
            if ld <= 1e-12 * lp:
                continue
            cosang = abs(d @ p) / (ld * lp)
            worst = max(worst, abs(np.arcsin(min(1.0, cosang))))
        return worst

    def tiling_error(self):
        """Relative mismatch between the cell-area sum and the mesh area."""
        total = 0.0
        pos = self.mesh.pos
        for t in self.mesh.live_triangles():
            a, b, c = self.mesh.tri[t]
            total += 0.5 * K.area2(pos[a, 0], pos[a, 1], pos[b, 0], pos[b, 1],
                                   pos[c, 0], pos[c, 1])
        cells = np.nansum(self.cell_area)
        return abs(cells - total) / max(abs(total), 1e-300)


def _build_adjacency(nv, tri):
    nt = len(tri)
    neigh = np.full((nt, 3), -1, np.int32)
    v2t = np.full(nv, -1, np.int32)
    if nt == 0:
        return neigh, v2t
    # edge table: (lo, hi, t, e)
    rows = np.empty((3 * nt, 4), np.int64)
    k = 0
    for t in range(nt):
        for e in range(3):
            a = tri[t, (e + 1) % 3]
            b = tri[t, (e + 2) % 3]
            rows[k] = (min(a, b), max(a, b), t, e)
            k += 1
    order = np.lexsort((rows[:, 1], rows[:, 0]))
    rows = rows[order]
    i = 0
    while i < len(rows):
        j = i + 1
        while j < len(rows) and rows[j, 0] == rows[i, 0] and rows[j, 1] == rows[i, 1]:
            j += 1
        if j - i == 2:
            t1, e1 = rows[i, 2], rows[i, 3]
            t2, e2 = rows[i + 1, 2], rows[i + 1, 3]
            neigh[t1, e1] = t2
            neigh[t2, e2] = t1
        elif j - i > 2:
            raise GeometryError("non-manifold edge (more than two triangles)")
        i = j
    for t in range(nt):
        for c in range(3):
            v2t[tri[t, c]] = t
    return neigh, v2t


def _grow1(arr, cap, fill=0):
    out = np.full(cap, fill, dtype=arr.dtype)
    out[: len(arr)] = arr
    return out


def _grow2(arr, cap, fill=0):
    out = np.full((cap, arr.shape[1]), fill, dtype=arr.dtype)
    out[: len(arr)] = arr
    return out


def init_mesh(geom: Pslg, h, seed: int = 0):
    """Conforming constrained Delaunay mesh of the domain, refined until
    the minimum angle reaches 25 degrees and edge lengths track h."""
    from ._refine import build_initial_mesh

    return build_initial_mesh(geom, h, seed)
