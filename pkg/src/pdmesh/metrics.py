"""Primal/dual quality metrics, defects, and the quality report."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import DegenerateCell
from .spacing import SpacingField


@dataclass
class DualQualityParams:
    """Face/edge weighting of the dual metric; a plain average by default."""

    beta_f: float = 0.5
    beta_e: float = 0.5

    def __post_init__(self):
        if self.beta_f < 0 or self.beta_e < 0:
            raise ValueError("beta coefficients must be non-negative")
        if abs(self.beta_f + self.beta_e - 1.0) > 1e-12:
            raise ValueError("beta_f + beta_e must equal 1")


def tri_quality(mesh, t: int) -> float:
    """Area-length ratio: +1 equilateral, 0 degenerate, negative inverted."""
    return float(K.tri_q_of(mesh.pos, mesh.tri, t))


def dual_quality(mesh, t: int, params: DualQualityParams = DualQualityParams()) -> float:
    """Staggering quality of the dual cell fragments around triangle t."""
    return float(K.dual_q_of(mesh.pos, mesh.wgt, mesh.tri, t, params.beta_f))


def relative_power(mesh, dual, i: int) -> float:
    """Vertex weight over its dual-cell area (scale-free weight diagnostic)."""
    area = dual.cell_area[i]
    if not (area > 0.0):
        raise DegenerateCell(f"dual cell of vertex {i} has area {area}")
    return float(mesh.wgt[i] / area)


def relative_length(mesh, h: SpacingField, e) -> float:
    """Edge length over the target spacing sampled at the edge midpoint."""
    a, b = e
    mid = 0.5 * (mesh.pos[a] + mesh.pos[b])
    return float(np.hypot(*(mesh.pos[b] - mesh.pos[a])) / h.value(mid[0], mid[1]))


@dataclass
class DefectReport:
    """Geometric offsets between the primal and dual complexes."""

    tri_ids: np.ndarray
    delta_f: np.ndarray        # face orthocentre to triangle centroid
    edge_ids: np.ndarray       # (n, 2) vertex pairs
    delta_e: np.ndarray        # edge orthocentre to edge midpoint
    vert_ids: np.ndarray
    gamma_f: np.ndarray        # primal vertex to dual-cell centroid
    int_edge_ids: np.ndarray   # (m, 2) interior edges
    gamma_e: np.ndarray        # dual-edge midpoint to primal edge segment


def defect_report(mesh, dual) -> DefectReport:
    pos, wgt = mesh.pos, mesh.wgt
    live = mesh.live_triangles()
    delta_f = np.empty(len(live))
    for n, t in enumerate(live):
        a, b, c = mesh.tri[t]
        m = (pos[a] + pos[b] + pos[c]) / 3.0
        delta_f[n] = np.hypot(*(dual.vertices[t] - m))
    snap = mesh.edges()
    edge_ids = snap[:, 2:4].copy()
    delta_e = np.empty(len(snap))
    for n, (t, e, a, b) in enumerate(snap):
        tt, _ = K.edge_ortho_t(pos[a, 0], pos[a, 1], wgt[a],
                               pos[b, 0], pos[b, 1], wgt[b])
        delta_e[n] = abs(tt - 0.5) * np.hypot(*(pos[b] - pos[a]))
    verts = mesh.live_vertices()
    gamma_f = np.empty(len(verts))
    for n, v in enumerate(verts):
        poly = dual.cells[int(v)]
        gamma_f[n] = np.hypot(*(_polygon_centroid(poly) - pos[v]))
    gamma_e = np.empty(len(dual.edges))
    for n, (a, b, t1, t2) in enumerate(dual.edges):
        mid = 0.5 * (dual.vertices[t1] + dual.vertices[t2])
        gamma_e[n] = _point_segment_distance(mid, pos[a], pos[b])
    return DefectReport(tri_ids=live, delta_f=delta_f, edge_ids=edge_ids,
                        delta_e=delta_e, vert_ids=verts, gamma_f=gamma_f,
                        int_edge_ids=dual.edges[:, :2].copy(), gamma_e=gamma_e)


def _polygon_centroid(poly):
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = cross.sum() / 2.0
    if abs(a) < 1e-300:
        return poly.mean(axis=0)
    cx = ((x + xn) * cross).sum() / (6.0 * a)
    cy = ((y + yn) * cross).sum() / (6.0 * a)
    return np.array([cx, cy])


def _point_segment_distance(p, a, b):
    d = b - a
    l2 = float(d @ d)
    if l2 <= 0.0:
        return float(np.hypot(*(p - a)))
    t = float((p - a) @ d) / l2
    t = min(1.0, max(0.0, t))
    return float(np.hypot(*(p - (a + t * d))))


@dataclass
class QualityReport:
    """Per-element metrics plus the summary statistics of the result table."""

    tri_ids: np.ndarray
    q_tri: np.ndarray
    q_dual: np.ndarray
    angle_min: np.ndarray
    angle_max: np.ndarray
    edge_ids: np.ndarray
    h_r: np.ndarray
    vert_ids: np.ndarray
    w_r: np.ndarray
    sigma_theta: float
    sigma_h: float
    poorly_staggered: int
    summary: dict = field(default_factory=dict)

    def summary_text(self) -> str:
        s = self.summary
        lines = [
            f"{'triangles':<22}{s['n_triangles']:>12d}",
            f"{'vertices':<22}{s['n_vertices']:>12d}",
            f"{'Q^D min / mean':<22}{s['q_dual_min']:>12.4f}{s['q_dual_mean']:>12.4f}",
            f"{'Q^T min / mean':<22}{s['q_tri_min']:>12.4f}{s['q_tri_mean']:>12.4f}",
            f"{'angle min / max (deg)':<22}{s['angle_min']:>12.3f}{s['angle_max']:>12.3f}",
            f"{'h_r min / mean / max':<22}{s['h_r_min']:>12.4f}{s['h_r_mean']:>12.4f}{s['h_r_max']:>12.4f}",
            f"{'W_r min / max':<22}{s['w_r_min']:>12.4g}{s['w_r_max']:>12.4g}",
            f"{'sigma_theta (deg)':<22}{self.sigma_theta:>12.4f}",
            f"{'sigma_h':<22}{self.sigma_h:>12.4f}",
            f"{'poorly staggered':<22}{self.poorly_staggered:>12d}",
        ]
        return "\n".join(lines)

    def to_csv(self, path):
        with open(path, "w") as f:
            f.write("kind,id,id2,q_tri,q_dual,angle_min,angle_max,h_r,w_r\n")
            for i, t in enumerate(self.tri_ids):
                f.write(f"triangle,{t},,{self.q_tri[i]:.17g},{self.q_dual[i]:.17g},"
                        f"{self.angle_min[i]:.17g},{self.angle_max[i]:.17g},,\n")
            for i, (a, b) in enumerate(self.edge_ids):
                f.write(f"edge,{a},{b},,,,,{self.h_r[i]:.17g},\n")
            for i, v in enumerate(self.vert_ids):
                f.write(f"vertex,{v},,,,,,,{self.w_r[i]:.17g}\n")


def report(mesh, dual, h: SpacingField,
           params: DualQualityParams = DualQualityParams()) -> QualityReport:
    pos = mesh.pos
    live = mesh.live_triangles()
    nt = len(live)
    q_tri = np.empty(nt)
    q_dual = np.empty(nt)
    angles = np.empty((nt, 3))
    bad = 0
    for n, t in enumerate(live):
        a, b, c = mesh.tri[t]
        q_tri[n] = K.tri_q_of(pos, mesh.tri, t)
        q_dual[n] = K.dual_q_of(pos, mesh.wgt, mesh.tri, t, params.beta_f)
        angles[n] = _tri_angles(pos[a], pos[b], pos[c])
        o = dual.vertices[t]
        if not K.point_in_tri(o[0], o[1], pos[a, 0], pos[a, 1],
                              pos[b, 0], pos[b, 1], pos[c, 0], pos[c, 1]):
            bad += 1
    snap = mesh.edges()
    edge_ids = snap[:, 2:4].copy()
    mids = 0.5 * (pos[edge_ids[:, 0]] + pos[edge_ids[:, 1]])
    lens = np.hypot(*(pos[edge_ids[:, 1]] - pos[edge_ids[:, 0]]).T)
    h_r = lens / h.values(mids)
    verts = mesh.live_vertices()
    w_r = np.array([mesh.wgt[v] / dual.cell_area[v] for v in verts])
    allang = angles.ravel()
    sigma_theta = float(np.mean(np.abs(allang - allang.mean()))) if nt else 0.0
    sigma_h = float(np.mean(np.abs(h_r - h_r.mean()))) if len(h_r) else 0.0
    summary = {
        "n_triangles": int(nt),
        "n_vertices": int(len(verts)),
        "q_dual_min": float(q_dual.min()) if nt else 0.0,
        "q_dual_mean": float(q_dual.mean()) if nt else 0.0,
        "q_tri_min": float(q_tri.min()) if nt else 0.0,
        "q_tri_mean": float(q_tri.mean()) if nt else 0.0,
        "angle_min": float(angles.min()) if nt else 0.0,
        "angle_max": float(angles.max()) if nt else 0.0,
        "h_r_min": float(h_r.min()) if len(h_r) else 0.0,
        "h_r_mean": float(h_r.mean()) if len(h_r) else 0.0,
        "h_r_max": float(h_r.max()) if len(h_r) else 0.0,
        "w_r_min": float(w_r.min()) if len(w_r) else 0.0,
        "w_r_max": float(w_r.max()) if len(w_r) else 0.0,
    }
    return QualityReport(
        tri_ids=live, q_tri=q_tri, q_dual=q_dual,
        angle_min=angles.min(axis=1), angle_max=angles.max(axis=1),
        edge_ids=edge_ids, h_r=h_r, vert_ids=verts, w_r=w_r,
        sigma_theta=sigma_theta, sigma_h=sigma_h,
        poorly_staggered=int(bad), summary=summary)


def _tri_angles(a, b, c):
    la = np.hypot(*(c - b))
    lb = np.hypot(*(a - c))
    lc = np.hypot(*(b - a))

    def ang(opp, s1, s2):
        v = (s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2)
        return math.degrees(math.acos(min(1.0, max(-1.0, v))))

    return ang(la, lb, lc), ang(lb, lc, la), ang(lc, la, lb)
