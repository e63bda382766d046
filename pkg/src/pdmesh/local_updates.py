"""Monotone local optimisation of weights and vertex positions.

Every update is simulated in place: the candidate step is applied, local
regularity is restored by flips confined to the affected region, and the
step is kept only when the worst metric over that region strictly improves
(and no interior vertex loses its power cell).  Rejected candidates are
rolled back exactly, so sweeps never decrease the worst-case metric they
optimise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import EmptyStar
from .geom import Point2


@dataclass
class LineSearchConfig:
    max_bisections: int = 5
    eps_improve: float = 0.0     # strict improvement by default

    def __post_init__(self):
        if self.max_bisections < 1:
            raise ValueError("max_bisections must be >= 1")


@dataclass
class SweepOutcome:
    attempted: int
    accepted: int
    worst_before: float
    worst_after: float


def weight_gradient(mesh, i: int, beta_f: float = 0.5):
    """(dQ^D/dw_i of the worst incident triangle, its index), by central
    finite differences with a step scaled to the local edge length."""
    s = mesh.scratch
    cnt, closed = K.star(mesh.tri, mesh.neigh, mesh.v2t, i, s.star1)
    if cnt == 0:
        raise EmptyStar(f"vertex {i} has no incident triangles")
    star1 = s.star1[:cnt].copy()
    lbar = K._mean_incident_edge(mesh.pos, mesh.tri, star1, cnt, closed, i)
    worst = min(star1, key=lambda t: K.dual_q_of(mesh.pos, mesh.wgt, mesh.tri,
                                                 int(t), beta_f))
    g = K.grad_qd_w_fd(mesh.pos, mesh.wgt, mesh.tri, int(worst), i, beta_f,
                       K.FD_REL * lbar * lbar)
    return float(g), int(worst)


def weight_gradient_analytic(mesh, t: int, i: int, beta_f: float = 0.5) -> float:
    """Closed-form dQ^D(t)/dw_i (same interface as the FD reference)."""
    return float(K.grad_qd_w_analytic(mesh.pos, mesh.wgt, mesh.tri, t, i, beta_f))


def tri_quality_gradient(mesh, t: int, i: int):
    """Central-difference dQ^T(t)/dx_i."""
    s = mesh.scratch
    cnt, closed = K.star(mesh.tri, mesh.neigh, mesh.v2t, i, s.star1)
    if cnt == 0:
        raise EmptyStar(f"vertex {i} has no incident triangles")
    lbar = K._mean_incident_edge(mesh.pos, mesh.tri, s.star1[:cnt], cnt, closed, i)
    return K.grad_qt_x_fd(mesh.pos, mesh.tri, t, i, K.FD_REL * lbar)


def tri_quality_gradient_analytic(mesh, t: int, i: int):
    return K.grad_qt_x_analytic(mesh.pos, mesh.tri, t, i)


def owt_target(mesh, h, i: int) -> Point2:
    """Spacing-weighted mean of the incident face orthocentres."""
    s = mesh.scratch
    cnt, _ = K.star(mesh.tri, mesh.neigh, mesh.v2t, i, s.star1)
    if cnt == 0:
        raise EmptyStar(f"vertex {i} has no incident triangles")
    hk = h.kernel_params()
    tx, ty, ok = K.owt_target_of(mesh.pos, mesh.wgt, mesh.tri, s.star1, cnt, i,
                                 hk[0], hk[1], hk[2], hk[3], hk[4], hk[5])
    if not ok:
        raise EmptyStar(f"OWT target undefined at vertex {i} (degenerate star)")
    return Point2(tx, ty)


def update_vertex(mesh, h, i: int, cfg: LineSearchConfig = LineSearchConfig(),
                  beta_f: float = 0.5) -> bool:
    """One OWT-first, ascent-fallback position update.  Fixed vertices are
    skipped; returns True when a step was accepted."""
    s = mesh.scratch
    hk = h.kernel_params()
    s.log_n[0] = 0
    acc = K.update_vertex(mesh.pos, mesh.wgt, mesh.fixed, mesh.vdead, mesh.tri,
                          mesh.neigh, mesh.con, mesh.v2t, i,
                          hk[0], hk[1], hk[2], hk[3], hk[4], hk[5],
                          beta_f, cfg.eps_improve, cfg.max_bisections,
                          K.EPS_BAR_REG,
                          s.star1, s.sbuf2, s.stack, s.mark, s.stamp, s.aff,
                          s.aff_n, s.befores, s.vmark, s.vstamp, s.cpx, s.cpy,
                          s.log_i, s.log_f, s.log_n, True)
    return bool(acc)


def update_weight(mesh, i: int, cfg: LineSearchConfig = LineSearchConfig(),
                  beta_f: float = 0.5, guard_primal: bool = False) -> bool:
    """One Taylor-step weight update with bisection line search."""
    s = mesh.scratch
    s.log_n[0] = 0
    acc = K.update_weight(mesh.pos, mesh.wgt, mesh.fixed, mesh.vdead, mesh.tri,
                          mesh.neigh, mesh.con, mesh.v2t, i,
                          beta_f, cfg.eps_improve, cfg.max_bisections,
                          K.EPS_BAR_REG, 1e-8,
                          s.star1, s.sbuf2, s.stack, s.mark, s.stamp, s.aff,
                          s.aff_n, s.befores, s.vmark, s.vstamp, s.cpx, s.cpy,
                          s.log_i, s.log_f, s.log_n, guard_primal, True)
    return bool(acc)


def vertex_sweep(mesh, h, seed, cfg: LineSearchConfig = LineSearchConfig(),
                 beta_f: float = 0.5) -> SweepOutcome:
    """Randomised Gauss-Seidel pass over all movable vertices."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(int(mesh.nv_n[0])).astype(np.int64)
    s = mesh.scratch
    hk = h.kernel_params()
    _, before, _, _, _, _ = mesh.stats(beta_f)
    att, acc = K.vertex_sweep_kernel(mesh.pos, mesh.wgt, mesh.fixed, mesh.vdead,
                                     mesh.tri, mesh.neigh, mesh.con, mesh.v2t,
                                     perm,
                                     hk[0], hk[1], hk[2], hk[3], hk[4], hk[5],
                                     beta_f, cfg.eps_improve,
                                     cfg.max_bisections, K.EPS_BAR_REG,
                                     s.star1, s.sbuf2, s.stack, s.mark, s.stamp,
                                     s.aff, s.aff_n, s.befores, s.vmark,
                                     s.vstamp, s.cpx, s.cpy,
                                     s.log_i, s.log_f, s.log_n, True)
    _, after, _, _, _, _ = mesh.stats(beta_f)
    return SweepOutcome(int(att), int(acc), float(before), float(after))


def weight_sweep(mesh, seed, cfg: LineSearchConfig = LineSearchConfig(),
                 beta_f: float = 0.5, guard_primal: bool = False) -> SweepOutcome:
    """Randomised Gauss-Seidel pass over all vertex weights."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(int(mesh.nv_n[0])).astype(np.int64)
    s = mesh.scratch
    _, _, _, before, _, _ = mesh.stats(beta_f)
    att, acc = K.weight_sweep_kernel(mesh.pos, mesh.wgt, mesh.fixed, mesh.vdead,
                                     mesh.tri, mesh.neigh, mesh.con, mesh.v2t,
                                     perm, beta_f, cfg.eps_improve,
                                     cfg.max_bisections, K.EPS_BAR_REG, 1e-8,
                                     s.star1, s.sbuf2, s.stack, s.mark, s.stamp,
                                     s.aff, s.aff_n, s.befores, s.vmark,
                                     s.vstamp, s.cpx, s.cpy,
                                     s.log_i, s.log_f, s.log_n,
                                     guard_primal, True)
    _, _, _, after, _, _ = mesh.stats(beta_f)
    return SweepOutcome(int(att), int(acc), float(before), float(after))
