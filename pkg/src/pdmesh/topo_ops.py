"""Topology maintenance: flip cascades, edge collapse, edge refinement.

Collapse and refinement follow a simulate-then-accept protocol: the change
(including the flips needed to restore local regularity) is applied, the
worst primal quality over the affected cavity is compared against its
pre-operation value, and the whole thing is rolled back unless it improves
by at least `eps_improve`.  Spacing-triggered operations relax that to a
quality floor so grading can proceed through quality-neutral regions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import InvalidFlip, NonTermination


@dataclass
class TopoConfig:
    eps_improve: float = 1e-8       # quality-improvement threshold
    q_floor: float = 0.6            # floor for spacing-triggered operations
    h_lo: float = 0.5               # collapse when h_r drops below this
    h_hi: float = math.sqrt(2.0)    # refine when h_r exceeds this
    max_cavity_depth: int = 8


@dataclass
class CavitySim:
    """Outcome record of a simulated collapse/refine."""

    affected: list = field(default_factory=list)
    min_qt_before: float = float("inf")
    min_qt_after: float = float("-inf")
    valid: bool = False
    accepted: bool = False


def flip_edge(mesh, edge):
    """Flip an interior, unconstrained edge.  Raises InvalidFlip otherwise."""
    a, b = edge
    loc = mesh.find_edge(a, b)
    if loc is None:
        raise InvalidFlip(f"({a}, {b}) is not an edge of the mesh")
    t, e = loc
    if mesh.neigh[t, e] < 0:
        raise InvalidFlip(f"({a}, {b}) is a boundary edge")
    if mesh.con[t, e]:
        raise InvalidFlip(f"({a}, {b}) is constrained")
    s = mesh.scratch
    s.log_n[0] = 0
    if not K.flip_edge_raw(mesh.pos, mesh.tri, mesh.neigh, mesh.con, mesh.v2t,
                           t, e, s.log_i, s.log_f, s.log_n):
        raise InvalidFlip(f"flipping ({a}, {b}) would invert a triangle")


def restore_regularity(mesh) -> int:
    """Flip cascade until every interior edge satisfies the weighted
    criterion (within tolerance).  Returns the flip count."""
    s = mesh.scratch
    nt = int(mesh.nt_n[0])
    seeds = mesh.live_triangles().astype(np.int64)
    n_edges = len(mesh.edges())
    budget = 10 * max(n_edges, 1)
    s.stamp[0] += 1
    s.aff_n[0] = 0
    s.befores[0] = 1e300
    s.befores[1] = 1e300
    s.log_n[0] = 0
    nflips, ok = K.cascade(mesh.pos, mesh.wgt, mesh.tri, mesh.neigh, mesh.con,
                           mesh.v2t, seeds, len(seeds), s.stack, s.mark,
                           s.stamp, s.aff, s.aff_n, s.befores, 0.5,
                           K.EPS_BAR_REG, budget, s.log_i, s.log_f, s.log_n,
                           False)
    if not ok:
        raise NonTermination(
            f"flip cascade exceeded {budget} flips; tolerance or logic bug")
    return int(nflips)


def _run_collapse(mesh, a, b, cfg, spacing_trigger, beta_f):
    s = mesh.scratch
    s.log_n[0] = 0
    acc = K.try_collapse(mesh.pos, mesh.wgt, mesh.fixed, mesh.vdead, mesh.tri,
                         mesh.neigh, mesh.con, mesh.v2t, int(a), int(b),
                         beta_f, K.EPS_BAR_REG, cfg.eps_improve, cfg.q_floor,
                         spacing_trigger,
                         s.star1, s.star2, s.ring1, s.ring2, s.sbuf2,
                         s.cpx, s.cpy, s.stack,
                         s.mark, s.stamp, s.aff, s.aff_n, s.befores, s.vmark,
                         s.vstamp, s.log_i, s.log_f, s.log_n)
    return bool(acc)


def _run_refine(mesh, a, b, cfg, spacing_trigger, beta_f):
    s = mesh.scratch
    while True:
        s.log_n[0] = 0
        r = K.try_refine(mesh.pos, mesh.wgt, mesh.fixed, mesh.vdead, mesh.tri,
                         mesh.neigh, mesh.con, mesh.v2t, int(a), int(b),
                         mesh.nv_n, mesh.nt_n, beta_f, K.EPS_BAR_REG,
                         cfg.eps_improve, cfg.q_floor, spacing_trigger,
                         cfg.max_cavity_depth, s.star1, s.sbuf2, s.cpx, s.cpy,
                         s.stack, s.mark, s.stamp, s.aff, s.aff_n, s.befores,
                         s.vmark, s.vstamp, s.log_i, s.log_f, s.log_n)
        if r == -2:
            mesh.ensure_capacity(8, 64)
            s = mesh.scratch
            continue
        return bool(r)


def collapse_edge(mesh, edge, cfg: TopoConfig = TopoConfig(),
                  beta_f: float = 0.5) -> bool:
    """Merge the edge endpoints at the mean of the cavity orthocentres.
    Rejection (no strict quality gain, constrained/fixed/boundary edge,
    link-condition failure, inversion) is a normal outcome."""
    a, b = edge
    return _run_collapse(mesh, a, b, cfg, False, beta_f)


def refine_edge(mesh, edge, cfg: TopoConfig = TopoConfig(),
                beta_f: float = 0.5) -> bool:
    """Insert a zero-weight vertex at the orthoball centre of the worse
    adjacent triangle, re-fanning a greedily grown cavity."""
    a, b = edge
    return _run_refine(mesh, a, b, cfg, False, beta_f)


def simulate_collapse(mesh, edge, cfg: TopoConfig = TopoConfig(),
                      beta_f: float = 0.5) -> CavitySim:
    """Collapse trial that never mutates the mesh."""
    a, b = edge
    s = mesh.scratch
    acc = _run_collapse(mesh, a, b, cfg, False, beta_f)
    sim = CavitySim(accepted=acc)
    if acc:
        sim.valid = True
        sim.affected = [int(t) for t in s.aff[: s.aff_n[0]]]
        qt, _ = K.affected_mins(mesh.pos, mesh.wgt, mesh.tri, s.aff, s.aff_n,
                                beta_f)
        sim.min_qt_after = float(qt)
        sim.min_qt_before = float(s.befores[0])
        K.undo(mesh.tri, mesh.neigh, mesh.con, mesh.v2t, mesh.pos, mesh.wgt,
               mesh.vdead, s.log_i, s.log_f, s.log_n, 0)
    return sim


def prune_edges(mesh, h, cfg: TopoConfig = TopoConfig(),
                beta_f: float = 0.5) -> int:
    """Single collapse pass over the current edges.  Every edge is tried
    under the strict improvement rule; edges shorter than h_lo of the
    target spacing also qualify under the quality-floor rule."""
    edges = mesh.edges()
    s = mesh.scratch
    hk = h.kernel_params()
    n = K.pass_prune(mesh.pos, mesh.wgt, mesh.fixed, mesh.vdead, mesh.tri,
                     mesh.neigh, mesh.con, mesh.v2t, edges, len(edges), 0,
                     hk[0], hk[1], hk[2], hk[3], hk[4], hk[5], cfg.h_lo,
                     beta_f, K.EPS_BAR_REG, cfg.eps_improve, cfg.q_floor,
                     s.star1, s.star2, s.ring1, s.ring2, s.sbuf2,
                     s.cpx, s.cpy, s.stack,
                     s.mark, s.stamp, s.aff, s.aff_n, s.befores, s.vmark,
                     s.vstamp, s.log_i, s.log_f, s.log_n)
    restore_regularity(mesh)
    return int(n)


def refine_edges(mesh, h, cfg: TopoConfig = TopoConfig(),
                 beta_f: float = 0.5) -> int:
    """Single refinement pass mirroring prune_edges (h_r above h_hi
    triggers the quality-floor rule)."""
    edges = mesh.edges()
    hk = h.kernel_params()
    total = 0
    start = 0
    while True:
        s = mesh.scratch
        n, resume = K.pass_refine(mesh.pos, mesh.wgt, mesh.fixed, mesh.vdead,
                                  mesh.tri, mesh.neigh, mesh.con, mesh.v2t,
                                  mesh.nv_n, mesh.nt_n, edges, len(edges),
                                  start,
                                  hk[0], hk[1], hk[2], hk[3], hk[4], hk[5],
                                  cfg.h_hi, beta_f, K.EPS_BAR_REG,
                                  cfg.eps_improve, cfg.q_floor,
                                  cfg.max_cavity_depth,
                                  s.star1, s.sbuf2, s.cpx, s.cpy, s.stack,
                                  s.mark, s.stamp,
                                  s.aff, s.aff_n, s.befores, s.vmark, s.vstamp,
                                  s.log_i, s.log_f, s.log_n)
        total += int(n)
        if resume < 0:
            break
        mesh.ensure_capacity(64, 256)
        start = resume
    restore_regularity(mesh)
    return total
