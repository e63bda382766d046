"""Coupled outer optimisation loop over vertex, weight, and topology passes.

Each outer iteration runs `inner_sweeps` randomized Gauss-Seidel sweeps
(vertex pass then weight pass, as the mode allows), restores the weighted
triangulation criterion, then applies one collapse pass and one refinement
pass.  The loop stops early once an entire iteration accepts no update.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .local_updates import LineSearchConfig, vertex_sweep, weight_sweep
from .topo_ops import TopoConfig, prune_edges, refine_edges, restore_regularity

MODES = ("coupled", "primal_only", "weights_only")


@dataclass
class ScheduleConfig:
    outer_iters: int = 16
    inner_sweeps: int = 8
    seed: int = 0
    mode: str = "coupled"
    beta_f: float = 0.5
    line_search: LineSearchConfig = field(default_factory=LineSearchConfig)
    topo: TopoConfig = field(default_factory=TopoConfig)
    early_stop: bool = True

    def __post_init__(self):
        if self.outer_iters < 1 or self.inner_sweeps < 1:
            raise ValueError("outer_iters and inner_sweeps must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


TRACE_COLUMNS = ("iteration", "n_triangles", "min_qt", "mean_qt", "min_qd",
                 "mean_qd", "poorly_staggered", "vertex_accepted",
                 "weight_accepted", "topo_accepted")


def optimise(mesh, h, cfg: ScheduleConfig = ScheduleConfig()):
    """Optimise the mesh in place; returns (mesh, trace).

    The trace holds one dict per outer iteration (see TRACE_COLUMNS)."""
    rng = np.random.default_rng(cfg.seed)
    trace = []
    restore_regularity(mesh)
    for n in range(1, cfg.outer_iters + 1):
        acc_v = 0
        acc_w = 0
        for _ in range(cfg.inner_sweeps):
            if cfg.mode != "weights_only":
                out = vertex_sweep(mesh, h, int(rng.integers(2 ** 62)),
                                   cfg.line_search, cfg.beta_f)
                acc_v += out.accepted
            if cfg.mode != "primal_only":
                out = weight_sweep(mesh, int(rng.integers(2 ** 62)),
                                   cfg.line_search, cfg.beta_f,
                                   guard_primal=(cfg.mode == "coupled"))
                acc_w += out.accepted
        restore_regularity(mesh)
        acc_t = 0
        if cfg.mode != "weights_only":
            acc_t += prune_edges(mesh, h, cfg.topo, cfg.beta_f)
            acc_t += refine_edges(mesh, h, cfg.topo, cfg.beta_f)
            mesh.compact()
        n_live, min_qt, mean_qt, min_qd, mean_qd, bad = mesh.stats(cfg.beta_f)
        trace.append({
            "iteration": n,
            "n_triangles": int(n_live),
            "min_qt": float(min_qt),
            "mean_qt": float(mean_qt),
            "min_qd": float(min_qd),
            "mean_qd": float(mean_qd),
            "poorly_staggered": int(bad),
            "vertex_accepted": int(acc_v),
            "weight_accepted": int(acc_w),
            "topo_accepted": int(acc_t),
        })
        if cfg.early_stop and acc_v + acc_w + acc_t == 0:
            break
    return mesh, trace


def write_trace(path, trace):
    with open(path, "w") as f:
        f.write(",".join(TRACE_COLUMNS) + "\n")
        for row in trace:
            f.write(",".join(_fmt(row[c]) for c in TRACE_COLUMNS) + "\n")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)
