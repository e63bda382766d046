"""Target edge-length fields h(x) and supporting utilities.

A spacing field is evaluated at arbitrary points of the domain; three
variants exist: constant, raster-backed (bilinear), and depth-derived
(wave-speed scaling of a bathymetry raster, gradient-limited onto a
raster).  Raster files use an ESRI-ASCII-style plain-text layout:

    ncols <int>
    nrows <int>
    xllcorner <float>     # x of the first (west-most) grid node
    yllcorner <float>     # y of the first (south-most) grid node
    cellsize <float>
    <nrows lines of ncols values, northernmost row first>

Values are node samples: node (i, j) sits at (xll + j*cs, yll + i*cs) with
i counted from the south edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import Antipodal, MeshFormatError, NoConvergence, OutOfDomain


class SpacingField:
    """Base class; subclasses implement value() and kernel_params()."""

    def value(self, x, y):
        raise NotImplementedError

    def values(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.array([self.value(x, y) for x, y in pts])

    def kernel_params(self):
        """(kind, h_const, x0, y0, cellsize, grid) consumed by the kernels.

        Kernel-side raster evaluation clamps to the covered box instead of
        raising, so transient points slightly outside stay usable."""
        raise NotImplementedError

    def __call__(self, x, y):
        return self.value(x, y)


_DUMMY_GRID = np.zeros((2, 2))


class Constant(SpacingField):
    def __init__(self, h):
        if not (h > 0):
            raise ValueError("spacing must be positive")
        self.h = float(h)

    def value(self, x, y):
        return self.h

    def values(self, pts):
        return np.full(len(pts), self.h)

    def kernel_params(self):
        return 0, self.h, 0.0, 0.0, 1.0, _DUMMY_GRID


class Raster(SpacingField):
    """Bilinear interpolation over a node-registered grid."""

    def __init__(self, values, origin, cellsize):
        self.values_grid = np.ascontiguousarray(values, dtype=np.float64)
        if self.values_grid.ndim != 2 or min(self.values_grid.shape) < 2:
            raise ValueError("raster needs at least a 2x2 grid")
        self.origin = (float(origin[0]), float(origin[1]))
        self.cellsize = float(cellsize)
        if self.cellsize <= 0:
            raise ValueError("cellsize must be positive")

    @property
    def shape(self):
        return self.values_grid.shape

    def _grid_coords(self, x, y):
        return ((x - self.origin[0]) / self.cellsize,
                (y - self.origin[1]) / self.cellsize)

    def value(self, x, y):
        nr, nc = self.values_grid.shape
        gx, gy = self._grid_coords(x, y)
        slack = 1e-9
        if gx < -slack or gy < -slack or gx > nc - 1 + slack or gy > nr - 1 + slack:
            raise OutOfDomain(f"({x}, {y}) outside raster coverage")
        gx = min(max(gx, 0.0), nc - 1 - 1e-12)
        gy = min(max(gy, 0.0), nr - 1 - 1e-12)
        j0, i0 = int(gx), int(gy)
        fx, fy = gx - j0, gy - i0
        g = self.values_grid
        return (g[i0, j0] * (1 - fx) * (1 - fy) + g[i0, j0 + 1] * fx * (1 - fy)
                + g[i0 + 1, j0] * (1 - fx) * fy + g[i0 + 1, j0 + 1] * fx * fy)

    def kernel_params(self):
        return (1, 0.0, self.origin[0], self.origin[1], self.cellsize,
                self.values_grid)


class DepthDerived(Raster):
    """Wave-speed spacing h = clamp(beta * sqrt(g_accel * depth)), evaluated
    on the depth raster, gradient-limited, then interpolated bilinearly."""

    def __init__(self, depth: Raster, beta, g_accel, h_min, h_max,
                 limiter=None):
        if not (0 < h_min <= h_max):
            raise ValueError("need 0 < h_min <= h_max")
        raw = beta * np.sqrt(g_accel * np.maximum(depth.values_grid, 0.0))
        raw = np.clip(raw, h_min, h_max)
        base = Raster(raw, depth.origin, depth.cellsize)
        if limiter is not None:
            base = gradient_limit(base, limiter)
        super().__init__(base.values_grid, depth.origin, depth.cellsize)
        self.beta = float(beta)
        self.g_accel = float(g_accel)
        self.h_min = float(h_min)
        self.h_max = float(h_max)


def eval_spacing(field: SpacingField, p):
    """Spacing at a point; raster variants raise OutOfDomain off-coverage."""
    return field.value(p[0], p[1])


@dataclass
class LimiterConfig:
    g: float = 0.1
    dt: float | None = None      # defaults to 0.4 * cellsize
    tol: float = 1e-8
    max_iters: int = 200_000

    def __post_init__(self):
        if not (self.g > 0):
            raise ValueError("gradient bound must be positive")


def _upwind_gradient(grid, cs):
    """Rouy-Tourin upwind |grad h|: differences toward smaller neighbours."""
    d = np.zeros_like(grid)
    dx = np.zeros_like(grid)
    dx[:, 1:] = grid[:, 1:] - grid[:, :-1]
    back = np.maximum(dx, 0.0)
    fwd = np.zeros_like(grid)
    fwd[:, :-1] = grid[:, :-1] - grid[:, 1:]
    gx = np.maximum(back, np.maximum(fwd, 0.0)) / cs
    dy = np.zeros_like(grid)
    dy[1:, :] = grid[1:, :] - grid[:-1, :]
    back = np.maximum(dy, 0.0)
    fwd = np.zeros_like(grid)
    fwd[:-1, :] = grid[:-1, :] - grid[1:, :]
    gy = np.maximum(back, np.maximum(fwd, 0.0)) / cs
    d = np.sqrt(gx * gx + gy * gy)
    return d


def gradient_limit(raster: Raster, cfg: LimiterConfig) -> Raster:
    """Hamilton-Jacobi relaxation to the steady state of
    dh/dt + |grad h| = min(g, |grad h|); the result satisfies the Lipschitz
    bound |grad h| <= g under the same upwind stencil."""
    cs = raster.cellsize
    dt = 0.4 * cs if cfg.dt is None else cfg.dt
    if dt > 0.5 * cs:
        raise ValueError("limiter time step violates the CFL bound 0.5*cell")
    h = raster.values_grid.copy()
    g = cfg.g
    stop = dt * g * max(cfg.tol, 1e-14)
    for _ in range(cfg.max_iters):
        grad = _upwind_gradient(h, cs)
        step = dt * np.maximum(grad - g, 0.0)
        h -= step
        if step.max() < stop:
            return Raster(h, raster.origin, raster.cellsize)
    raise NoConvergence("gradient limiter did not reach steady state")


def stereographic_project(lon, lat, center_lon, center_lat, radius):
    """Conformal sphere-to-plane projection centred on (center_lon, center_lat).

    Angles in radians.  The centre maps to the origin; a point at angular
    distance theta along the central meridian maps to (0, 2R tan(theta/2)).
    """
    s0, c0 = math.sin(center_lat), math.cos(center_lat)
    s1, c1 = math.sin(lat), math.cos(lat)
    cd = math.cos(lon - center_lon)
    denom = 1.0 + s0 * s1 + c0 * c1 * cd
    if denom < 1e-12:
        raise Antipodal("point is antipodal to the projection centre")
    k = 2.0 * radius / denom
    from .geom import Point2

    return Point2(k * c1 * math.sin(lon - center_lon),
                  k * (c0 * s1 - s0 * c1 * cd))


def read_raster(path) -> Raster:
    header = {}
    values = []
    with open(path) as f:
        lineno = 0
        for raw in f:
            lineno += 1
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(header) < 5:
                if len(parts) != 2:
                    raise MeshFormatError(path, lineno, "expected 'key value' header line")
                key = parts[0].lower()
                if key not in ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize"):
                    raise MeshFormatError(path, lineno, f"unknown header key {parts[0]!r}")
                header[key] = float(parts[1])
            else:
                try:
                    values.extend(float(v) for v in parts)
                except ValueError:
                    raise MeshFormatError(path, lineno, "bad raster value") from None
    if len(header) < 5:
        raise MeshFormatError(path, 0, "incomplete raster header")
    nc = int(header["ncols"])
    nr = int(header["nrows"])
    if len(values) != nr * nc:
        raise MeshFormatError(path, 0, f"expected {nr * nc} values, found {len(values)}")
    grid = np.array(values).reshape(nr, nc)[::-1]  # file stores north row first
    return Raster(grid, (header["xllcorner"], header["yllcorner"]),
                  header["cellsize"])


def write_raster(path, raster: Raster):
    nr, nc = raster.values_grid.shape
    with open(path, "w") as f:
        f.write(f"ncols {nc}\n")
        f.write(f"nrows {nr}\n")
        f.write(f"xllcorner {raster.origin[0]:.17g}\n")
        f.write(f"yllcorner {raster.origin[1]:.17g}\n")
        f.write(f"cellsize {raster.cellsize:.17g}\n")
        for row in raster.values_grid[::-1]:
            f.write(" ".join(f"{v:.17g}" for v in row) + "\n")
