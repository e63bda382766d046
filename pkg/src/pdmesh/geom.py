"""Weighted-geometry kernel: power distances, orthocentres, areas, orthoballs.

All routines are pure functions over plain coordinates.  Orthocentres are
solved in *difference form*: the linear systems are assembled from
coordinate and weight differences only, never from absolute values, which
keeps the computation well conditioned for meshes far from the origin.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from .errors import DegenerateEdge, DegenerateFace

# Squared-length floor below which an edge is considered collapsed.
EPS_LEN2 = 1e-24

# A face is degenerate when |det| < EPS_DET * max row norm^2 of its system.
EPS_DET = 1e-12


class Point2(NamedTuple):
    x: float
    y: float


class WeightedVertex(NamedTuple):
    pos: Point2
    weight: float = 0.0
    fixed: bool = False


class OrthoBall(NamedTuple):
    center: Point2
    radius2: float


def power_distance(p, v) -> float:
    """Power distance ||p - v.pos||^2 - v.weight."""
    dx = p[0] - v.pos[0]
    dy = p[1] - v.pos[1]
    return dx * dx + dy * dy - v.weight


def edge_orthocentre(vi, vj):
    """Point of equal power distance to both endpoints, on the edge line.

    Returns (point, t) where point = vi.pos + t*(vj.pos - vi.pos).  With
    equal weights t = 1/2 (the midpoint).  t outside [0, 1] is legal output;
    callers decide how to interpret it.

    Raises DegenerateEdge when the endpoints coincide.
    """
    dx = vj.pos[0] - vi.pos[0]
    dy = vj.pos[1] - vi.pos[1]
    l2 = dx * dx + dy * dy
    if l2 < EPS_LEN2:
        raise DegenerateEdge(f"edge length^2 {l2} below floor {EPS_LEN2}")
    t = 0.5 * ((vi.weight - vj.weight + l2) / l2)
    return Point2(vi.pos[0] + t * dx, vi.pos[1] + t * dy), t


def face_orthocentre(vi, vj, vk):
    """Point of equal power distance to the three corners.

    Solves the 2x2 difference-form system; with zero weights this is the
    circumcentre.  Raises DegenerateFace for (near-)collinear corners.
    """
    axx = vj.pos[0] - vi.pos[0]
    axy = vj.pos[1] - vi.pos[1]
    ayx = vk.pos[0] - vi.pos[0]
    ayy = vk.pos[1] - vi.pos[1]
    bx = 0.5 * (axx * axx + axy * axy - (vj.weight - vi.weight))
    by = 0.5 * (ayx * ayx + ayy * ayy - (vk.weight - vi.weight))
    det = axx * ayy - axy * ayx
    scale = max(axx * axx + axy * axy, ayx * ayx + ayy * ayy)
    if abs(det) < EPS_DET * scale:
        raise DegenerateFace(f"|det| {abs(det)} below {EPS_DET} * {scale}")
    inv = 1.0 / det
    ox = (bx * ayy - by * axy) * inv
    oy = (axx * by - ayx * bx) * inv
    return Point2(vi.pos[0] + ox, vi.pos[1] + oy)


def orthoball(vi, vj, vk) -> OrthoBall:
    """Orthoball of a triangle: face orthocentre plus signed power radius.

    radius2 = power distance from the centre to any generator; it may be
    negative for strongly weighted configurations.
    """
    c = face_orthocentre(vi, vj, vk)
    return OrthoBall(c, power_distance(c, vi))


def signed_area(a, b, c) -> float:
    """Half cross product; positive for counter-clockwise (a, b, c)."""
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def point_in_triangle(p, a, b, c) -> bool:
    """Closed-triangle containment for a CCW triangle (edges count as inside)."""
    return (
        signed_area(a, b, p) >= 0.0
        and signed_area(b, c, p) >= 0.0
        and signed_area(c, a, p) >= 0.0
    )


def circumradius2(a, b, c) -> float:
    """Squared circumradius of an unweighted triangle."""
    va = WeightedVertex(Point2(*a))
    vb = WeightedVertex(Point2(*b))
    vc = WeightedVertex(Point2(*c))
    return orthoball(va, vb, vc).radius2


def triangle_angles(a, b, c):
    """Interior angles in degrees, in corner order (a, b, c)."""
    la2 = (c[0] - b[0]) ** 2 + (c[1] - b[1]) ** 2
    lb2 = (a[0] - c[0]) ** 2 + (a[1] - c[1]) ** 2
    lc2 = (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2
    la, lb, lc = math.sqrt(la2), math.sqrt(lb2), math.sqrt(lc2)

    def ang(opp2, s1, s2):
        d = (s1 * s1 + s2 * s2 - opp2) / (2.0 * s1 * s2)
        return math.degrees(math.acos(min(1.0, max(-1.0, d))))

    return ang(la2, lb, lc), ang(lb2, lc, la), ang(lc2, la, lb)
