"""Blockage geometry for air-to-ground links in a built-up area.

Each building, seen from a ground observer (a base station antenna or a user
terminal), casts a shadow volume in which a hovering relay has no line of
sight to that observer.  For an axis-aligned cuboid the shadow is a convex
polyhedron: the intersection of halfspaces whose boundary planes pass through
the observer and the silhouette edges of the building (the top edges of the
visible flank faces plus the two outermost vertical edges).  Bottom edges are
ignored; for flight altitudes at or above the tallest roof this loses
nothing, because a segment between two points above roof level can only enter
a building from the side or the top.

Two membership tests are provided and kept deliberately independent:

* ``is_blocked`` / ``blocked_mask``: the halfspace representation used by the
  optimizer (boundary points count as blocked, so the test is conservative),
* ``segment_blocked`` / ``segment_blocked_mask``: exact open-segment versus
  axis-aligned-box intersection, used to evaluate the physical environment
  and to cross-check the polyhedra.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

#: Relative width of the conservative boundary band: points within
#: ``GEO_EPS_FRACTION * max(area extents)`` of a shadow boundary count as
#: blocked, and positioning constraints require at least this clearance.
GEO_EPS_FRACTION = 1e-6

FLANK_FACES = ("+x", "-x", "+y", "-y")


class GeometryError(ValueError):
    """Degenerate geometric construction (zero-area face, observer on a wall, ...)."""


class DegenerateObserverError(GeometryError):
    """Observer inside, or exactly on the boundary of, a building footprint."""


@dataclass(frozen=True)
class AreaBounds:
    """Axis-aligned flight volume [0, x_m] x [0, y_m] x [h_min_m, h_max_m]."""

    x_m: float
    y_m: float
    h_min_m: float
    h_max_m: float = 500.0

    def __post_init__(self):
        if self.x_m <= 0 or self.y_m <= 0:
            raise ValueError("area extents must be positive")
        if not self.h_min_m < self.h_max_m:
            raise ValueError("need h_min_m < h_max_m")

    @property
    def geo_eps(self) -> float:
        return GEO_EPS_FRACTION * max(self.x_m, self.y_m)

    @property
    def lo(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.h_min_m])

    @property
    def hi(self) -> np.ndarray:
        return np.array([self.x_m, self.y_m, self.h_max_m])

    def corners(self) -> np.ndarray:
        lo, hi = self.lo, self.hi
        pick = np.array([[(hi if b & (1 << d) else lo)[d] for d in range(3)]
                         for b in range(8)])
        return pick

    def contains(self, p, tol: float = 0.0) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lo - tol) and np.all(p <= self.hi + tol))


@dataclass(frozen=True)
class Building:
    """Axis-aligned cuboid with its base on the ground plane z = 0."""

    center_xy: tuple[float, float]
    length: float  # extent along x, meters
    width: float   # extent along y, meters
    height: float

    def __post_init__(self):
        if self.length <= 0 or self.width <= 0 or self.height <= 0:
            raise ValueError("building dimensions must be positive")

    @property
    def xmin(self) -> float:
        return self.center_xy[0] - 0.5 * self.length

    @property
    def xmax(self) -> float:
        return self.center_xy[0] + 0.5 * self.length

    @property
    def ymin(self) -> float:
        return self.center_xy[1] - 0.5 * self.width

    @property
    def ymax(self) -> float:
        return self.center_xy[1] + 0.5 * self.width

    @property
    def lo(self) -> np.ndarray:
        return np.array([self.xmin, self.ymin, 0.0])

    @property
    def hi(self) -> np.ndarray:
        return np.array([self.xmax, self.ymax, self.height])

    @property
    def centroid(self) -> np.ndarray:
        return np.array([self.center_xy[0], self.center_xy[1], 0.5 * self.height])

    def footprint_contains(self, p, margin: float = 0.0) -> bool:
        """True if the xy-projection of p lies in the (closed, inflated) footprint."""
        x, y = float(p[0]), float(p[1])
        return (self.xmin - margin <= x <= self.xmax + margin
                and self.ymin - margin <= y <= self.ymax + margin)


@dataclass
class Halfspace:
    """Oriented plane a.x = b with unit outward normal; the shadow is a.x - b <= 0."""

    normal: np.ndarray
    offset: float


@dataclass
class BlockedRegion:
    """Shadow polyhedron of one building for one observer.

    ``observer_id`` is -1 for the base station and the user index otherwise.
    An empty halfspace list denotes the empty set (observer at or above the
    roof, so no hovering position is shaded), not all of space.
    """

    halfspaces: list[Halfspace]
    observer_id: int
    building_id: int
    A: np.ndarray = field(init=False, repr=False)
    b: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.halfspaces:
            self.A = np.array([h.normal for h in self.halfspaces], dtype=float)
            self.b = np.array([h.offset for h in self.halfspaces], dtype=float)
        else:
            self.A = np.zeros((0, 3))
            self.b = np.zeros(0)

    @property
    def n_planes(self) -> int:
        return len(self.halfspaces)

    def margins(self, x) -> np.ndarray:
        """Signed distances a.x - b; the point is shaded iff all are <= 0."""
        return self.A @ np.asarray(x, dtype=float) - self.b

    def contains(self, x, eps: float = 0.0) -> bool:
        if not self.halfspaces:
            return False
        return bool(np.max(self.margins(x)) <= eps)


def _face_centroid(b: Building, face: str) -> np.ndarray:
    cx, cy = b.center_xy
    zmid = 0.5 * b.height
    return {
        "+x": np.array([b.xmax, cy, zmid]),
        "-x": np.array([b.xmin, cy, zmid]),
        "+y": np.array([cx, b.ymax, zmid]),
        "-y": np.array([cx, b.ymin, zmid]),
    }[face]


def _face_normal(face: str) -> np.ndarray:
    return {
        "+x": np.array([1.0, 0.0, 0.0]),
        "-x": np.array([-1.0, 0.0, 0.0]),
        "+y": np.array([0.0, 1.0, 0.0]),
        "-y": np.array([0.0, -1.0, 0.0]),
    }[face]


def _face_top_corners(b: Building, face: str) -> tuple[np.ndarray, np.ndarray]:
    z = b.height
    return {
        "+x": (np.array([b.xmax, b.ymin, z]), np.array([b.xmax, b.ymax, z])),
        "-x": (np.array([b.xmin, b.ymin, z]), np.array([b.xmin, b.ymax, z])),
        "+y": (np.array([b.xmin, b.ymax, z]), np.array([b.xmax, b.ymax, z])),
        "-y": (np.array([b.xmin, b.ymin, z]), np.array([b.xmax, b.ymin, z])),
    }[face]


def visible_faces(building: Building, observer) -> set[str]:
    """Flank faces of the building facing the observer.

    A face is visible iff the inner product of its outward normal with the
    sight vector from the observer to the face centroid is negative.  Ground
    observers outside the footprint see one or two flank faces; an observer
    inside the footprint (or exactly on a wall plane, where no face tests
    strictly visible) is rejected.
    """
    obs = np.asarray(observer, dtype=float)
    if obs[2] < 0:
        raise GeometryError("observer below ground")
    vis = {f for f in FLANK_FACES
           if float(_face_normal(f) @ (_face_centroid(building, f) - obs)) < 0.0}
    if not vis:
        raise DegenerateObserverError(
            f"observer {obs} inside or on the footprint of building at "
            f"{building.center_xy}")
    return vis


def _plane_through(observer: np.ndarray, e1: np.ndarray, e2: np.ndarray,
                   inside_ref: np.ndarray) -> Halfspace:
    """Halfspace bounded by the plane through the observer and edge (e1, e2).

    The normal is oriented away from ``inside_ref``, a point known to lie in
    the shadow, so the shadow satisfies a.x - b <= 0.
    """
    n = np.cross(e1 - observer, e2 - observer)
    norm = np.linalg.norm(n)
    if norm < 1e-12:
        raise GeometryError("degenerate face: observer collinear with edge")
    n = n / norm
    side = float(n @ (inside_ref - observer))
    if abs(side) < 1e-12:
        raise GeometryError("cannot orient shadow plane: reference point on plane")
    if side > 0:
        n = -n
    return Halfspace(normal=n, offset=float(n @ observer))


def blocked_region(building: Building, observer, observer_id: int = -1,
                   building_id: int = 0) -> BlockedRegion:
    """Shadow polyhedron cast by one building for one observer.

    Observers at or above the roof get the empty region (a segment between
    two points at roof height or higher cannot dip into the cuboid).  Below
    the roof the region has one bounding plane per visible-face top edge plus
    two vertical planes through the outermost vertical edges, i.e. three or
    four planes in total.
    """
    obs = np.asarray(observer, dtype=float)
    if obs[2] >= building.height:
        return BlockedRegion([], observer_id, building_id)
    vis = visible_faces(building, obs)
    ref = building.centroid

    planes = [
        _plane_through(obs, *_face_top_corners(building, f), inside_ref=ref)
        for f in sorted(vis)
    ]

    # Outermost vertical edges: corners of visible faces not shared between
    # two visible faces.
    corner_count: dict[tuple[float, float], int] = {}
    for f in vis:
        c1, c2 = _face_top_corners(building, f)
        for c in (c1, c2):
            key = (float(c[0]), float(c[1]))
            corner_count[key] = corner_count.get(key, 0) + 1
    outer = sorted(k for k, cnt in corner_count.items() if cnt == 1)
    if len(outer) != 2:
        raise GeometryError("expected exactly two silhouette corners")
    for cx, cy in outer:
        bottom = np.array([cx, cy, 0.0])
        top = np.array([cx, cy, building.height])
        planes.append(_plane_through(obs, bottom, top, inside_ref=ref))

    return BlockedRegion(planes, observer_id, building_id)


def build_regions(bs, ues, buildings) -> list[BlockedRegion]:
    """All shadow regions for the base station and every user.

    Empty regions (observer at or above the roof) are dropped; they can never
    shade a position.
    """
    regions = []
    observers = [(-1, np.asarray(bs, dtype=float))]
    observers += [(k, np.asarray(u, dtype=float)) for k, u in enumerate(ues)]
    for oid, obs in observers:
        for m, bld in enumerate(buildings):
            reg = blocked_region(bld, obs, observer_id=oid, building_id=m)
            if reg.n_planes:
                regions.append(reg)
    return regions


def is_blocked(x, regions, eps: float = 0.0) -> bool:
    """True iff x lies in (or within eps of) some shadow polyhedron."""
    return any(r.contains(x, eps) for r in regions)


def blocked_mask(points, regions, eps: float = 0.0) -> np.ndarray:
    """Vectorized ``is_blocked`` for an (N, 3) array of points."""
    pts = np.asarray(points, dtype=float)
    out = np.zeros(len(pts), dtype=bool)
    for r in regions:
        if r.n_planes:
            out |= (pts @ r.A.T - r.b <= eps).all(axis=1)
    return out


def segment_blocked_mask(observer, points, buildings) -> np.ndarray:
    """Exact open-segment vs axis-aligned-box test, vectorized over points.

    Entry (i) is True iff the open segment from the observer to points[i]
    passes through the interior of some building.  Grazing contacts (segment
    touching a face, edge or corner) do not count.
    """
    obs = np.asarray(observer, dtype=float)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = pts - obs
    hit = np.zeros(len(pts), dtype=bool)
    for b in buildings:
        lo, hi = b.lo, b.hi
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (lo - obs) / d
            t2 = (hi - obs) / d
        tlo = np.minimum(t1, t2)
        thi = np.maximum(t1, t2)
        parallel = d == 0.0
        inside = (obs >= lo) & (obs <= hi)
        tlo = np.where(parallel, np.where(inside, -np.inf, np.inf), tlo)
        thi = np.where(parallel, np.where(inside, np.inf, -np.inf), thi)
        enter = tlo.max(axis=1)
        leave = thi.min(axis=1)
        hit |= (enter < leave) & (leave > 0.0) & (enter < 1.0)
    return hit


def segment_blocked(p, q, buildings) -> bool:
    """True iff the open segment p -> q intersects some building's interior."""
    return bool(segment_blocked_mask(p, np.asarray(q, dtype=float)[None, :],
                                     buildings)[0])


def _box_halfspaces(bounds: AreaBounds) -> tuple[np.ndarray, np.ndarray]:
    eye = np.eye(3)
    A = np.vstack([eye, -eye])
    b = np.concatenate([bounds.hi, -bounds.lo])
    return A, b


def region_box_vertices(region: BlockedRegion, bounds: AreaBounds,
                        tol: float = 1e-6) -> np.ndarray:
    """Vertices of the polytope (region intersect flight box), possibly empty.

    Brute-force enumeration of plane triples; fine for the handful of planes
    a shadow region carries.
    """
    A_box, b_box = _box_halfspaces(bounds)
    A = np.vstack([region.A, A_box])
    b = np.concatenate([region.b, b_box])
    n = len(b)
    verts = []
    for i, j, k in combinations(range(n), 3):
        M = A[[i, j, k]]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        v = np.linalg.solve(M, b[[i, j, k]])
        if np.all(A @ v - b <= tol):
            verts.append(v)
    return np.array(verts) if verts else np.zeros((0, 3))


def prune_redundant(regions, bounds: AreaBounds, tol: float = 1e-6) -> list[BlockedRegion]:
    """Drop regions contained in another region within the flight box.

    Containment is certified by checking every vertex of the candidate's
    bounded part against the other polyhedron, so membership of the union is
    unchanged anywhere in the box.  Of two identical regions one copy
    survives.
    """
    verts = [region_box_vertices(r, bounds, tol) for r in regions]
    alive = [True] * len(regions)
    for j in range(len(regions)):
        vj = verts[j]
        for k in range(len(regions)):
            if k == j or not alive[k]:
                continue
            rk = regions[k]
            if not rk.n_planes:
                continue
            if len(vj) == 0 or np.all(vj @ rk.A.T - rk.b <= tol):
                alive[j] = False
                break
    return [r for r, keep in zip(regions, alive) if keep]


def big_m_constant(regions, bounds: AreaBounds) -> float:
    """Deactivation constant for the indicator form of the shadow constraints.

    Five times the worst violation b - a.x any shadow plane can attain over
    the flight box; the maximum of a linear function over a box is evaluated
    cornerwise in closed form.
    """
    worst = 0.0
    lo, hi = bounds.lo, bounds.hi
    for r in regions:
        if not r.n_planes:
            continue
        # min over the box of a.x, per plane
        min_ax = np.where(r.A > 0, r.A * lo, r.A * hi).sum(axis=1)
        worst = max(worst, float(np.max(r.b - min_ax)))
    return max(5.0 * worst, 1.0)


def lowest_clear_altitude(xy, regions, bounds: AreaBounds,
                          step: float = 1.0, eps: float | None = None) -> float:
    """Lowest altitude >= h_min at (x, y) outside every shadow region.

    Ascends from the floor in fixed steps.  Shadow boundaries rise away from
    their buildings, so every column clears at a finite altitude; the search
    may pass the nominal box ceiling (an observer squeezed against a tall
    building throws a shadow far above it) and only a generous hard cap,
    meaning degenerate input, raises.
    """
    eps = bounds.geo_eps if eps is None else eps
    z = bounds.h_min_m
    cap = 20.0 * bounds.h_max_m
    while z <= cap:
        if not is_blocked((xy[0], xy[1], z), regions, eps):
            return z
        z += step
    raise GeometryError(
        f"column at {tuple(xy)} is shaded over the whole altitude range")
