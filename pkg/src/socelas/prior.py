"""Disparity priors built from filtered support points.

Two structures restrict the dense search:

* grid vectors: for every ``g x g`` cell a bitmask of candidate disparities,
  pooled from support points in the cell (and, by default, the 8 cells
  around it), each contributing ``d - 1, d, d + 1``;
* the plane prior: a Delaunay mesh over the support points, rasterized into
  an image-sized matrix of interpolated disparities.

All geometry runs on integer pixel coordinates with exact integer
predicates, so results do not depend on floating point rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput
from .sparse import as_points

UNCOVERED = -1


# -- grid vectors ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridVectorField:
    grid_size: int
    disparity_range: int
    masks: np.ndarray  # (cells_v, cells_u, D) bool

    def cell_of(self, u: int, v: int) -> tuple[int, int]:
        return v // self.grid_size, u // self.grid_size

    def one_hot(self) -> np.ndarray:
        """Fixed-width encoding: byte ``d // 8``, bit ``d % 8`` set when d is a candidate."""
        return np.packbits(self.masks, axis=-1, bitorder="little")

    def cell_int(self, cv: int, cu: int) -> int:
        return int.from_bytes(self.one_hot()[cv, cu].tobytes(), "little")

    def cell_ints(self) -> list[list[int]]:
        packed = self.one_hot()
        return [[int.from_bytes(cell.tobytes(), "little") for cell in row] for row in packed]

    def pixel_masks(self, rows: slice, width: int) -> np.ndarray:
        """Per-pixel (rows, width, D) view of the cell masks."""
        v = np.arange(rows.start, rows.stop) // self.grid_size
        u = np.arange(width) // self.grid_size
        return self.masks[v[:, None], u[None, :]]

    def __eq__(self, other):
        return (
            isinstance(other, GridVectorField)
            and self.grid_size == other.grid_size
            and np.array_equal(self.masks, other.masks)
        )


def grid_shape(width: int, height: int, grid_size: int) -> tuple[int, int]:
    return -(-height // grid_size), -(-width // grid_size)


def build_grid_vectors(
    points,
    disparity_range: int,
    grid_size: int,
    width: int,
    height: int,
    neighborhood: bool = True,
) -> GridVectorField:
    points = as_points(points)
    cells_v, cells_u = grid_shape(width, height, grid_size)
    masks = np.zeros((cells_v, cells_u, disparity_range), dtype=bool)
    reach = 1 if neighborhood else 0
    for u, v, d in points.tolist():
        cv, cu = v // grid_size, u // grid_size
        lo, hi = max(d - 1, 0), min(d + 1, disparity_range - 1)
        masks[
            max(cv - reach, 0) : min(cv + reach + 1, cells_v),
            max(cu - reach, 0) : min(cu + reach + 1, cells_u),
            lo : hi + 1,
        ] = True
    return GridVectorField(grid_size, disparity_range, masks)


# -- Delaunay ----------------------------------------------------------------------


def orient(a, b, c) -> int:
    """Twice the signed area of (a, b, c); positive for counter-clockwise in (u, v)."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def incircle(a, b, c, p) -> int:
    """Positive iff p lies strictly inside the circumcircle of counter-clockwise (a, b, c)."""
    adx, ady = a[0] - p[0], a[1] - p[1]
    bdx, bdy = b[0] - p[0], b[1] - p[1]
    cdx, cdy = c[0] - p[0], c[1] - p[1]
    return (
        (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
        + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
        + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady)
    )


@dataclass(frozen=True, eq=False)
class Triangulation:
    vertices: np.ndarray  # (N, 3) u, v, d
    triangles: np.ndarray  # (T, 3) vertex indices, counter-clockwise

    def triangle_set(self) -> set[tuple[tuple[int, int], ...]]:
        """Triangles as canonical coordinate triples, for order-independent comparison."""
        out = set()
        for tri in self.triangles.tolist():
            pts = [tuple(self.vertices[i, :2].tolist()) for i in tri]
            k = pts.index(min(pts))
            out.add(tuple(pts[k:] + pts[:k]))
        return out


class _Mesh:
    """Bowyer-Watson state: triangles keyed by id plus a directed-edge index."""

    def __init__(self, coords: list[tuple[int, int]]):
        self.p = coords
        self.tris: dict[int, tuple[int, int, int]] = {}
        self.edge: dict[tuple[int, int], int] = {}
        self._next = 0
        self.last = -1

    def add(self, a: int, b: int, c: int) -> int:
        t = self._next
        self._next += 1
        self.tris[t] = (a, b, c)
        self.edge[(a, b)] = t
        self.edge[(b, c)] = t
        self.edge[(c, a)] = t
        self.last = t
        return t

    def remove(self, t: int) -> None:
        a, b, c = self.tris.pop(t)
        for e in ((a, b), (b, c), (c, a)):
            if self.edge.get(e) == t:
                del self.edge[e]

    def locate(self, q) -> int:
        p = self.p
        t = self.last if self.last in self.tris else next(iter(self.tris))
        for _ in range(4 * len(self.tris) + 16):
            a, b, c = self.tris[t]
            for x, y in ((a, b), (b, c), (c, a)):
                if orient(p[x], p[y], q) < 0:
                    t = self.edge[(y, x)]
                    break
            else:
                return t
        # walk did not converge; fall back to a scan
        for t, (a, b, c) in self.tris.items():
            if orient(p[a], p[b], q) >= 0 and orient(p[b], p[c], q) >= 0 and orient(p[c], p[a], q) >= 0:
                return t
        raise RuntimeError("point outside the enclosing triangle")

    def insert(self, i: int) -> None:
        p = self.p
        q = p[i]
        start = self.locate(q)
        bad = {start}
        seen = {start}
        stack = [start]
        while stack:
            t = stack.pop()
            a, b, c = self.tris[t]
            for x, y in ((a, b), (b, c), (c, a)):
                n = self.edge.get((y, x))
                if n is None or n in seen:
                    continue
                seen.add(n)
                na, nb, nc = self.tris[n]
                if incircle(p[na], p[nb], p[nc], q) > 0:
                    bad.add(n)
                    stack.append(n)
        boundary = []
        for t in bad:
            a, b, c = self.tris[t]
            for x, y in ((a, b), (b, c), (c, a)):
                n = self.edge.get((y, x))
                if n is None or n not in bad:
                    boundary.append((x, y))
        for t in bad:
            self.remove(t)
        for x, y in boundary:
            self.add(x, y, i)


def _insertion_order(xy: np.ndarray, cell: int = 16) -> list[int]:
    """Biased randomized insertion order: random rounds of doubling size, each in snake cell order.

    Raster order makes every insertion carve a long cavity along the
    advancing front; this order keeps cavities small and point-location
    walks short. The seed is fixed, so the order (and with it the choice
    among cocircular configurations) is deterministic.
    """
    n = len(xy)
    r = np.random.default_rng(0).random(n)
    rounds = np.floor(np.log2(np.maximum(r * n, 1))).astype(np.int64)
    row = xy[:, 1] // cell
    col = np.where(row % 2 == 0, xy[:, 0] // cell, -(xy[:, 0] // cell))
    return np.lexsort((xy[:, 0], xy[:, 1], col, row, rounds)).tolist()


def delaunay(points) -> Triangulation:
    """Bowyer-Watson triangulation of the (u, v) positions; d rides along.

    Duplicate positions keep their first occurrence. Insertion order is a
    deterministic function of the point set, which decides ties between
    cocircular configurations.
    """
    points = as_points(points)
    _, first = np.unique(points[:, :2], axis=0, return_index=True)
    points = points[np.sort(first)]
    n = len(points)
    if n < 3:
        raise DegenerateInput(f"need at least 3 distinct points, got {n}")
    coords = [tuple(xy) for xy in points[:, :2].tolist()]
    lo = points[:, :2].min(axis=0).tolist()
    hi = points[:, :2].max(axis=0).tolist()
    cx, cy = (lo[0] + hi[0]) // 2, (lo[1] + hi[1]) // 2
    extent = max(hi[0] - lo[0], hi[1] - lo[1]) + 2
    # far beyond any circumradius of a non-degenerate integer triangle in the box
    big = 16 * extent**3
    coords += [(cx - 3 * big, cy - 3 * big), (cx + 3 * big, cy), (cx, cy + 3 * big)]
    mesh = _Mesh(coords)
    mesh.add(n, n + 1, n + 2)
    for i in _insertion_order(points[:, :2]):
        mesh.insert(i)
    tris = [t for t in mesh.tris.values() if max(t) < n]
    if not tris:
        raise DegenerateInput("all points are collinear")
    return Triangulation(points, np.array(sorted(tris), dtype=np.int64))


def delaunay_violations(tri: Triangulation) -> int:
    """Count (triangle, vertex) pairs with the vertex strictly inside the circumcircle."""
    pts = tri.vertices[:, :2].tolist()
    bad = 0
    for a, b, c in tri.triangles.tolist():
        pa, pb, pc = pts[a], pts[b], pts[c]
        for k, q in enumerate(pts):
            if k in (a, b, c):
                continue
            if incircle(pa, pb, pc, q) > 0:
                bad += 1
    return bad


# -- plane prior ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PlanePriorMatrix:
    prior: np.ndarray  # (h, w) float64, NaN where uncovered
    rounded: np.ndarray  # (h, w) int32, UNCOVERED where uncovered
    covered: np.ndarray  # (h, w) bool

    @property
    def height(self) -> int:
        return self.prior.shape[0]

    @property
    def width(self) -> int:
        return self.prior.shape[1]

    def __eq__(self, other):
        return (
            isinstance(other, PlanePriorMatrix)
            and np.array_equal(self.covered, other.covered)
            and np.array_equal(self.rounded, other.rounded)
            and np.array_equal(self.prior, other.prior, equal_nan=True)
        )


def empty_prior(width: int, height: int) -> PlanePriorMatrix:
    return PlanePriorMatrix(
        np.full((height, width), np.nan),
        np.full((height, width), UNCOVERED, dtype=np.int32),
        np.zeros((height, width), dtype=bool),
    )


def round_half_up(num, den):
    """floor(num / den + 1/2) for integers (or integer arrays) with den > 0."""
    return (2 * num + den) // (2 * den)


def _owned_pixels(tri: Triangulation, width: int, height: int):
    """Every (triangle, pixel) ownership pair, with barycentric numerators.

    Returns ``(k, us, vs, num, area2)`` arrays with ``prior = num / area2``.
    Triangles are processed in groups that share a clipped bounding-box
    shape so each group is one vectorized evaluation.
    """
    verts = tri.vertices.astype(np.int64)
    tris = tri.triangles.astype(np.int64)
    empty = np.zeros(0, dtype=np.int64)
    if len(tris) == 0:
        return empty, empty, empty, empty, empty
    n = len(verts)
    P = verts[tris]  # (T, 3, 3) vertex u, v, d
    area2 = (P[:, 1, 0] - P[:, 0, 0]) * (P[:, 2, 1] - P[:, 0, 1]) - (P[:, 1, 1] - P[:, 0, 1]) * (P[:, 2, 0] - P[:, 0, 0])
    # edge opposite each vertex: (b, c), (c, a), (a, b)
    first = tris[:, [1, 2, 0]]
    second = tris[:, [2, 0, 1]]
    keys = np.sort((tris * n + tris[:, [1, 2, 0]]).ravel())
    reverse = (second * n + first).ravel()
    pos = np.minimum(np.searchsorted(keys, reverse), len(keys) - 1)
    interior = (keys[pos] == reverse).reshape(-1, 3)
    dx = verts[second, 0] - verts[first, 0]
    dy = verts[second, 1] - verts[first, 1]
    inclusive = ~interior | (dy < 0) | ((dy == 0) & (dx > 0))
    # a vertex pixel belongs to the lowest-numbered incident triangle
    owner = np.full(n, len(tris), dtype=np.int64)
    np.minimum.at(owner, tris.ravel(), np.repeat(np.arange(len(tris)), 3))
    owns_vertex = owner[tris] == np.arange(len(tris))[:, None]

    u0 = np.maximum(P[:, :, 0].min(axis=1), 0)
    u1 = np.minimum(P[:, :, 0].max(axis=1), width - 1)
    v0 = np.maximum(P[:, :, 1].min(axis=1), 0)
    v1 = np.minimum(P[:, :, 1].max(axis=1), height - 1)
    live = (area2 > 0) & (u0 <= u1) & (v0 <= v1)
    bw, bh = u1 - u0 + 1, v1 - v0 + 1
    out = [[], [], [], [], []]
    shapes = np.unique(np.stack([bh[live], bw[live]], axis=1), axis=0)
    for sh, sw in shapes.tolist():
        ks = np.flatnonzero(live & (bh == sh) & (bw == sw))
        vv = v0[ks, None, None] + np.arange(sh)[None, :, None]
        uu = u0[ks, None, None] + np.arange(sw)[None, None, :]
        inside = np.ones((len(ks), sh, sw), dtype=bool)
        num = np.zeros((len(ks), sh, sw), dtype=np.int64)
        for e in range(3):
            x0 = verts[first[ks, e], 0][:, None, None]
            y0 = verts[first[ks, e], 1][:, None, None]
            w = dx[ks, e][:, None, None] * (vv - y0) - dy[ks, e][:, None, None] * (uu - x0)
            inc = inclusive[ks, e][:, None, None]
            inside &= np.where(inc, w >= 0, w > 0)
            num += w * P[ks, e, 2][:, None, None]
        for e in range(3):
            vu, vvv = P[ks, e, 0], P[ks, e, 1]
            idx = np.flatnonzero((vu >= u0[ks]) & (vu <= u1[ks]) & (vvv >= v0[ks]) & (vvv <= v1[ks]))
            inside[idx, vvv[idx] - v0[ks[idx]], vu[idx] - u0[ks[idx]]] = owns_vertex[ks[idx], e]
        t, r, c = np.nonzero(inside)
        out[0].append(ks[t])
        out[1].append(uu[t, 0, c])
        out[2].append(vv[t, r, 0])
        out[3].append(num[t, r, c])
        out[4].append(area2[ks[t]])
    if not out[0]:
        return empty, empty, empty, empty, empty
    return tuple(np.concatenate(x) for x in out)


def rasterize_prior(tri: Triangulation, width: int, height: int) -> PlanePriorMatrix:
    """Barycentric interpolation of vertex disparities over every covered pixel.

    Edge pixels belong to exactly one triangle: interior edges follow a fixed
    top-left ownership rule, hull edges are always included, and a vertex
    pixel goes to the lowest-numbered triangle around it.
    """
    prior = np.full((height, width), np.nan)
    rounded = np.full((height, width), UNCOVERED, dtype=np.int32)
    covered = np.zeros((height, width), dtype=bool)
    _, us, vs, num, area2 = _owned_pixels(tri, width, height)
    prior[vs, us] = num / area2
    rounded[vs, us] = round_half_up(num, area2)
    covered[vs, us] = True
    return PlanePriorMatrix(prior, rounded, covered)


def coverage_count(tri: Triangulation, width: int, height: int) -> np.ndarray:
    """How many triangles claim each pixel under the ownership rule."""
    count = np.zeros((height, width), dtype=np.int32)
    _, us, vs, _, _ = _owned_pixels(tri, width, height)
    np.add.at(count, (vs, us), 1)
    return count


# -- combined prior ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PriorField:
    grid: GridVectorField
    plane: PlanePriorMatrix
    triangulation: Triangulation | None = field(default=None)

    @property
    def disparity_range(self) -> int:
        return self.grid.disparity_range

    def __eq__(self, other):
        return isinstance(other, PriorField) and self.grid == other.grid and self.plane == other.plane


def candidate_set(u: int, v: int, grid: GridVectorField, plane: PlanePriorMatrix, disparity_range: int) -> int:
    """Candidate disparities for pixel (u, v) as an int bitmask (bit d = candidate d)."""
    mask = grid.cell_int(*grid.cell_of(u, v))
    return _with_plane(mask, int(plane.rounded[v, u]), disparity_range)


def _with_plane(mask: int, rounded: int, disparity_range: int) -> int:
    full = (1 << disparity_range) - 1
    if rounded != UNCOVERED:
        lo, hi = max(rounded - 1, 0), min(rounded + 1, disparity_range - 1)
        if lo <= hi:
            mask |= ((1 << (hi - lo + 1)) - 1) << lo
    return mask if mask else full


class CandidateProvider:
    """Candidate bitmasks as consumed by the streaming dense stage.

    Reads only the two fixed-size buffers handed over from the sequential
    stages: the one-hot grid vectors and the rounded prior matrix.
    """

    def __init__(self, onehot: np.ndarray, grid_size: int, rounded: np.ndarray, disparity_range: int):
        self.grid_size = grid_size
        self.rounded = rounded
        self.D = disparity_range
        self.cells = [[int.from_bytes(cell.tobytes(), "little") for cell in row] for row in onehot]

    @classmethod
    def from_prior(cls, prior: PriorField) -> "CandidateProvider":
        return cls(prior.grid.one_hot(), prior.grid.grid_size, prior.plane.rounded, prior.disparity_range)

    def __call__(self, u: int, v: int) -> int:
        g = self.grid_size
        return _with_plane(self.cells[v // g][u // g], int(self.rounded[v, u]), self.D)


def candidate_rows(prior: PriorField, rows: slice) -> np.ndarray:
    """Vectorized candidate sets, (rows, width, D) bool."""
    D = prior.disparity_range
    width = prior.plane.width
    cand = prior.grid.pixel_masks(rows, width).copy()
    rounded = prior.plane.rounded[rows]
    d = np.arange(D)
    near = (np.abs(d[None, None, :] - rounded[..., None]) <= 1) & (rounded[..., None] != UNCOVERED)
    cand |= near
    empty = ~cand.any(axis=2)
    cand[empty] = True
    return cand


def build_prior(points, disparity_range: int, grid_size: int, width: int, height: int, neighborhood: bool = True):
    """Grid vectors plus plane prior. Falls back to an empty plane prior on degenerate meshes.

    Returns ``(PriorField, degenerate)``.
    """
    grid = build_grid_vectors(points, disparity_range, grid_size, width, height, neighborhood)
    try:
        tri = delaunay(points)
    except DegenerateInput:
        return PriorField(grid, empty_prior(width, height), None), True
    return PriorField(grid, rasterize_prior(tri, width, height), tri), False
