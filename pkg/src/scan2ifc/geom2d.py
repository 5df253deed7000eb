"""2D geometric primitives shared by the detection stages.

All coordinates are meters in the horizontal plane. Polygons are stored
without a repeated closing vertex and oriented explicitly where it matters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Vertex-identity tolerance for graph bookkeeping (meters).
COORD_EPS = 1e-9


def _as_xy(p) -> np.ndarray:
    a = np.asarray(p, dtype=float).reshape(2)
    return a


@dataclass
class Polyline2D:
    vertices: np.ndarray
    closed: bool = False

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 2)

    def __len__(self):
        return len(self.vertices)

    def length(self) -> float:
        v = self.vertices
        if len(v) < 2:
            return 0.0
        d = np.linalg.norm(np.diff(v, axis=0), axis=1).sum()
        if self.closed:
            d += float(np.linalg.norm(v[-1] - v[0]))
        return float(d)


@dataclass
class Polygon2D:
    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        if len(v) >= 2 and np.allclose(v[0], v[-1]):
            v = v[:-1]
        if len(v) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        self.vertices = v

    @property
    def signed_area(self) -> float:
        return signed_area(self.vertices)

    @property
    def area(self) -> float:
        return abs(self.signed_area)

    def centroid(self) -> np.ndarray:
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        xs, ys = np.roll(x, -1), np.roll(y, -1)
        cross = x * ys - xs * y
        a = cross.sum() / 2.0
        if abs(a) < 1e-12:
            return v.mean(axis=0)
        cx = ((x + xs) * cross).sum() / (6.0 * a)
        cy = ((y + ys) * cross).sum() / (6.0 * a)
        return np.array([cx, cy])

    def contains(self, pts) -> np.ndarray:
        """Vectorized even-odd test; boundary points count as inside."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        v = self.vertices
        n = len(v)
        inside = np.zeros(len(pts), dtype=bool)
        x, y = pts[:, 0], pts[:, 1]
        on_edge = np.zeros(len(pts), dtype=bool)
        for i in range(n):
            x1, y1 = v[i]
            x2, y2 = v[(i + 1) % n]
            cond = (y1 > y) != (y2 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xin = (x2 - x1) * (y - y1) / (y2 - y1) + x1
            inside ^= cond & (x < xin)
            # boundary test against the segment
            dx, dy = x2 - x1, y2 - y1
            ll = dx * dx + dy * dy
            if ll > 0:
                t = np.clip(((x - x1) * dx + (y - y1) * dy) / ll, 0.0, 1.0)
                d2 = (x1 + t * dx - x) ** 2 + (y1 + t * dy - y) ** 2
                on_edge |= d2 <= COORD_EPS**2
        return inside | on_edge

    def is_simple(self) -> bool:
        """True when no two non-adjacent edges intersect."""
        v = self.vertices
        n = len(v)
        for i in range(n):
            a1, a2 = v[i], v[(i + 1) % n]
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue
                b1, b2 = v[j], v[(j + 1) % n]
                if segments_intersect(a1, a2, b1, b2):
                    return False
        return True


@dataclass
class Segment2D:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.a = _as_xy(self.a)
        self.b = _as_xy(self.b)
        if self.length <= 0:
            raise ValueError("zero-length segment")

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.b - self.a))

    @property
    def direction(self) -> np.ndarray:
        return (self.b - self.a) / self.length

    @property
    def midpoint(self) -> np.ndarray:
        return (self.a + self.b) / 2.0

    def canonical(self) -> "Segment2D":
        """Endpoint order fixed lexicographically for deterministic output."""
        if tuple(self.a) <= tuple(self.b):
            return Segment2D(self.a.copy(), self.b.copy())
        return Segment2D(self.b.copy(), self.a.copy())


def signed_area(vertices: np.ndarray) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return float((x * np.roll(y, -1) - np.roll(x, -1) * y).sum() / 2.0)


def point_segment_distance(pts, a, b) -> np.ndarray:
    """Distance from each point to the segment a-b (not the infinite line)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    a = _as_xy(a)
    b = _as_xy(b)
    ab = b - a
    ll = float(ab @ ab)
    if ll == 0:
        return np.linalg.norm(pts - a, axis=1)
    t = np.clip((pts - a) @ ab / ll, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(pts - proj, axis=1)


def point_line_distance(pts, origin, direction) -> np.ndarray:
    """Signed perpendicular distance to the infinite line (left of direction > 0)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    d = _as_xy(direction)
    n = np.array([-d[1], d[0]])
    return (pts - _as_xy(origin)) @ n


def line_intersection(p1, d1, p2, d2):
    """Intersection of two lines given as point + direction, or None if parallel."""
    p1, d1, p2, d2 = map(_as_xy, (p1, d1, p2, d2))
    cross = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(cross) < 1e-12:
        return None
    dp = p2 - p1
    t = (dp[0] * d2[1] - dp[1] * d2[0]) / cross
    return p1 + t * d1


def segments_intersect(a1, a2, b1, b2, eps=COORD_EPS) -> bool:
    """Proper or touching intersection test between two closed segments."""
    a1, a2, b1, b2 = map(_as_xy, (a1, a2, b1, b2))

    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    def on_seg(p, q, r):
        return (
            min(p[0], q[0]) - eps <= r[0] <= max(p[0], q[0]) + eps
            and min(p[1], q[1]) - eps <= r[1] <= max(p[1], q[1]) + eps
        )

    o1, o2 = orient(a1, a2, b1), orient(a1, a2, b2)
    o3, o4 = orient(b1, b2, a1), orient(b1, b2, a2)
    if ((o1 > 0) != (o2 > 0)) and ((o3 > 0) != (o4 > 0)) and o1 != 0 and o2 != 0 and o3 != 0 and o4 != 0:
        return True
    if abs(o1) <= eps and on_seg(a1, a2, b1):
        return True
    if abs(o2) <= eps and on_seg(a1, a2, b2):
        return True
    if abs(o3) <= eps and on_seg(b1, b2, a1):
        return True
    if abs(o4) <= eps and on_seg(b1, b2, a2):
        return True
    return False


def segment_intersection_point(a1, a2, b1, b2, eps=1e-9):
    """Intersection point of two segments, or None. Collinear overlaps return None."""
    a1, a2, b1, b2 = map(_as_xy, (a1, a2, b1, b2))
    d1, d2 = a2 - a1, b2 - b1
    cross = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(cross) < 1e-12:
        return None
    dp = b1 - a1
    t = (dp[0] * d2[1] - dp[1] * d2[0]) / cross
    u = (dp[0] * d1[1] - dp[1] * d1[0]) / cross
    if -eps <= t <= 1 + eps and -eps <= u <= 1 + eps:
        return a1 + t * d1
    return None


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Andrew monotone chain; returns hull vertices CCW (no repeat)."""
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def farthest_pair(points: np.ndarray) -> tuple[int, int]:
    """Indices of the two mutually farthest points (rotating calipers on the hull)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    hull = convex_hull(pts)
    if len(hull) <= 1:
        return 0, 0
    best = (-1.0, 0, 0)
    m = len(hull)

    def cross2(u, v):
        return u[0] * v[1] - u[1] * v[0]

    j = 1
    for i in range(m):
        nxt = (i + 1) % m
        while True:
            jn = (j + 1) % m
            edge = hull[nxt] - hull[i]
            if abs(cross2(edge, hull[jn] - hull[i])) > abs(cross2(edge, hull[j] - hull[i])):
                j = jn
            else:
                break
        for k in (j, (j + 1) % m):
            d = float(np.linalg.norm(hull[i] - hull[k]))
            if d > best[0]:
                best = (d, i, k)
    pa, pb = hull[best[1]], hull[best[2]]

    def find_index(p):
        d = np.linalg.norm(pts - p, axis=1)
        return int(np.argmin(d))

    ia, ib = find_index(pa), find_index(pb)
    return (ia, ib) if ia <= ib else (ib, ia)


def _dp_mask(vertices: np.ndarray, epsilon: float) -> np.ndarray:
    """Douglas-Peucker keep-mask for an open chain with fixed endpoints."""
    n = len(vertices)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j <= i + 1:
            continue
        d = point_segment_distance(vertices[i + 1 : j], vertices[i], vertices[j])
        k = int(np.argmax(d))
        if d[k] > epsilon:
            split = i + 1 + k
            keep[split] = True
            stack.append((i, split))
            stack.append((split, j))
    return keep


def simplify(polyline: Polyline2D, epsilon: float) -> Polyline2D:
    """Douglas-Peucker simplification.

    Distances are measured to the chord segment. Open polylines keep their
    endpoints; closed polylines are anchored at the two mutually farthest
    vertices. epsilon 0 returns the input unchanged.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    v = polyline.vertices
    if len(v) < 2:
        raise ValueError("simplify needs at least 2 vertices")
    if epsilon == 0 or len(v) == 2:
        return Polyline2D(v.copy(), polyline.closed)
    if not polyline.closed:
        return Polyline2D(v[_dp_mask(v, epsilon)], closed=False)

    ia, ib = farthest_pair(v)
    if ia == ib:
        return Polyline2D(v[[0]], closed=True)
    chain1 = v[ia : ib + 1]
    chain2 = np.vstack([v[ib:], v[: ia + 1]])
    keep1 = _dp_mask(chain1, epsilon)
    keep2 = _dp_mask(chain2, epsilon)
    out = np.vstack([chain1[keep1][:-1], chain2[keep2][:-1]])
    return Polyline2D(out, closed=True)


def explode_segments(polyline: Polyline2D, min_length: float = 0.0) -> list[Segment2D]:
    """Consecutive vertex pairs as segments (wrapping when closed)."""
    v = polyline.vertices
    pairs = list(zip(v[:-1], v[1:]))
    if polyline.closed and len(v) >= 2:
        pairs.append((v[-1], v[0]))
    out = []
    for a, b in pairs:
        ln = float(np.linalg.norm(b - a))
        if ln > max(min_length, COORD_EPS):
            out.append(Segment2D(a, b))
    return out


def _angle_between(d1: np.ndarray, d2: np.ndarray) -> float:
    """Undirected angle between unit directions, degrees in [0, 90]."""
    c = abs(float(np.clip(d1 @ d2, -1.0, 1.0)))
    return math.degrees(math.acos(c))


def _merge_group(group: list[Segment2D]) -> Segment2D:
    """Fuse collinear members into one span.

    Direction comes from the longest member; the line position is the
    length-weighted mean of member offsets, which keeps the fused segment
    centered on the strip rather than glued to one side.
    """
    ref = max(group, key=lambda s: (s.length, tuple(s.a), tuple(s.b)))
    d = ref.direction
    n = np.array([-d[1], d[0]])
    origin = ref.a
    wsum = 0.0
    osum = 0.0
    for s in group:
        off = float((s.midpoint - origin) @ n)
        wsum += s.length
        osum += off * s.length
    base = origin + (osum / wsum) * n
    ts = []
    for s in group:
        ts.append(float((s.a - base) @ d))
        ts.append(float((s.b - base) @ d))
    return Segment2D(base + min(ts) * d, base + max(ts) * d).canonical()


def _mergeable(ref: Segment2D, s: Segment2D, angle_tol: float, gap_tol: float) -> bool:
    if _angle_between(ref.direction, s.direction) >= angle_tol:
        return False
    d = ref.direction
    n = np.array([-d[1], d[0]])
    for p in (s.a, s.b):
        if abs(float((p - ref.a) @ n)) >= gap_tol:
            return False
    t1, t2 = float((s.a - ref.a) @ d), float((s.b - ref.a) @ d)
    lo, hi = min(t1, t2), max(t1, t2)
    gap = max(0.0, max(0.0 - hi, lo - ref.length))
    return gap < gap_tol


def merge_collinear(segments, angle_tol: float, gap_tol: float) -> list[Segment2D]:
    """Fuse nearly collinear segments until no mergeable pair remains.

    Segments merge when their mutual angle is below angle_tol (degrees), the
    lateral offset of both endpoints from the reference line is below gap_tol,
    and the projected endpoint gap is below gap_tol. Longest segments act as
    references first.
    """
    if angle_tol < 0:
        raise ValueError("angle_tol must be >= 0")
    segs = [s.canonical() for s in segments]
    changed = True
    while changed:
        changed = False
        segs.sort(key=lambda s: (-s.length, tuple(s.a), tuple(s.b)))
        used = [False] * len(segs)
        out = []
        for i, ref in enumerate(segs):
            if used[i]:
                continue
            used[i] = True
            group = [ref]
            cur = ref
            grew = True
            while grew:
                grew = False
                for j in range(len(segs)):
                    if used[j]:
                        continue
                    if _mergeable(cur, segs[j], angle_tol, gap_tol):
                        used[j] = True
                        group.append(segs[j])
                        cur = _merge_group(group)
                        grew = True
            if len(group) > 1:
                changed = True
            out.append(cur)
        segs = out
    segs.sort(key=lambda s: (tuple(s.a), tuple(s.b)))
    return segs


def offset_polygon(vertices: np.ndarray, distances) -> np.ndarray:
    """Inset a CCW polygon by a per-edge distance (mitred corners).

    Edge i runs from vertex i to i+1 and moves inward (left of its direction)
    by distances[i]. Consecutive parallel edges on the same offset line are
    fused; parallel edges with distinct offsets get a perpendicular jog.
    """
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    dists = np.broadcast_to(np.asarray(distances, dtype=float), (n,))
    lines = []  # (point_on_line, direction, source_vertex)
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        d = b - a
        ln = np.linalg.norm(d)
        if ln < COORD_EPS:
            continue
        d = d / ln
        nrm = np.array([-d[1], d[0]])
        lines.append((a + nrm * dists[i], d, a))
    # fuse consecutive entries that describe the same offset line
    fused = []
    for p, d, src in lines:
        if fused:
            p0, d0, _ = fused[-1]
            if abs(d0[0] * d[1] - d0[1] * d[0]) < 1e-12 and abs(float((p - p0) @ np.array([-d0[1], d0[0]]))) < COORD_EPS:
                continue
        fused.append((p, d, src))
    if len(fused) >= 2:
        p0, d0, _ = fused[0]
        p1, d1, _ = fused[-1]
        if abs(d0[0] * d1[1] - d0[1] * d1[0]) < 1e-12 and abs(float((p0 - p1) @ np.array([-d1[1], d1[0]]))) < COORD_EPS:
            fused.pop()
    if len(fused) < 3:
        raise ValueError("polygon inset collapsed")
    out = []
    m = len(fused)
    for i in range(m):
        p1, d1, _ = fused[i]
        p2, d2, src2 = fused[(i + 1) % m]
        x = line_intersection(p1, d1, p2, d2)
        if x is None:
            # parallel neighbors with different offsets: jog through the corner
            nrm1 = np.array([-d1[1], d1[0]])
            out.append(src2 + nrm1 * float((p1 - src2) @ nrm1))
            nrm2 = np.array([-d2[1], d2[0]])
            out.append(src2 + nrm2 * float((p2 - src2) @ nrm2))
        else:
            out.append(x)
    # out[i] is the corner after edge i; rotate so edge i runs out[i] -> out[i+1]
    out = [out[-1]] + out[:-1]
    return np.array(out)
