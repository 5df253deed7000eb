"""Room zone extraction from the snapped wall-axis graph.

Wall axes are split at mutual intersections into a planar graph; its bounded
faces are candidate rooms at axis level, and each face edge is pulled inward
by half its wall's thickness so the final zone boundary runs along the real
interior wall surfaces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsetCollapsedError
from .geom2d import (
    Polygon2D,
    line_intersection,
    offset_polygon,
    segment_intersection_point,
    signed_area,
)
from .walls import Wall

_NODE_DECIMALS = 7  # node identity grid, ~10 nm


@dataclass
class AxisGraph:
    nodes: list  # node id -> (x, y)
    edges: list  # (node_u, node_v, wall_index)
    dangling: list = field(default_factory=list)  # node ids with degree 1


@dataclass
class Zone:
    boundary: Polygon2D
    storey_index: int
    height: float
    name: str = ""
    cell: Polygon2D | None = None

    @property
    def area(self) -> float:
        return self.boundary.area


def _node_key(p) -> tuple:
    return (round(float(p[0]), _NODE_DECIMALS), round(float(p[1]), _NODE_DECIMALS))


def build_axis_graph(walls: list[Wall], snapping_distance: float, merge_tol: float = 0.0) -> AxisGraph:
    """Split wall axes at intersections; extend dangling ends onto nearby axes.

    A dangling endpoint within snapping_distance of another axis is extended
    along its own axis line to meet it. Node coordinates are exact at the
    computed intersections; merge_tol additionally clusters junction nodes
    that raster noise left a few millimeters apart (three detected axes never
    meet in exactly one point).
    """
    if snapping_distance < 0:
        raise ValueError("snapping_distance must be >= 0")
    segs = [(w.axis_start.copy(), w.axis_end.copy()) for w in walls]

    # extend endpoints that stop just short of a crossing axis
    for i, (a, b) in enumerate(segs):
        d = (b - a) / np.linalg.norm(b - a)
        for endpoint, sign in ((a, -1.0), (b, 1.0)):
            best = None
            for j, (c, e) in enumerate(segs):
                if j == i:
                    continue
                dj = (e - c) / np.linalg.norm(e - c)
                x = line_intersection(endpoint, d, c, dj)
                if x is None:
                    continue
                move = float((x - endpoint) @ (d * sign))
                if move <= 1e-12:
                    continue  # extension only, outward from the segment
                dist = float(np.linalg.norm(x - endpoint))
                tj = float((x - c) @ dj)
                if dist <= snapping_distance and -snapping_distance <= tj <= np.linalg.norm(e - c) + snapping_distance:
                    if best is None or dist < best[0]:
                        best = (dist, x)
            if best is not None:
                endpoint[:] = best[1]

    # split every segment at its intersections with all others
    pieces = []
    for i, (a, b) in enumerate(segs):
        d = b - a
        ln = float(np.linalg.norm(d))
        if ln <= 1e-12:
            continue
        d = d / ln
        ts = [0.0, ln]
        for j, (c, e) in enumerate(segs):
            if j == i:
                continue
            x = segment_intersection_point(a, b, c, e, eps=1e-9)
            if x is not None:
                t = float((x - a) @ d)
                if 1e-9 < t < ln - 1e-9:
                    ts.append(t)
        ts = sorted(set(round(t, 10) for t in ts))
        for t0, t1 in zip(ts[:-1], ts[1:]):
            if t1 - t0 > 1e-9:
                pieces.append((a + t0 * d, a + t1 * d, i))

    node_ids: dict = {}
    nodes: list = []

    def node_of(p):
        k = _node_key(p)
        if k not in node_ids:
            node_ids[k] = len(nodes)
            nodes.append(np.array(k, dtype=float))
        return node_ids[k]

    edges = []
    seen = set()
    for a, b, wi in pieces:
        u, v = node_of(a), node_of(b)
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        if key in seen:
            continue
        seen.add(key)
        edges.append((u, v, wi))

    if merge_tol > 0 and nodes:
        nodes, edges = _cluster_nodes(nodes, edges, merge_tol)

    degree = {}
    for u, v, _ in edges:
        degree[u] = degree.get(u, 0) + 1
        degree[v] = degree.get(v, 0) + 1
    dangling = sorted(n for n, deg in degree.items() if deg == 1)
    return AxisGraph(nodes=nodes, edges=edges, dangling=dangling)


def _cluster_nodes(nodes: list, edges: list, tol: float):
    """Greedily merge nodes closer than tol; clusters keep their centroid."""
    order = sorted(range(len(nodes)), key=lambda i: tuple(nodes[i]))
    assign = {}
    clusters = []  # list of member-id lists
    for i in order:
        placed = False
        for ci, members in enumerate(clusters):
            rep = np.mean([nodes[m] for m in members], axis=0)
            if float(np.linalg.norm(nodes[i] - rep)) <= tol:
                members.append(i)
                assign[i] = ci
                placed = True
                break
        if not placed:
            assign[i] = len(clusters)
            clusters.append([i])
    new_nodes = [np.mean([nodes[m] for m in members], axis=0) for members in clusters]
    new_edges = []
    seen = set()
    for u, v, wi in edges:
        cu, cv = assign[u], assign[v]
        if cu == cv:
            continue
        key = (min(cu, cv), max(cu, cv))
        if key in seen:
            continue
        seen.add(key)
        new_edges.append((cu, cv, wi))
    return new_nodes, new_edges


def extract_cells(graph: AxisGraph) -> list[tuple]:
    """Bounded faces of the arrangement as (polygon, edge wall indices).

    Faces are traced half-edge by half-edge taking the most clockwise turn at
    every node; loops with positive area are interior cells (the outer face
    traces clockwise and drops out). Dead-end spurs inside a face are
    stripped from the polygon.
    """
    nodes = graph.nodes
    # outgoing half-edges per node, sorted by angle
    out_edges: dict = {}
    wall_of: dict = {}
    for u, v, wi in graph.edges:
        out_edges.setdefault(u, []).append(v)
        out_edges.setdefault(v, []).append(u)
        wall_of[(u, v)] = wi
        wall_of[(v, u)] = wi
    angles = {}
    for u, nbrs in out_edges.items():
        nbrs.sort(key=lambda v: math.atan2(nodes[v][1] - nodes[u][1], nodes[v][0] - nodes[u][0]))
        for idx, v in enumerate(nbrs):
            angles[(u, v)] = idx

    visited = set()
    faces = []
    for u, v, _ in graph.edges:
        for h in ((u, v), (v, u)):
            if h in visited:
                continue
            loop = []
            cur = h
            while cur not in visited:
                visited.add(cur)
                loop.append(cur)
                a, b = cur
                nbrs = out_edges[b]
                # next half-edge: rotate clockwise from the reversed edge
                idx = angles[(b, a)]
                nxt = nbrs[(idx - 1) % len(nbrs)]
                cur = (b, nxt)
            if cur != h:
                continue  # merged into an already-extracted loop
            cycle = [e[0] for e in loop]
            poly = _strip_spurs(cycle)
            if len(poly) < 3:
                continue
            coords = np.array([nodes[n] for n in poly])
            if signed_area(coords) <= 1e-9:
                continue
            edge_walls = []
            for k in range(len(poly)):
                key = (poly[k], poly[(k + 1) % len(poly)])
                edge_walls.append(wall_of.get(key))
            if any(w is None for w in edge_walls):
                continue
            faces.append((Polygon2D(coords), edge_walls))
    faces.sort(key=lambda f: (-f[0].area, tuple(f[0].vertices[0])))
    return faces


def _strip_spurs(cycle: list) -> list:
    """Remove dead-end retraced vertices (… a b a …) from a face cycle."""
    out = list(cycle)
    changed = True
    while changed and len(out) >= 3:
        changed = False
        n = len(out)
        for i in range(n):
            if out[(i - 1) % n] == out[(i + 1) % n]:
                drop = sorted({i, (i - 1) % n}, reverse=True)
                for k in drop:
                    out.pop(k)
                changed = True
                break
    # collapse consecutive duplicates
    dedup = []
    for nid in out:
        if not dedup or dedup[-1] != nid:
            dedup.append(nid)
    if dedup and len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    return dedup


def inset_to_surfaces(cell: Polygon2D, edge_walls: list, walls: list[Wall]) -> Polygon2D:
    """Pull each cell edge inward by half its wall's thickness.

    Consecutive offset lines intersect at mitred corners; an inset that
    flips orientation or self-intersects means a wall is thicker than the
    room it bounds.
    """
    v = cell.vertices
    if signed_area(v) < 0:
        # reversing vertex order maps edge k to old edge n-2-k (last edge stays last)
        v = v[::-1]
        edge_walls = edge_walls[-2::-1] + [edge_walls[-1]]
    dists = [walls[w].thickness / 2.0 for w in edge_walls]
    name = f"({cell.centroid()[0]:.2f}, {cell.centroid()[1]:.2f})"
    try:
        inner = offset_polygon(v, dists)
    except ValueError:
        raise InsetCollapsedError(name) from None
    if signed_area(inner) <= 0:
        raise InsetCollapsedError(name)
    poly = Polygon2D(inner)
    if not poly.is_simple():
        raise InsetCollapsedError(name)
    return poly


def detect_zones(
    walls: list[Wall],
    snapping_distance: float,
    storey_index: int,
    height: float,
    merge_tol: float = 0.0,
) -> tuple[list[Zone], AxisGraph, list[str]]:
    """Full zone stage for one storey; returns zones, the graph, and warnings."""
    warnings = []
    if not walls:
        return [], AxisGraph([], []), warnings
    graph = build_axis_graph(walls, snapping_distance, merge_tol=merge_tol)
    if graph.dangling:
        coords = ", ".join(f"({graph.nodes[n][0]:.2f}, {graph.nodes[n][1]:.2f})" for n in graph.dangling)
        warnings.append(
            f"storey {storey_index}: axis graph has {len(graph.dangling)} unclosed endpoint(s) at {coords}; "
            "zones may be merged or missing (check snapping_distance)"
        )
    zones = []
    for poly, edge_walls in extract_cells(graph):
        try:
            boundary = inset_to_surfaces(poly, edge_walls, walls)
        except InsetCollapsedError as exc:
            warnings.append(f"storey {storey_index}: {exc}")
            continue
        zones.append(Zone(boundary=boundary, storey_index=storey_index, height=height, cell=poly))
    zones.sort(key=lambda z: -z.area)
    for i, z in enumerate(zones):
        z.name = f"Zone {storey_index}.{i + 1}"
    return zones, graph, warnings
