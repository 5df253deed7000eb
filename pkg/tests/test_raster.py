import numpy as np
import pytest

from scan2ifc.geom2d import Polygon2D, signed_area
from scan2ifc.raster import (
    BinaryMask,
    binarize,
    contour_cells,
    dilate,
    dilate_cells,
    erode,
    erode_cells,
    histogram_1d,
    histogram_2d,
    trace_contours,
)


class TestHistogram1D:
    def test_direct_binning(self):
        h = histogram_1d([0.00, 0.01, 0.02, 1.00], 0.05)
        assert h.counts[0] == 3
        assert h.counts[20] == 1
        assert h.counts.sum() == 4

    def test_single_value(self):
        h = histogram_1d([3.21], 0.05)
        assert h.total == 1
        assert h.counts.max() == 1

    def test_empty_input(self):
        h = histogram_1d([], 0.1)
        assert len(h) == 0

    def test_origin_snaps_down(self):
        h = histogram_1d([0.27, 0.31], 0.1)
        assert h.origin == pytest.approx(0.2)

    def test_uniform_statistics(self):
        rng = np.random.default_rng(42)
        h = histogram_1d(rng.uniform(0, 1, 100_000), 0.05)
        # each bin expects 5000 +- 5 sigma
        sigma = np.sqrt(100_000 * 0.05 * 0.95)
        occupied = h.counts[h.counts > 0]
        assert len(occupied) == 20
        assert np.all(np.abs(occupied - 5000) < 5 * sigma)


class TestHistogram2D:
    def test_corners_half_open(self):
        g = histogram_2d([(0, 0), (1, 0), (0, 1), (1, 1)], 1.0)
        assert g.counts.shape == (2, 2)
        assert np.all(g.counts == 1)

    def test_identical_points(self):
        g = histogram_2d([(2.5, 2.5)] * 7, 1.0)
        assert g.counts.shape == (1, 1)
        assert g.counts[0, 0] == 7

    def test_count_conservation_and_recount_oracle(self):
        rng = np.random.default_rng(0)
        pts = rng.uniform(-3, 5, size=(5000, 2))
        cell = 0.37
        g = histogram_2d(pts, cell)
        assert g.total == 5000
        # brute-force recount per cell
        ox, oy = g.origin
        for _ in range(200):
            iy = rng.integers(0, g.height)
            ix = rng.integers(0, g.width)
            x0, y0 = ox + ix * cell, oy + iy * cell
            n = np.count_nonzero(
                (pts[:, 0] >= x0) & (pts[:, 0] < x0 + cell) & (pts[:, 1] >= y0) & (pts[:, 1] < y0 + cell)
            )
            assert g.counts[iy, ix] == n


class TestBinarize:
    def test_low_threshold_keeps_nonzero(self):
        g = histogram_2d([(0.5, 0.5)] * 10 + [(1.5, 0.5)] * 0, 1.0)
        m = binarize(g, 0.01)
        assert m.bits[0, 0]

    def test_threshold_one_all_false(self):
        g = histogram_2d([(0.5, 0.5), (1.5, 0.5)], 1.0)
        m = binarize(g, 1.0)
        assert not m.bits.any()

    def test_elementwise_oracle(self):
        rng = np.random.default_rng(4)
        counts = rng.integers(0, 50, size=(20, 30))
        g_counts = counts.copy()
        from scan2ifc.raster import DensityGrid

        g = DensityGrid((0.0, 0.0), 0.1, g_counts)
        for thr in (0.0, 0.01, 0.3, 0.9999, 1.0):
            m = binarize(g, thr)
            expected = counts > thr * counts.max()
            assert np.array_equal(m.bits, expected)


def make_mask(bits):
    return BinaryMask((0.0, 0.0), 1.0, np.array(bits, dtype=bool))


def brute_dilate(bits, k):
    h, w = bits.shape
    out = np.zeros_like(bits)
    for y in range(h):
        for x in range(w):
            if bits[y, x]:
                out[max(0, y - k) : y + k + 1, max(0, x - k) : x + k + 1] = True
    return out


def brute_erode(bits, k):
    h, w = bits.shape
    out = np.zeros_like(bits)
    for y in range(h):
        for x in range(w):
            y0, y1 = y - k, y + k + 1
            x0, x1 = x - k, x + k + 1
            if y0 < 0 or x0 < 0 or y1 > h or x1 > w:
                continue  # outside counts as background
            out[y, x] = bits[y0:y1, x0:x1].all()
    return out


class TestMorphology:
    def test_single_cell_dilate(self):
        bits = np.zeros((5, 5), dtype=bool)
        bits[2, 2] = True
        out = dilate_cells(make_mask(bits), 1)
        assert out.bits.sum() == 9
        assert out.bits[1:4, 1:4].all()

    def test_closing_restores_solid_rectangle(self):
        bits = np.zeros((20, 20), dtype=bool)
        bits[5:15, 5:15] = True
        m = make_mask(bits)
        closed = erode_cells(dilate_cells(m, 3), 3)
        assert np.array_equal(closed.bits, bits)

    def test_subcell_radius_is_identity(self):
        bits = np.random.default_rng(2).random((10, 10)) < 0.4
        m = make_mask(bits)
        assert np.array_equal(dilate(m, 0.49).bits, bits)
        assert np.array_equal(erode(m, 0.49).bits, bits)
        # half a cell reaches the neighbor ring
        assert not np.array_equal(dilate(m, 0.5).bits, bits)

    def test_minkowski_oracle(self):
        rng = np.random.default_rng(8)
        for case in range(100):
            h, w = rng.integers(4, 24, size=2)
            bits = rng.random((h, w)) < rng.uniform(0.2, 0.6)
            k = int(rng.integers(1, 4))
            m = make_mask(bits)
            assert np.array_equal(dilate_cells(m, k).bits, brute_dilate(bits, k))
            assert np.array_equal(erode_cells(m, k).bits, brute_erode(bits, k))

    def test_duality_away_from_border(self):
        rng = np.random.default_rng(12)
        bits = rng.random((30, 30)) < 0.5
        k = 2
        m = make_mask(bits)
        er = erode_cells(m, k).bits
        comp_dil = ~dilate_cells(make_mask(~bits), k).bits
        interior = np.zeros_like(bits)
        interior[k:-k, k:-k] = True
        assert np.array_equal(er[interior], comp_dil[interior])


def outer_border_cells(bits):
    """Flood-fill oracle: per 8-component, the cells 4-adjacent to the
    background region that surrounds it (the grid exterior or, for islands,
    the enclosing hole)."""
    from collections import deque

    h, w = bits.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = bits

    # label 4-connected background regions of the padded grid
    bg = np.zeros((h + 2, w + 2), dtype=int)
    nxt_bg = 0
    for y in range(h + 2):
        for x in range(w + 2):
            if not padded[y, x] and bg[y, x] == 0:
                nxt_bg += 1
                q = deque([(y, x)])
                bg[y, x] = nxt_bg
                while q:
                    cy, cx = q.popleft()
                    for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                        ny, nx = cy + dy, cx + dx
                        if 0 <= ny < h + 2 and 0 <= nx < w + 2 and not padded[ny, nx] and bg[ny, nx] == 0:
                            bg[ny, nx] = nxt_bg
                            q.append((ny, nx))

    # label 8-connected foreground components
    comp = np.zeros((h, w), dtype=int)
    nxt = 0
    seeds = {}
    for y in range(h):
        for x in range(w):
            if bits[y, x] and comp[y, x] == 0:
                nxt += 1
                seeds[nxt] = (y, x)  # first cell in row-major order
                q = deque([(y, x)])
                comp[y, x] = nxt
                while q:
                    cy, cx = q.popleft()
                    for dy in (-1, 0, 1):
                        for dx in (-1, 0, 1):
                            ny, nx = cy + dy, cx + dx
                            if 0 <= ny < h and 0 <= nx < w and bits[ny, nx] and comp[ny, nx] == 0:
                                comp[ny, nx] = nxt
                                q.append((ny, nx))

    result = {}
    for cid, (sy, sx) in seeds.items():
        # the seed is the component's min-row cell, so the padded cell one row
        # before it always belongs to the surrounding background region
        surround = bg[sy, sx + 1]
        assert surround != 0
        cells = set()
        for y in range(h):
            for x in range(w):
                if comp[y, x] != cid:
                    continue
                for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    if bg[y + 1 + dy, x + 1 + dx] == surround:
                        cells.add((x, y))
                        break
        result[cid] = cells
    return set(frozenset(v) for v in result.values())


def enclosed_cell_count(mask, contour):
    """Cells whose centers lie inside or on the contour polygon."""
    poly = Polygon2D(contour.vertices)
    ys, xs = np.nonzero(np.ones_like(mask.bits))
    centers = np.column_stack([xs + 0.5, ys + 0.5])
    return int(poly.contains(centers).sum())


class TestContours:
    def test_solid_block(self):
        bits = np.zeros((5, 5), dtype=bool)
        bits[1:4, 1:4] = True
        contours = trace_contours(make_mask(bits))
        assert len(contours) == 1
        assert contours[0].closed
        assert enclosed_cell_count(make_mask(bits), contours[0]) == 9

    def test_two_blocks_ordering(self):
        bits = np.zeros((10, 10), dtype=bool)
        bits[1:4, 1:4] = True  # area 9
        bits[6:8, 6:8] = True  # area 4
        contours = trace_contours(make_mask(bits))
        assert len(contours) == 2
        assert enclosed_cell_count(make_mask(bits), contours[0]) == 9
        assert enclosed_cell_count(make_mask(bits), contours[1]) == 4

    def test_empty_mask(self):
        assert trace_contours(make_mask(np.zeros((4, 4), dtype=bool))) == []

    def test_diagonal_cells_single_component(self):
        bits = np.zeros((4, 4), dtype=bool)
        bits[1, 1] = True
        bits[2, 2] = True
        contours = trace_contours(make_mask(bits))
        assert len(contours) == 1

    def test_flood_fill_boundary_oracle(self):
        rng = np.random.default_rng(21)
        for case in range(200):
            h, w = rng.integers(3, 33, size=2)
            bits = rng.random((h, w)) < rng.uniform(0.25, 0.7)
            mask = make_mask(bits)
            contours = trace_contours(mask)
            got = set(frozenset(contour_cells(mask, c)) for c in contours)
            expected = outer_border_cells(bits)
            assert got == expected

    def test_translation_stability(self):
        rng = np.random.default_rng(30)
        bits = rng.random((12, 12)) < 0.45
        base = trace_contours(make_mask(bits))
        shifted_bits = np.zeros((15, 15), dtype=bool)
        shifted_bits[2:14, 3:15] = bits
        shifted = trace_contours(make_mask(shifted_bits))
        assert len(base) == len(shifted)
        for c1, c2 in zip(base, shifted):
            assert np.allclose(c1.vertices + np.array([3.0, 2.0]), c2.vertices)

    def test_world_coordinates(self):
        bits = np.zeros((3, 3), dtype=bool)
        bits[1, 1] = True
        mask = BinaryMask((10.0, 20.0), 0.5, bits)
        (contour,) = trace_contours(mask)
        assert contour.vertices[:, 0].min() >= 10.0 + 0.5
        assert contour.vertices[:, 0].max() <= 10.0 + 1.0
        assert signed_area(contour.vertices) > 0
