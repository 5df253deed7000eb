import numpy as np
import pytest

from scan2ifc.cloud_io import (
    PointCloud,
    dilute_spatial,
    load_cloud,
    read_cache,
    read_xyz,
    write_cache,
)
from scan2ifc.errors import CacheFormatError, CloudFormatError


class TestReadXyz:
    def test_basic(self, tmp_path):
        p = tmp_path / "a.xyz"
        p.write_text("0 0 0\n1 2 3\n")
        cloud = read_xyz(p)
        assert cloud.count == 2
        lo, hi = cloud.bounds
        assert np.allclose(lo, [0, 0, 0])
        assert np.allclose(hi, [1, 2, 3])

    def test_extra_fields_discarded(self, tmp_path):
        p = tmp_path / "c.xyz"
        p.write_text("1 2 3 255 0 0\n")
        cloud = read_xyz(p)
        assert cloud.count == 1
        assert np.allclose(cloud.points[0], [1, 2, 3])

    def test_comments_and_blank_lines(self, tmp_path):
        p = tmp_path / "c.xyz"
        p.write_text("# header\n\n1 1 1\n# trailing\n2 2 2\n")
        assert read_xyz(p).count == 2

    def test_ragged_columns(self, tmp_path):
        p = tmp_path / "r.xyz"
        p.write_text("1 2 3\n4 5 6 200\n7 8 9 1 2 3\n")
        cloud = read_xyz(p)
        assert cloud.count == 3
        assert np.allclose(cloud.points[1], [4, 5, 6])

    def test_malformed_line_reports_number(self, tmp_path):
        p = tmp_path / "bad.xyz"
        p.write_text("1 2 3\n4 nope 6\n")
        with pytest.raises(CloudFormatError, match="line 2"):
            read_xyz(p)

    def test_too_few_fields(self, tmp_path):
        p = tmp_path / "bad.xyz"
        p.write_text("1 2 3\n4 5\n")
        with pytest.raises(CloudFormatError, match="line 2"):
            read_xyz(p)

    def test_nan_rejected(self, tmp_path):
        p = tmp_path / "nan.xyz"
        p.write_text("1 2 3\n4 nan 6\n")
        with pytest.raises(CloudFormatError, match="non-finite"):
            read_xyz(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CloudFormatError, match="not found"):
            read_xyz(tmp_path / "nope.xyz")

    def test_row_subsampling(self, tmp_path):
        p = tmp_path / "s.xyz"
        p.write_text("".join(f"{i} 0 0\n" for i in range(10)))
        cloud = read_xyz(p, every_nth=3)
        assert cloud.count == 4
        assert np.allclose(cloud.points[:, 0], [0, 3, 6, 9])

    def test_synth3_scale_line_count(self, tmp_path):
        # 6,905,684 data lines, the size class of a full building scan
        n = 6_905_684
        rng = np.random.default_rng(1)
        block_rows = 100_000
        arr = rng.uniform(-50, 50, size=(block_rows, 3))
        block = "\n".join(f"{x:.3f} {y:.3f} {z:.3f}" for x, y, z in arr) + "\n"
        p = tmp_path / "big.xyz"
        with open(p, "w") as fh:
            fh.write("# synth3-scale\n")
            full, rest = divmod(n, block_rows)
            for _ in range(full):
                fh.write(block)
            fh.write("".join(block.splitlines(keepends=True)[:rest]))
        cloud = read_xyz(p)
        assert cloud.count == n


class TestDilution:
    def test_greedy_min_distance(self):
        cloud = PointCloud(np.array([[0, 0, 0], [0.5, 0, 0], [1, 0, 0]]))
        out, report = dilute_spatial(cloud, 0.6)
        assert out.count == 2
        assert np.allclose(out.points, [[0, 0, 0], [1, 0, 0]])
        assert report.kept == 2
        assert report.dropped == 1
        assert report.kept + report.dropped == report.input_count

    def test_zero_dmin_identity(self):
        rng = np.random.default_rng(1)
        cloud = PointCloud(rng.uniform(size=(100, 3)))
        out, report = dilute_spatial(cloud, 0.0)
        assert out == cloud
        assert report.dropped == 0

    def test_pairwise_distance_oracle(self):
        rng = np.random.default_rng(2)
        cloud = PointCloud(rng.uniform(size=(10_000, 3)))
        d_min = 0.05
        out, report = dilute_spatial(cloud, d_min)
        assert report.kept == out.count
        pts = out.points
        # O(n^2) check in blocks
        d2 = d_min * d_min
        for i in range(0, len(pts), 500):
            block = pts[i : i + 500]
            diff = block[:, None, :] - pts[None, :, :]
            dist2 = (diff**2).sum(axis=2)
            k = len(block)
            dist2[np.arange(k), i + np.arange(k)] = np.inf
            assert dist2.min() >= d2 - 1e-12

    def test_output_is_subset(self):
        rng = np.random.default_rng(3)
        pts = rng.uniform(size=(500, 3))
        cloud = PointCloud(pts)
        out, _ = dilute_spatial(cloud, 0.1)
        pool = {tuple(p) for p in pts}
        assert all(tuple(p) in pool for p in out.points)

    def test_idempotent(self):
        rng = np.random.default_rng(4)
        cloud = PointCloud(rng.uniform(size=(2000, 3)))
        once, _ = dilute_spatial(cloud, 0.08)
        twice, report = dilute_spatial(once, 0.08)
        assert twice == once
        assert report.dropped == 0

    def test_monotone_in_dmin(self):
        rng = np.random.default_rng(5)
        cloud = PointCloud(rng.uniform(size=(3000, 3)))
        kept = [dilute_spatial(cloud, d)[1].kept for d in (0.02, 0.05, 0.1, 0.2)]
        assert kept == sorted(kept, reverse=True)

    def test_deterministic(self):
        rng = np.random.default_rng(6)
        cloud = PointCloud(rng.uniform(size=(1000, 3)))
        a, _ = dilute_spatial(cloud, 0.07)
        b, _ = dilute_spatial(cloud, 0.07)
        assert a == b

    def test_empty_cloud_rejected(self):
        with pytest.raises(ValueError):
            dilute_spatial(PointCloud(np.zeros((0, 3))), 0.1)


class TestCache:
    def test_round_trip_bit_identical(self, tmp_path):
        pts = np.array([[0.1, -2.5, 3e-7], [1e9, 2, 3], [np.pi, np.e, -0.0]])
        cloud = PointCloud(pts)
        path = write_cache(cloud, tmp_path / "c.c2m")
        back = read_cache(path)
        assert np.array_equal(back.points, cloud.points)

    def test_empty_cloud(self, tmp_path):
        path = write_cache(PointCloud(np.zeros((0, 3))), tmp_path / "e.c2m")
        assert read_cache(path).count == 0

    def test_large_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        cloud = PointCloud(rng.normal(scale=100, size=(1_000_000, 3)))
        path = write_cache(cloud, tmp_path / "big.c2m")
        assert read_cache(path) == cloud

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "bad.c2m"
        p.write_bytes(b"NOTMAGIC" + b"\x00" * 20)
        with pytest.raises(CacheFormatError, match="bad magic"):
            read_cache(p)

    def test_truncated_payload(self, tmp_path):
        cloud = PointCloud(np.ones((10, 3)))
        path = write_cache(cloud, tmp_path / "t.c2m")
        raw = path.read_bytes()
        path.write_bytes(raw[:-8])
        with pytest.raises(CacheFormatError, match="truncated"):
            read_cache(path)

    def test_load_cloud_dispatch(self, tmp_path):
        cloud = PointCloud(np.arange(9, dtype=float).reshape(3, 3))
        cache = write_cache(cloud, tmp_path / "d.c2m")
        assert load_cloud(cache) == cloud
        xyz = tmp_path / "d.xyz"
        xyz.write_text("0 1 2\n3 4 5\n6 7 8\n")
        assert load_cloud(xyz) == cloud
