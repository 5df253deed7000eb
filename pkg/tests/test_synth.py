import numpy as np
import pytest

from scan2ifc.metrics import DeviationStats, deviation, faces_from_elements
from scan2ifc.synth import (
    BuildingSpec,
    RoomSpec,
    StoreySpec,
    build_truth,
    generate,
    ground_truth_elements,
    random_building_spec,
    two_room_spec,
)


def one_room_spec(spacing=0.02, noise=0.0, seed=0):
    room = RoomSpec(vertices=[(0, 0), (4, 0), (4, 3), (0, 3)], wall_thickness=0.3)
    return BuildingSpec(
        storeys=[StoreySpec(height=2.7, slab_thickness=0.3, rooms=[room])],
        point_spacing=spacing,
        noise_sigma=noise,
        seed=seed,
    )


class TestGenerate:
    def test_points_on_faces_when_noise_free(self):
        cloud, truth = generate(one_room_spec(spacing=0.05))
        stats = deviation(cloud.points, truth.faces)
        assert stats.max < 1e-9

    def test_same_seed_identical(self):
        a, _ = generate(one_room_spec(noise=0.002, seed=3))
        b, _ = generate(one_room_spec(noise=0.002, seed=3))
        assert a == b

    def test_face_area_predicts_count(self):
        spacing = 0.02
        cloud, truth = generate(one_room_spec(spacing=spacing))
        total_area = 0.0
        from scan2ifc.geom2d import Polygon2D
        from scan2ifc.synth import HPolyFace, RectFace

        for f in truth.faces:
            if isinstance(f, RectFace):
                area = f.ulen * f.vlen - sum((u1 - u0) * (v1 - v0) for u0, u1, v0, v1 in f.voids)
            else:
                area = Polygon2D(f.polygon).area
            total_area += area
        predicted = total_area / spacing**2
        assert cloud.count == pytest.approx(predicted, rel=0.05)

    def test_opening_voids_empty(self):
        spec = two_room_spec(spacing=0.04)
        cloud, truth = generate(spec)
        op = truth.openings[0]
        wall = truth.walls[op.storey][op.wall_index]
        d = wall.direction
        n = np.array([-d[1], d[0]])
        pts = cloud.points
        floor_top = truth.storeys[op.storey][0]
        rel = pts[:, :2] - wall.a
        u = rel @ d
        perp = np.abs(rel @ n)
        v = pts[:, 2] - floor_top
        inside = (
            (perp < wall.thickness / 2 + 0.01)
            & (u > op.x_offset + 0.01)
            & (u < op.x_offset + op.width - 0.01)
            & (v > op.sill + 0.01)
            & (v < op.sill + op.height - 0.01)
        )
        assert inside.sum() == 0

    def test_invalid_specs_rejected(self):
        spec = one_room_spec()
        spec.point_spacing = -1
        with pytest.raises(ValueError):
            generate(spec)
        bad = one_room_spec()
        bad.storeys[0].openings.append(
            __import__("scan2ifc.synth", fromlist=["OpeningSpec"]).OpeningSpec(0, 0.0, 99.0, 0, 1, "door")
        )
        with pytest.raises(ValueError, match="fit"):
            generate(bad)


class TestGroundTruth:
    def test_two_room_arrangement(self):
        truth = build_truth(two_room_spec())
        assert len(truth.walls[0]) == 7
        interior = [w for w in truth.walls[0] if not w.exterior]
        assert len(interior) == 1
        assert interior[0].length == pytest.approx(6.0)
        assert len(truth.zones) == 4
        assert truth.slabs == [(-0.3, 0.3), (pytest.approx(2.7), 0.3), (pytest.approx(5.7), 0.3)]

    def test_elements_conversion(self):
        truth = build_truth(two_room_spec())
        slabs, storeys, walls, openings, zones = ground_truth_elements(truth)
        assert len(slabs) == 3
        assert len(storeys) == 2
        assert len(walls) == 14
        assert len(openings) == 4
        assert len(zones) == 4
        assert all(w.height == pytest.approx(2.7) for w in walls)


class TestDeviation:
    def test_uniform_offset(self):
        cloud, truth = generate(one_room_spec(spacing=0.1))
        from scan2ifc.synth import HPolyFace, RectFace

        # shift every horizontal face by 5 mm and measure floor/ceiling points only
        floor_pts = cloud.points[np.abs(cloud.points[:, 2]) < 1e-12]
        faces = [f for f in truth.faces if isinstance(f, HPolyFace) and f.z == 0.0]
        shifted = [HPolyFace(f.polygon, f.z + 0.005) for f in faces]
        stats = deviation(floor_pts, shifted)
        assert stats.p50 == pytest.approx(0.005, abs=1e-9)
        assert stats.max == pytest.approx(0.005, abs=1e-9)

    def test_brute_force_oracle_boxes(self):
        rng = np.random.default_rng(5)
        from scan2ifc.synth import RectFace

        faces = []
        for _ in range(6):
            origin = rng.uniform(0, 5, 3)
            faces.append(
                RectFace(
                    origin=origin,
                    udir=np.array([1.0, 0.0, 0.0]),
                    vdir=np.array([0.0, 0.0, 1.0]),
                    ulen=float(rng.uniform(1, 3)),
                    vlen=float(rng.uniform(1, 3)),
                )
            )
        pts = rng.uniform(-1, 7, size=(500, 3))
        stats = deviation(pts, faces)

        def brute(p):
            best = np.inf
            for f in faces:
                for du in np.linspace(0, f.ulen, 400):
                    for dv in np.linspace(0, f.vlen, 40):
                        q = f.origin + du * f.udir + dv * f.vdir
                        best = min(best, float(np.linalg.norm(p - q)))
            return best

        for i in rng.choice(len(pts), 10, replace=False):
            assert stats.distances[i] == pytest.approx(brute(pts[i]), abs=5e-3)

    def test_rigid_invariance(self):
        cloud, truth = generate(one_room_spec(spacing=0.1, noise=0.003, seed=1))
        base = deviation(cloud.points, truth.faces)
        ang = np.radians(31.0)
        rot = np.array(
            [[np.cos(ang), -np.sin(ang), 0], [np.sin(ang), np.cos(ang), 0], [0, 0, 1.0]]
        )
        shift = np.array([10.0, -3.0, 2.0])
        moved_pts = cloud.points @ rot.T + shift
        from scan2ifc.synth import HPolyFace, RectFace

        moved_faces = []
        for f in truth.faces:
            if isinstance(f, RectFace):
                moved_faces.append(
                    RectFace(rot @ f.origin + shift, rot @ f.udir, rot @ f.vdir, f.ulen, f.vlen, f.voids)
                )
            else:
                # horizontal faces only stay horizontal under z-preserving rotation
                poly = f.polygon @ rot[:2, :2].T + shift[:2]
                moved_faces.append(HPolyFace(poly, f.z + shift[2]))
        moved = deviation(moved_pts, moved_faces)
        assert np.allclose(base.distances, moved.distances, atol=1e-9)

    def test_percentiles_monotone(self):
        rng = np.random.default_rng(1)
        stats = DeviationStats(rng.exponential(0.01, 1000))
        assert stats.p50 <= stats.p95 <= stats.p99 <= stats.max
        assert stats.count_over(stats.max + 1) == 0


class TestFacesFromElements:
    def test_detected_faces_cover_cloud(self):
        # GT elements -> faces: a noise-free cloud must lie on them
        spec = two_room_spec(spacing=0.05)
        cloud, truth = generate(spec)
        slabs, storeys, walls, openings, zones = ground_truth_elements(truth)
        faces = faces_from_elements(slabs, walls, openings, storeys)
        stats = deviation(cloud.points, faces)
        assert stats.p95 < 1e-9

    def test_random_spec_valid(self):
        rng = np.random.default_rng(33)
        for _ in range(5):
            spec = random_building_spec(rng)
            truth = build_truth(spec)
            assert len(truth.zones) >= 1
            for group in truth.walls:
                assert all(w.thickness > 0 for w in group)
