import itertools

import numpy as np
import pytest

from scan2ifc.geom2d import Polygon2D, Segment2D
from scan2ifc.metrics import ClassScore, MatchTolerances, compare_to_truth
from scan2ifc.openings import Opening, OpeningKind
from scan2ifc.pipeline import PipelineResult
from scan2ifc.slabs import Slab, SlabSource, Storey
from scan2ifc.synth import (
    GroundTruth,
    GTOpening,
    GTWall,
    GTZone,
    build_truth,
    ground_truth_elements,
    two_room_spec,
)
from scan2ifc.walls import Wall, WallSurface
from scan2ifc.cloud_io import PointCloud
from scan2ifc.zones import Zone


def result_from_truth(truth: GroundTruth) -> PipelineResult:
    slabs, storeys, walls, openings, zones = ground_truth_elements(truth)
    return PipelineResult(slabs, storeys, walls, openings, zones)


class TestIdentity:
    def test_detected_equals_truth_all_ones(self):
        truth = build_truth(two_room_spec())
        result = result_from_truth(truth)
        tol = MatchTolerances()
        card = compare_to_truth(result, truth, tol)
        for name in ("slabs", "storeys", "walls", "openings", "zones"):
            assert card.recall(name) == 1.0
            assert card.precision(name) == 1.0

    def test_one_missed_opening_recall(self):
        # 13 ground-truth openings, one left undetected -> recall 12/13
        spec = two_room_spec()
        from scan2ifc.synth import OpeningSpec

        for si in (0, 1):
            extra = []
            for k in range(4 if si == 0 else 5):
                extra.append(
                    OpeningSpec(wall=1, x_offset=0.8 + 0.55 * k, width=0.3, sill=0.0,
                                height=2.0, kind="door")
                )
            spec.storeys[si].openings.extend(extra)
        truth = build_truth(spec)
        assert len(truth.openings) == 13
        result = result_from_truth(truth)
        result.openings = result.openings[:-1]
        card = compare_to_truth(result, truth, MatchTolerances())
        assert card.classes["openings"].matched == 12
        assert card.recall("openings") == pytest.approx(12 / 13)
        assert card.precision("openings") == 1.0


class TestAssignmentOracle:
    def exhaustive_max_matching(self, dists, tol):
        """Optimal assignment cardinality by brute force (<= 10 elements)."""
        nt, nd = dists.shape
        best = 0
        detected = list(range(nd))
        for size in range(min(nt, nd), 0, -1):
            for t_subset in itertools.combinations(range(nt), size):
                for d_perm in itertools.permutations(detected, size):
                    if all(dists[t, d] <= tol for t, d in zip(t_subset, d_perm)):
                        return size
        return best

    def test_greedy_equals_exhaustive_on_separated_layouts(self):
        # well-separated elements: greedy matching must reach the optimum
        rng = np.random.default_rng(3)
        tol = MatchTolerances(slab_z=0.05)
        for _ in range(30):
            nt = int(rng.integers(1, 8))
            truth_z = np.arange(nt) * 1.0  # spacing >> tolerance
            detected_z = []
            for z in truth_z:
                if rng.random() < 0.8:
                    detected_z.append(z + rng.uniform(-0.04, 0.04))
            for _ in range(int(rng.integers(0, 3))):
                detected_z.append(float(rng.uniform(nt, nt + 5)))  # spurious
            truth = GroundTruth(
                slabs=[(float(z), 0.3) for z in truth_z],
                storeys=[], walls=[], openings=[], zones=[], faces=[],
            )
            result = PipelineResult(
                slabs=[Slab(None, float(z), 0.3, SlabSource.PAIRED) for z in detected_z],
                storeys=[], walls=[], openings=[], zones=[],
            )
            card = compare_to_truth(result, truth, tol)
            dists = np.abs(truth_z[:, None] - np.array(detected_z)[None, :]) if detected_z else np.zeros((nt, 0))
            expected = self.exhaustive_max_matching(dists, tol.slab_z) if detected_z else 0
            assert card.classes["slabs"].matched == expected


class TestDimensionalErrors:
    def test_thickness_error_reported(self):
        truth = build_truth(two_room_spec())
        result = result_from_truth(truth)
        result.walls[0].thickness += 0.015
        card = compare_to_truth(result, truth, MatchTolerances())
        assert card.classes["walls"].errors["thickness"] == pytest.approx(0.015)

    def test_kind_mismatch_counted(self):
        truth = build_truth(two_room_spec())
        result = result_from_truth(truth)
        result.openings[0].kind = (
            OpeningKind.WINDOW if result.openings[0].kind == OpeningKind.DOOR else OpeningKind.DOOR
        )
        card = compare_to_truth(result, truth, MatchTolerances())
        assert card.classes["openings"].errors["kind_matches"] == len(truth.openings) - 1
