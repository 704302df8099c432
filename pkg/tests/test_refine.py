import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zone.grids import BinaryMask
from zone.refine import SegmentSet, load_segment_set, refine, region_iou, save_segment_set


def riou_reference(a: np.ndarray, b: np.ndarray) -> float:
    """Brute-force pixel-count oracle."""
    inter = union = 0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            inter += bool(a[i, j]) and bool(b[i, j])
            union += bool(a[i, j]) or bool(b[i, j])
    return inter / union if union else 0.0


def mask_of(arr) -> BinaryMask:
    return BinaryMask(np.asarray(arr, dtype=bool))


class TestRegionIoU:
    def test_identical_masks(self):
        m = mask_of(np.eye(4))
        assert region_iou(m, m) == 1.0

    def test_disjoint_masks(self):
        a = np.zeros((4, 4), dtype=bool)
        b = np.zeros((4, 4), dtype=bool)
        a[0, 0] = True
        b[3, 3] = True
        assert region_iou(mask_of(a), mask_of(b)) == 0.0

    def test_half_overlap_case(self):
        left = np.zeros((4, 4), dtype=bool)
        left[:, :2] = True
        top = np.zeros((4, 4), dtype=bool)
        top[:2, :] = True
        score = region_iou(mask_of(left), mask_of(top))
        assert score == pytest.approx(4 / 12, abs=1e-9)

    def test_empty_union_is_zero(self):
        empty = mask_of(np.zeros((3, 3)))
        assert region_iou(empty, empty) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            region_iou(mask_of(np.zeros((2, 2))), mask_of(np.zeros((3, 3))))

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**31), density=st.floats(0.0, 1.0))
    def test_matches_oracle_and_properties(self, seed, density):
        rng = np.random.default_rng(seed)
        a = rng.random((5, 6)) < density
        b = rng.random((5, 6)) < 0.5
        score = region_iou(mask_of(a), mask_of(b))
        assert score == pytest.approx(riou_reference(a, b), abs=1e-12)
        assert 0.0 <= score <= 1.0
        assert score == region_iou(mask_of(b), mask_of(a))


class TestRefine:
    def test_perfect_candidate_wins(self):
        location = np.zeros((6, 6), dtype=bool)
        location[1:4, 1:4] = True
        far = np.zeros((6, 6), dtype=bool)
        far[5, 5] = True
        segs = SegmentSet(segments=(mask_of(far), mask_of(location), mask_of(~location)))
        mask, index, score = refine(segs, mask_of(location))
        assert index == 1
        assert score == 1.0
        assert np.array_equal(mask.bits, location)

    def test_tie_breaks_to_lowest_index(self):
        location = np.ones((3, 3), dtype=bool)
        segs = SegmentSet(segments=(mask_of(location), mask_of(location)))
        _, index, score = refine(segs, mask_of(location))
        assert index == 0
        assert score == 1.0

    def test_implanted_best_candidate_selected(self):
        rng = np.random.default_rng(0)
        location = np.zeros((32, 32), dtype=bool)
        location[8:24, 8:24] = True  # 256 px
        implanted = location.copy()
        implanted[8:24, 8:11] = False  # drop ~20% -> rIoU 0.8
        candidates = [mask_of(rng.random((32, 32)) < 0.3) for _ in range(100)]
        candidates.insert(57, mask_of(implanted))
        segs = SegmentSet(segments=tuple(candidates))
        mask, index, score = refine(segs, mask_of(location))
        # exhaustive oracle over every candidate
        oracle = [riou_reference(c.bits, location) for c in candidates]
        assert index == int(np.argmax(oracle))
        assert index == 57
        assert score == pytest.approx(max(oracle), abs=1e-12)

    def test_empty_location_rejected(self):
        segs = SegmentSet(segments=(mask_of(np.ones((2, 2))),))
        with pytest.raises(ValueError, match="no edit region located"):
            refine(segs, mask_of(np.zeros((2, 2))))

    def test_empty_segment_set_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            SegmentSet(segments=())

    def test_order_invariant_up_to_tiebreak(self):
        rng = np.random.default_rng(1)
        location = mask_of(rng.random((10, 10)) < 0.4)
        cands = [mask_of(rng.random((10, 10)) < 0.4) for _ in range(20)]
        _, _, score_fwd = refine(SegmentSet(segments=tuple(cands)), location)
        _, _, score_rev = refine(SegmentSet(segments=tuple(reversed(cands))), location)
        assert score_fwd == score_rev

    def test_dimension_mismatch(self):
        segs = SegmentSet(segments=(mask_of(np.ones((2, 2))),))
        with pytest.raises(ValueError):
            refine(segs, mask_of(np.ones((3, 3))))


class TestSegmentSetIO:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        segs = SegmentSet(
            segments=tuple(mask_of(rng.random((6, 7)) < 0.5) for _ in range(4)),
            source_levels=(0, 1, None, 2),
        )
        save_segment_set(segs, tmp_path / "segs")
        back = load_segment_set(tmp_path / "segs")
        assert len(back) == 4
        assert back.source_levels == (0, 1, None, 2)
        for a, b in zip(segs.segments, back.segments):
            assert np.array_equal(a.bits, b.bits)

    def test_uniform_dims_required(self):
        with pytest.raises(ValueError, match="dimensions"):
            SegmentSet(segments=(mask_of(np.ones((2, 2))), mask_of(np.ones((3, 3)))))
