import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zone.fixtures import FixtureSpec, paint_edit, region_mask, synth_original
from zone.grids import BinaryMask, Grid2D, Image
from zone.smoother import (
    SmootherConfig,
    Spectrum,
    apply_mask,
    close_and_fill,
    difference_mask,
    dilate,
    fft2,
    ifft2,
    lowpass,
    smooth,
)


# ---------------------------------------------------------------- oracles

def dft2_reference(x: np.ndarray) -> np.ndarray:
    """O(n^4) direct DFT, DC at index (0, 0)."""
    h, w = x.shape
    out = np.zeros((h, w), dtype=complex)
    for u in range(h):
        for v in range(w):
            acc = 0.0 + 0.0j
            for m in range(h):
                for n in range(w):
                    acc += x[m, n] * np.exp(-2j * np.pi * (u * m / h + v * n / w))
            out[u, v] = acc
    return out


def center_shift(spec: np.ndarray) -> np.ndarray:
    h, w = spec.shape
    return np.roll(np.roll(spec, h // 2, axis=0), w // 2, axis=1)


def dilate_reference(bits: np.ndarray, radius: float) -> np.ndarray:
    """Brute-force distance-transform dilation oracle."""
    h, w = bits.shape
    out = np.zeros_like(bits)
    ys, xs = np.nonzero(bits)
    for i in range(h):
        for j in range(w):
            if len(ys) and np.min((ys - i) ** 2 + (xs - j) ** 2) <= radius * radius:
                out[i, j] = True
    return out


def closing_reference(bits: np.ndarray, radius: float) -> np.ndarray:
    """Brute-force infinite-domain closing: dilate then erode on a padded canvas."""
    k = int(np.floor(radius))
    padded = np.pad(bits, k)
    dilated = dilate_reference(padded, radius)
    h, w = dilated.shape
    eroded = np.zeros_like(dilated)
    for i in range(h):
        for j in range(w):
            keep = True
            for di in range(-k, k + 1):
                for dj in range(-k, k + 1):
                    if di * di + dj * dj > radius * radius:
                        continue
                    y, x = i + di, j + dj
                    if not (0 <= y < h and 0 <= x < w and dilated[y, x]):
                        keep = False
            eroded[i, j] = keep
    return eroded[k : k + bits.shape[0], k : k + bits.shape[1]] if k else eroded


def fill_reference(bits: np.ndarray) -> np.ndarray:
    """Flood-fill oracle: background connected to the border stays empty."""
    h, w = bits.shape
    reachable = np.zeros((h, w), dtype=bool)
    stack = [
        (i, j)
        for i in range(h)
        for j in range(w)
        if (i in (0, h - 1) or j in (0, w - 1)) and not bits[i, j]
    ]
    for cell in stack:
        reachable[cell] = True
    while stack:
        i, j = stack.pop()
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            y, x = i + di, j + dj
            if 0 <= y < h and 0 <= x < w and not bits[y, x] and not reachable[y, x]:
                reachable[y, x] = True
                stack.append((y, x))
    return bits | ~(bits | reachable)


def mask_of(arr) -> BinaryMask:
    return BinaryMask(np.asarray(arr, dtype=bool))


def iou(a: BinaryMask, b: BinaryMask) -> float:
    inter = np.count_nonzero(a.bits & b.bits)
    union = np.count_nonzero(a.bits | b.bits)
    return inter / union if union else 0.0


# ---------------------------------------------------------------- dilation

class TestDilate:
    def test_radius_zero_identity(self):
        rng = np.random.default_rng(0)
        mask = mask_of(rng.random((6, 6)) < 0.5)
        out = dilate(mask, 0)
        assert np.array_equal(out.bits, mask.bits)

    def test_single_pixel_radius_one_plus_shape(self):
        bits = np.zeros((5, 5), dtype=bool)
        bits[2, 2] = True
        out = dilate(mask_of(bits), 1)
        expected = dilate_reference(bits, 1)
        assert out.area == 5
        assert np.array_equal(out.bits, expected)

    def test_all_ones_saturated(self):
        mask = mask_of(np.ones((4, 4)))
        assert np.array_equal(dilate(mask, 3).bits, mask.bits)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**31), radius=st.integers(0, 4))
    def test_matches_distance_oracle(self, seed, radius):
        rng = np.random.default_rng(seed)
        bits = rng.random((9, 8)) < 0.2
        out = dilate(mask_of(bits), radius)
        assert np.array_equal(out.bits, dilate_reference(bits, radius))

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**31), r1=st.integers(0, 3))
    def test_extensive_and_monotone(self, seed, r1):
        rng = np.random.default_rng(seed)
        mask = mask_of(rng.random((8, 8)) < 0.3)
        small = dilate(mask, r1)
        large = dilate(mask, r1 + 1)
        assert np.all(small.bits | ~mask.bits)  # output contains input
        assert np.all(large.bits | ~small.bits)  # monotone in radius

    def test_negative_radius_rejected(self):
        with pytest.raises(ValueError):
            dilate(mask_of(np.ones((2, 2))), -1)


# ---------------------------------------------------------------- fft

class TestFFT:
    def test_constant_image_dc_only(self):
        grid = Grid2D(np.full((4, 8), 3.0, dtype=np.float32))
        spec = fft2(grid)
        dc = spec.values[2, 4]
        assert dc == pytest.approx(3.0 * 32, abs=1e-9)
        rest = spec.values.copy()
        rest[2, 4] = 0.0
        assert np.max(np.abs(rest)) < 1e-9

    def test_impulse_flat_spectrum(self):
        arr = np.zeros((8, 8), dtype=np.float32)
        arr[0, 0] = 1.0
        spec = fft2(Grid2D(arr))
        np.testing.assert_allclose(np.abs(spec.values), 1.0, atol=1e-12)

    def test_matches_direct_dft(self):
        rng = np.random.default_rng(1)
        arr = rng.normal(size=(8, 8)).astype(np.float32)
        spec = fft2(Grid2D(arr))
        ref = center_shift(dft2_reference(arr.astype(np.float64)))
        np.testing.assert_allclose(spec.values, ref, atol=1e-6)

    def test_matches_direct_dft_odd_size(self):
        rng = np.random.default_rng(2)
        arr = rng.normal(size=(5, 7)).astype(np.float32)
        spec = fft2(Grid2D(arr))
        ref = center_shift(dft2_reference(arr.astype(np.float64)))
        np.testing.assert_allclose(spec.values, ref, atol=1e-6)

    @settings(max_examples=20, deadline=None)
    @given(h=st.sampled_from([1, 2, 3, 4, 5, 8]), w=st.sampled_from([1, 2, 3, 4, 6, 8]),
           seed=st.integers(0, 2**31))
    def test_round_trip(self, h, w, seed):
        rng = np.random.default_rng(seed)
        arr = rng.normal(size=(h, w)).astype(np.float32)
        back = ifft2(fft2(Grid2D(arr)))
        assert np.max(np.abs(back.values - arr)) < 1e-4

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_parseval(self, seed):
        rng = np.random.default_rng(seed)
        arr = rng.normal(size=(8, 4)).astype(np.float32)
        spec = fft2(Grid2D(arr))
        spatial = np.sum(arr.astype(np.float64) ** 2)
        spectral = np.sum(np.abs(spec.values) ** 2) / arr.size
        assert spectral == pytest.approx(spatial, rel=1e-3)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**31), a=st.floats(-3, 3), b=st.floats(-3, 3))
    def test_linearity(self, seed, a, b):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(4, 4)).astype(np.float32)
        y = rng.normal(size=(4, 4)).astype(np.float32)
        combined = fft2(Grid2D((a * x + b * y).astype(np.float32)))
        separate = a * fft2(Grid2D(x)).values + b * fft2(Grid2D(y)).values
        np.testing.assert_allclose(combined.values, separate, atol=1e-4)


# ---------------------------------------------------------------- lowpass

class TestLowpass:
    def test_huge_cutoff_identity(self):
        rng = np.random.default_rng(3)
        spec = fft2(Grid2D(rng.normal(size=(8, 8)).astype(np.float32)))
        out = lowpass(spec, cutoff=8)  # diagonal/2 = sqrt(32+32)/... covers all
        assert np.array_equal(out.values, spec.values)

    def test_tiny_cutoff_keeps_dc_only(self):
        rng = np.random.default_rng(4)
        grid = Grid2D(rng.normal(size=(8, 8)).astype(np.float32))
        spec = fft2(grid)
        out = lowpass(spec, cutoff=0.5)
        nonzero = np.nonzero(out.values)
        assert len(nonzero[0]) <= 1
        if len(nonzero[0]):
            assert (nonzero[0][0], nonzero[1][0]) == (4, 4)

    def test_pass_bin_count_512_d0_200(self):
        # exhaustive lattice count within radius 200 of the centered DC bin
        expected = 0
        for r in range(512):
            for c in range(512):
                if (r - 256) ** 2 + (c - 256) ** 2 <= 200 * 200:
                    expected += 1
        spec = Spectrum(np.ones((512, 512), dtype=complex))
        out = lowpass(spec, cutoff=200)
        assert int(np.count_nonzero(out.values)) == expected

    def test_idempotent_exactly(self):
        rng = np.random.default_rng(5)
        spec = fft2(Grid2D(rng.normal(size=(16, 16)).astype(np.float32)))
        once = lowpass(spec, cutoff=4)
        twice = lowpass(once, cutoff=4)
        assert np.array_equal(once.values, twice.values)

    def test_nonpositive_cutoff_rejected(self):
        with pytest.raises(ValueError):
            lowpass(Spectrum(np.ones((2, 2), dtype=complex)), 0)


# ---------------------------------------------------------------- g stage

class TestCloseAndFill:
    def test_solid_rectangle_unchanged(self):
        bits = np.zeros((12, 12), dtype=bool)
        bits[3:9, 2:10] = True
        out = close_and_fill(mask_of(bits), closing_radius=2)
        assert np.array_equal(out.bits, bits)

    def test_donut_filled_solid(self):
        bits = np.zeros((15, 15), dtype=bool)
        yy, xx = np.mgrid[0:15, 0:15]
        ring = np.abs(np.sqrt((yy - 7) ** 2 + (xx - 7) ** 2) - 5) < 0.7
        out = close_and_fill(mask_of(ring), closing_radius=1)
        expected = fill_reference(closing_reference(ring, 1))
        assert np.array_equal(out.bits, expected)
        # the hole is actually gone
        assert out.bits[7, 7]

    def test_blobs_across_small_gap_merge(self):
        radius = 3
        bits = np.zeros((16, 21), dtype=bool)
        bits[2:14, 2:8] = True
        bits[2:14, 8 + 2 * radius - 1 :19] = True  # gap of 2r-1 columns
        out = close_and_fill(mask_of(bits), closing_radius=radius)
        ref = fill_reference(closing_reference(bits, radius))
        assert np.array_equal(out.bits, ref)
        assert out.bits[8, 10]  # the gap is bridged

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 2**31), radius=st.integers(1, 3))
    def test_matches_brute_force_pipeline(self, seed, radius):
        rng = np.random.default_rng(seed)
        bits = rng.random((10, 11)) < 0.25
        out = close_and_fill(mask_of(bits), closing_radius=radius)
        ref = fill_reference(closing_reference(bits, radius))
        assert np.array_equal(out.bits, ref)

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_extensive(self, seed):
        rng = np.random.default_rng(seed)
        bits = rng.random((10, 10)) < 0.3
        out = close_and_fill(mask_of(bits), closing_radius=2)
        assert np.all(out.bits | ~bits)


# ---------------------------------------------------------------- difference

def difference_mask_reference(layer, orig, config):
    """Same composition evaluated through the direct-DFT oracle."""
    weights = np.array([0.299, 0.587, 0.114])
    luma_l = (layer.samples[:, :, :3].astype(np.float64) @ weights).astype(np.float32)
    luma_o = (orig.samples[:, :, :3].astype(np.float64) @ weights).astype(np.float32)
    h, w = luma_l.shape
    cutoff = config.cutoff_D0 * min(h, w) / 512.0
    spec_l = center_shift(dft2_reference(luma_l.astype(np.float64)))
    spec_o = center_shift(dft2_reference(luma_o.astype(np.float64)))
    rr = np.arange(h)[:, None] - h // 2
    cc = np.arange(w)[None, :] - w // 2
    keep = rr * rr + cc * cc <= cutoff * cutoff
    diff = np.where(keep, spec_l - spec_o, 0.0)
    # invert: undo the center shift then inverse DFT = conj(dft(conj(x)))/N
    unshifted = np.roll(np.roll(diff, -(h // 2), axis=0), -(w // 2), axis=1)
    spatial = np.conj(dft2_reference(np.conj(unshifted))) / (h * w)
    return np.abs(spatial.real) > config.g_threshold


class TestDifferenceMask:
    def test_identical_inputs_empty(self):
        rng = np.random.default_rng(6)
        img = Image(rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8))
        out = difference_mask(img, img, SmootherConfig())
        assert out.area == 0

    def test_below_threshold_everywhere_empty(self):
        base = np.full((16, 16, 3), 100, dtype=np.uint8)
        nudged = np.full((16, 16, 3), 105, dtype=np.uint8)  # luma delta 5 < 10
        out = difference_mask(Image(base), Image(nudged), SmootherConfig())
        assert out.area == 0

    def test_disk_difference_against_direct_dft_oracle(self):
        h = w = 32
        disk = np.zeros((h, w), dtype=bool)
        yy, xx = np.mgrid[0:h, 0:w]
        disk[(yy - 16) ** 2 + (xx - 16) ** 2 <= 8 * 8] = True
        orig = Image(np.zeros((h, w, 3), dtype=np.uint8))
        layer_arr = np.zeros((h, w, 3), dtype=np.uint8)
        layer_arr[disk] = 255
        layer = Image(layer_arr)
        config = SmootherConfig()
        got = difference_mask(layer, orig, config)
        ref = difference_mask_reference(layer, orig, config)
        assert np.array_equal(got.bits, ref)
        covered = np.count_nonzero(got.bits & disk) / np.count_nonzero(disk)
        assert covered >= 0.9

    def test_dimension_mismatch(self):
        a = Image(np.zeros((4, 4, 3), dtype=np.uint8))
        b = Image(np.zeros((5, 4, 3), dtype=np.uint8))
        with pytest.raises(ValueError, match="mismatch"):
            difference_mask(a, b, SmootherConfig())


# ---------------------------------------------------------------- smooth

class TestSmooth:
    def test_identical_images_empty_mask_for_any_refined(self):
        orig = synth_original(13, 64, 64)
        rng = np.random.default_rng(13)
        candidates = [
            np.ones((64, 64), dtype=bool),
            rng.random((64, 64)) < 0.4,
            np.pad(np.ones((20, 20), dtype=bool), 22),
        ]
        for refined in candidates:
            out = smooth(orig, orig, mask_of(refined), SmootherConfig())
            assert out.area == 0

    def test_disk_recovery_after_erosion(self):
        from scipy import ndimage

        spec = FixtureSpec(seed=3, shape="disk", extent=128)
        region = region_mask(spec)
        orig = synth_original(3, 512, 512)
        canvas = paint_edit(orig, region, 3)
        eroded = mask_of(ndimage.binary_erosion(region.bits, iterations=3))
        final = smooth(orig, canvas, eroded, SmootherConfig())
        assert iou(final, region) >= 0.90

    def test_full_refined_mask_containment(self):
        orig = synth_original(5, 64, 64)
        spec = FixtureSpec(seed=5, height=64, width=64, shape="disk", extent=24)
        region = region_mask(spec)
        canvas = paint_edit(orig, region, 5)
        config = SmootherConfig()
        full = mask_of(np.ones((64, 64)))
        out = smooth(orig, canvas, full, config)
        support = difference_mask(canvas, orig, config)
        closed_support = close_and_fill(support, config.closing_radius)
        assert np.all(closed_support.bits | ~out.bits)  # out is a subset

    def test_apply_mask_zeroes_outside(self):
        rng = np.random.default_rng(8)
        img = Image(rng.integers(0, 256, size=(4, 4, 3), dtype=np.uint8))
        bits = np.zeros((4, 4), dtype=bool)
        bits[1, 1] = True
        out = apply_mask(img, mask_of(bits))
        assert np.array_equal(out.samples[1, 1], img.samples[1, 1])
        assert out.samples.sum() == img.samples[1, 1].sum()

    def test_dimension_checks(self):
        orig = synth_original(1, 8, 8)
        with pytest.raises(ValueError):
            smooth(orig, synth_original(1, 9, 9), mask_of(np.ones((8, 8))), SmootherConfig())
