import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image as PILImage

from zone.grids import (
    BinaryMask,
    Grid2D,
    Grid3D,
    Image,
    read_image,
    read_mask,
    read_tensor,
    resize_bilinear,
    write_image,
    write_mask,
    write_tensor,
)


def bilinear_reference(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Scalar align-corners bilinear oracle."""
    h, w = src.shape
    out = np.zeros((out_h, out_w))
    for i in range(out_h):
        for j in range(out_w):
            y = i * (h - 1) / (out_h - 1) if out_h > 1 else 0.0
            x = j * (w - 1) / (out_w - 1) if out_w > 1 else 0.0
            y0, x0 = int(np.floor(y)), int(np.floor(x))
            y1, x1 = min(y0 + 1, h - 1), min(x0 + 1, w - 1)
            dy, dx = y - y0, x - x0
            out[i, j] = (
                src[y0, x0] * (1 - dy) * (1 - dx)
                + src[y0, x1] * (1 - dy) * dx
                + src[y1, x0] * dy * (1 - dx)
                + src[y1, x1] * dy * dx
            )
    return out


class TestZTF:
    def test_round_trip_2x2(self, tmp_path):
        grid = Grid2D(np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32))
        write_tensor(grid, tmp_path / "g.ztf")
        back = read_tensor(tmp_path / "g.ztf")
        assert isinstance(back, Grid2D)
        assert np.array_equal(back.values, grid.values)

    def test_round_trip_1x1(self, tmp_path):
        grid = Grid2D(np.zeros((1, 1), dtype=np.float32))
        back = _round_trip(grid, tmp_path)
        assert back.values.shape == (1, 1)
        assert back.values[0, 0] == 0.0

    def test_round_trip_rank3(self, tmp_path):
        grid = Grid3D(np.arange(24, dtype=np.float32).reshape(2, 3, 4))
        back = _round_trip(grid, tmp_path)
        assert isinstance(back, Grid3D)
        assert np.array_equal(back.values, grid.values)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.ztf"
        path.write_bytes(b"NOPE" + bytes(32))
        with pytest.raises(ValueError, match="bad magic"):
            read_tensor(path)

    def test_truncated_payload(self, tmp_path):
        grid = Grid2D(np.ones((4, 4), dtype=np.float32))
        path = tmp_path / "t.ztf"
        write_tensor(grid, path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-8])
        with pytest.raises(ValueError, match="truncated"):
            read_tensor(path)

    def test_bad_rank(self, tmp_path):
        path = tmp_path / "r.ztf"
        path.write_bytes(b"ZTF1" + bytes([4]) + bytes(16))
        with pytest.raises(ValueError, match="rank"):
            read_tensor(path)

    def test_non_finite_payload(self, tmp_path):
        path = tmp_path / "nan.ztf"
        grid = Grid2D(np.ones((1, 2), dtype=np.float32))
        write_tensor(grid, path)
        blob = bytearray(path.read_bytes())
        blob[-4:] = np.array([np.nan], dtype="<f4").tobytes()
        path.write_bytes(bytes(blob))
        with pytest.raises(ValueError, match="non-finite"):
            read_tensor(path)

    def test_trailing_data(self, tmp_path):
        path = tmp_path / "x.ztf"
        write_tensor(Grid2D(np.ones((1, 1), dtype=np.float32)), path)
        path.write_bytes(path.read_bytes() + b"junk")
        with pytest.raises(ValueError, match="trailing"):
            read_tensor(path)

    @settings(max_examples=25, deadline=None)
    @given(
        h=st.integers(1, 8),
        w=st.integers(1, 8),
        seed=st.integers(0, 2**31),
        rank3=st.booleans(),
    )
    def test_round_trip_random(self, tmp_path_factory, h, w, seed, rank3):
        rng = np.random.default_rng(seed)
        tmp = tmp_path_factory.mktemp("ztf")
        if rank3:
            arr = rng.normal(size=(2, h, w)).astype(np.float32)
            grid = Grid3D(arr)
        else:
            arr = rng.normal(size=(h, w)).astype(np.float32)
            grid = Grid2D(arr)
        back = _round_trip(grid, tmp)
        assert back.values.tobytes() == grid.values.tobytes()


def _round_trip(grid, tmp_path):
    path = tmp_path / "grid.ztf"
    write_tensor(grid, path)
    return read_tensor(path)


class TestPNG:
    def test_rgb_round_trip(self, tmp_path):
        img = Image(np.full((2, 2, 3), (255, 0, 0), dtype=np.uint8))
        write_image(img, tmp_path / "i.png")
        back = read_image(tmp_path / "i.png")
        assert np.array_equal(back.samples, img.samples)

    def test_rgba_round_trip(self, tmp_path):
        rgba = np.zeros((3, 2, 4), dtype=np.uint8)
        rgba[:, :, :3] = 77
        rgba[0, :, 3] = 255
        img = Image(rgba)
        write_image(img, tmp_path / "a.png")
        back = read_image(tmp_path / "a.png")
        assert np.array_equal(back.samples, img.samples)

    def test_16bit_rejected(self, tmp_path):
        deep = PILImage.fromarray(np.ones((2, 2), dtype=np.uint16) * 1000)
        deep.save(tmp_path / "deep.png")
        with pytest.raises(ValueError, match="bit depth"):
            read_image(tmp_path / "deep.png")

    def test_grayscale_rejected(self, tmp_path):
        PILImage.fromarray(np.zeros((2, 2), dtype=np.uint8), mode="L").save(
            tmp_path / "gray.png"
        )
        with pytest.raises(ValueError, match="color type"):
            read_image(tmp_path / "gray.png")

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**31), alpha=st.booleans())
    def test_round_trip_random(self, tmp_path_factory, seed, alpha):
        rng = np.random.default_rng(seed)
        tmp = tmp_path_factory.mktemp("png")
        channels = 4 if alpha else 3
        arr = rng.integers(0, 256, size=(5, 7, channels), dtype=np.uint8)
        if alpha:
            arr[:, :, 3] = np.where(rng.random((5, 7)) < 0.5, 0, 255)
        img = Image(arr)
        write_image(img, tmp / "r.png")
        assert np.array_equal(read_image(tmp / "r.png").samples, arr)

    def test_mask_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        mask = BinaryMask(rng.random((9, 13)) < 0.4)
        write_mask(mask, tmp_path / "m.png")
        back = read_mask(tmp_path / "m.png")
        assert np.array_equal(back.bits, mask.bits)


class TestResize:
    def test_constant_stays_constant(self):
        grid = Grid2D(np.full((3, 5), 7.0, dtype=np.float32))
        out = resize_bilinear(grid, 11, 2)
        assert np.all(out.values == 7.0)

    def test_midpoint_interpolation(self):
        grid = Grid2D(np.array([[0.0, 1.0]], dtype=np.float32))
        out = resize_bilinear(grid, 1, 3)
        expected = bilinear_reference(grid.values.astype(np.float64), 1, 3)
        assert out.values[0, 1] == pytest.approx(0.5, abs=1e-7)
        np.testing.assert_allclose(out.values, expected, atol=1e-6)

    def test_identity(self):
        rng = np.random.default_rng(1)
        arr = rng.normal(size=(6, 4)).astype(np.float32)
        out = resize_bilinear(Grid2D(arr), 6, 4)
        np.testing.assert_allclose(out.values, arr, atol=1e-6)

    def test_matches_reference(self):
        rng = np.random.default_rng(2)
        arr = rng.normal(size=(5, 7)).astype(np.float32)
        out = resize_bilinear(Grid2D(arr), 9, 3)
        np.testing.assert_allclose(
            out.values, bilinear_reference(arr.astype(np.float64), 9, 3), atol=1e-5
        )

    @settings(max_examples=30, deadline=None)
    @given(
        h=st.integers(1, 6),
        w=st.integers(1, 6),
        oh=st.integers(1, 9),
        ow=st.integers(1, 9),
        seed=st.integers(0, 2**31),
    )
    def test_bounded_by_input_range(self, h, w, oh, ow, seed):
        rng = np.random.default_rng(seed)
        arr = rng.normal(size=(h, w)).astype(np.float32)
        out = resize_bilinear(Grid2D(arr), oh, ow)
        assert out.values.min() >= arr.min()
        assert out.values.max() <= arr.max()

    def test_zero_target_rejected(self):
        with pytest.raises(ValueError):
            resize_bilinear(Grid2D(np.zeros((2, 2), dtype=np.float32)), 0, 3)


class TestConstructors:
    def test_grid2d_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            Grid2D(np.zeros(4, dtype=np.float32))
        with pytest.raises(ValueError):
            Grid2D(np.zeros((0, 3), dtype=np.float32))
        with pytest.raises(ValueError):
            Grid2D(np.array([[np.inf]], dtype=np.float32))

    def test_from_flat_length_check(self):
        with pytest.raises(ValueError, match="length"):
            Grid2D.from_flat(2, 2, [1.0, 2.0, 3.0])

    def test_grid3d_rejects_bad(self):
        with pytest.raises(ValueError):
            Grid3D(np.zeros((2, 2), dtype=np.float32))
        with pytest.raises(ValueError):
            Grid3D(np.array([[[np.nan]]], dtype=np.float32))

    def test_image_rejects_soft_alpha(self):
        arr = np.zeros((1, 1, 4), dtype=np.uint8)
        arr[0, 0, 3] = 128
        with pytest.raises(ValueError, match="alpha"):
            Image(arr)

    def test_image_rejects_bad_channels(self):
        with pytest.raises(ValueError):
            Image(np.zeros((2, 2, 2), dtype=np.uint8))
        with pytest.raises(ValueError):
            Image(np.zeros((2, 2, 3), dtype=np.float32))

    def test_mask_requires_bool(self):
        with pytest.raises(ValueError):
            BinaryMask(np.zeros((2, 2), dtype=np.uint8))

    def test_values_are_read_only(self):
        grid = Grid2D(np.zeros((2, 2), dtype=np.float32))
        with pytest.raises(ValueError):
            grid.values[0, 0] = 1.0

    def test_mask_accessors(self):
        mask = BinaryMask(np.array([[True, False], [True, True]]))
        assert mask.area == 3
        assert mask.total == 4
        assert (~mask).area == 1
