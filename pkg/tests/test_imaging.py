import numpy as np
import pytest

from signkit.errors import ValidationError
from signkit.geometry import Box
from signkit.imaging import (
    FeatureTensor,
    PixelImage,
    channel_stats,
    crop,
    ensure_rgb,
    load_image,
    normalize,
    resize_area,
    save_png,
    standardize,
    to_gray,
)

from conftest import constant_image


def random_image(rng, width, height, channels=3):
    return PixelImage(rng.integers(0, 256, size=(height, width, channels), dtype=np.uint8))


class TestPixelImage:
    def test_promotes_2d_to_single_channel(self):
        img = PixelImage(np.zeros((4, 5), dtype=np.uint8))
        assert (img.height, img.width, img.channels) == (4, 5, 1)

    def test_rejects_bad_dtype(self):
        with pytest.raises(ValidationError):
            PixelImage(np.zeros((4, 5, 3), dtype=np.float32))

    def test_rejects_bad_channel_count(self):
        with pytest.raises(ValidationError):
            PixelImage(np.zeros((4, 5, 2), dtype=np.uint8))


class TestResize:
    def test_identity_is_byte_identical(self):
        rng = np.random.default_rng(0)
        img = random_image(rng, 37, 23)
        out = resize_area(img, 37, 23)
        assert np.array_equal(out.pixels, img.pixels)

    def test_two_by_two_mean(self):
        img = PixelImage(np.array([[10, 20], [30, 40]], dtype=np.uint8))
        out = resize_area(img, 1, 1)
        assert out.pixels[0, 0, 0] == 25

    def test_constant_preserved(self):
        img = PixelImage(constant_image(100, 60, 137))
        out = resize_area(img, 50, 30)
        assert np.all(out.pixels == 137)

    def test_constant_preserved_upscale(self):
        img = PixelImage(constant_image(10, 6, 91))
        out = resize_area(img, 40, 24)
        assert np.all(out.pixels == 91)

    @pytest.mark.parametrize("factor", [2, 4])
    def test_integral_downsample_equals_block_means(self, factor):
        rng = np.random.default_rng(factor)
        img = random_image(rng, 16 * factor, 8 * factor)
        out = resize_area(img, 16, 8)
        # oracle: direct block averaging with shared round-half-even convention
        blocks = img.pixels.astype(np.float64).reshape(8, factor, 16, factor, 3)
        expected = np.rint(blocks.mean(axis=(1, 3))).astype(np.uint8)
        assert np.array_equal(out.pixels, expected)

    def test_mixed_axes(self):
        rng = np.random.default_rng(7)
        img = random_image(rng, 12, 5)
        out = resize_area(img, 6, 10)  # shrink x, grow y
        assert (out.width, out.height, out.channels) == (6, 10, 3)

    def test_rejects_zero_output(self):
        with pytest.raises(ValidationError):
            resize_area(PixelImage(constant_image(4, 4, 0)), 0, 4)


class TestCrop:
    def test_full_image(self):
        rng = np.random.default_rng(1)
        img = random_image(rng, 20, 10)
        out = crop(img, Box(0, 0, 20, 10))
        assert np.array_equal(out.pixels, img.pixels)

    def test_single_pixel(self):
        rng = np.random.default_rng(2)
        img = random_image(rng, 20, 10)
        out = crop(img, Box(0, 0, 1, 1))
        assert np.array_equal(out.pixels, img.pixels[:1, :1])

    def test_partition_reassembles(self):
        rng = np.random.default_rng(3)
        img = random_image(rng, 20, 10)
        left = crop(img, Box(0, 0, 8, 10))
        right = crop(img, Box(8, 0, 20, 10))
        assert np.array_equal(np.concatenate([left.pixels, right.pixels], axis=1), img.pixels)

    def test_crop_composes(self):
        rng = np.random.default_rng(4)
        img = random_image(rng, 30, 30)
        outer = Box(5, 6, 25, 26)
        inner = Box(2, 3, 10, 12)
        twice = crop(crop(img, outer), inner)
        direct = crop(img, Box(5 + 2, 6 + 3, 5 + 10, 6 + 12))
        assert np.array_equal(twice.pixels, direct.pixels)

    def test_out_of_bounds_rejected(self):
        img = PixelImage(constant_image(10, 10, 0))
        with pytest.raises(ValidationError):
            crop(img, Box(5, 5, 15, 9))


class TestGray:
    def test_white_and_black(self):
        assert to_gray(PixelImage(constant_image(2, 2, 255))).pixels.max() == 255
        assert to_gray(PixelImage(constant_image(2, 2, 0))).pixels.max() == 0

    def test_pure_red(self):
        img = np.zeros((1, 1, 3), dtype=np.uint8)
        img[..., 0] = 255
        assert to_gray(PixelImage(img)).pixels[0, 0, 0] == 76  # 0.299 * 255 rounded

    def test_single_channel_passthrough(self):
        img = PixelImage(constant_image(3, 3, 50, channels=1))
        assert to_gray(img) is img

    def test_ensure_rgb_replicates_channels(self):
        gray = PixelImage(constant_image(3, 3, 50, channels=1))
        rgb = ensure_rgb(gray)
        assert rgb.channels == 3
        assert np.all(rgb.pixels == 50)


class TestScaling:
    def test_normalize_extremes(self):
        assert np.all(normalize(PixelImage(constant_image(2, 2, 0))).data == 0.0)
        assert np.all(normalize(PixelImage(constant_image(2, 2, 255))).data == 1.0)

    def test_normalize_bounds_and_roundtrip(self):
        rng = np.random.default_rng(5)
        img = random_image(rng, 9, 7)
        tensor = normalize(img)
        assert tensor.data.min() >= 0.0 and tensor.data.max() <= 1.0
        recovered = np.rint(tensor.data * 255).astype(np.uint8)
        assert np.array_equal(recovered, img.pixels)

    def test_self_standardize(self):
        rng = np.random.default_rng(6)
        tensor = normalize(random_image(rng, 32, 24))
        out = standardize(tensor)
        assert np.all(np.abs(out.data.mean(axis=(0, 1))) < 1e-6)
        assert np.all(np.abs(out.data.std(axis=(0, 1)) - 1.0) < 1e-6)

    def test_zero_std_names_channel(self):
        tensor = normalize(PixelImage(constant_image(4, 4, 10)))
        with pytest.raises(ValidationError, match="channel 0"):
            standardize(tensor)

    def test_dataset_stats_standardize(self):
        rng = np.random.default_rng(8)
        tensors = [normalize(random_image(rng, 16, 16)) for _ in range(5)]
        mean, std = channel_stats(tensors)
        pooled = np.concatenate([t.data.reshape(-1, 3) for t in tensors])
        assert mean == pytest.approx(pooled.mean(axis=0), abs=1e-12)
        assert std == pytest.approx(pooled.std(axis=0), abs=1e-12)
        out = standardize(tensors[0], mean, std)
        assert out.data.shape == tensors[0].data.shape


class TestPngIO:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(9)
        img = random_image(rng, 21, 13)
        path = tmp_path / "img.png"
        save_png(img, path)
        again = load_image(path)
        assert np.array_equal(again.pixels, img.pixels)

    def test_gray_round_trip(self, tmp_path):
        img = PixelImage(constant_image(5, 4, 77, channels=1))
        path = tmp_path / "gray.png"
        save_png(img, path)
        again = load_image(path)
        assert again.channels == 1
        assert np.all(again.pixels == 77)
