import numpy as np
import pytest
from scipy import ndimage
from skimage import color as skcolor

from bwsdetect.errors import DataError, DegenerateFeatureWarning, EmptyBagError
from bwsdetect.evalrun import SynthConfig, generate_images
from bwsdetect.features import (
    FeatureConfig,
    RegionFeatureExtractor,
    bag_from_image,
    lab_histogram,
    lbp_histogram,
    mr8_histogram,
    mr8_responses,
    region_feature_vector,
    srgb_to_lab,
)
from bwsdetect.imaging import regions_from_label_plane

CFG = FeatureConfig()

CORNER_COLORS = [(r, g, b) for r in (0, 255) for g in (0, 255)
                 for b in (0, 255)]


class TestSrgbToLab:
    def test_white_and_black(self):
        L, a, b = srgb_to_lab(255, 255, 255)
        assert L == pytest.approx(100.0, abs=0.01)
        assert a == pytest.approx(0.0, abs=0.01)
        assert b == pytest.approx(0.0, abs=0.01)
        assert srgb_to_lab(0, 0, 0) == pytest.approx((0.0, 0.0, 0.0),
                                                     abs=0.01)

    def test_pure_blue(self):
        L, a, b = srgb_to_lab(0, 0, 255)
        assert L == pytest.approx(32.3, abs=0.5)
        assert a == pytest.approx(79.2, abs=0.5)
        assert b == pytest.approx(-107.9, abs=0.5)

    def test_corner_colors_match_reference(self):
        # independent oracle: scikit-image's conversion path
        for r, g, b in CORNER_COLORS:
            ours = np.array(srgb_to_lab(r, g, b))
            ref = skcolor.rgb2lab(
                np.array([[[r / 255.0, g / 255.0, b / 255.0]]]))[0, 0]
            assert np.abs(ours - ref).max() < 0.5

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            srgb_to_lab(-1, 0, 0)


class TestLabHistogram:
    def test_single_color_bins(self):
        lab = np.tile([50.0, 0.0, 0.0], (13, 1))
        hist = lab_histogram(lab, CFG)
        assert hist.shape == (108,)
        assert np.nonzero(hist)[0].tolist() == [10, 20 + 22, 64 + 22]
        assert hist[10] == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            lab_histogram(np.empty((0, 3)), CFG)

    def test_blocks_normalized(self, rng):
        lab = np.column_stack([rng.uniform(0, 100, 500),
                               rng.uniform(-110, 110, 500),
                               rng.uniform(-110, 110, 500)])
        hist = lab_histogram(lab, CFG)
        assert hist[:20].sum() == pytest.approx(1.0, abs=1e-9)
        assert hist[20:64].sum() == pytest.approx(1.0, abs=1e-9)
        assert hist[64:].sum() == pytest.approx(1.0, abs=1e-9)

    def test_out_of_range_values_clamped(self):
        lab = np.array([[150.0, -300.0, 300.0], [-20.0, 0.0, 110.0]])
        hist = lab_histogram(lab, CFG)
        assert hist[19] == 0.5 and hist[0] == 0.5  # L: top bin + bottom bin
        assert hist.sum() == pytest.approx(3.0)


class TestLbp:
    def region(self, lo, hi):
        ys, xs = np.mgrid[lo:hi, lo:hi]
        return ys.ravel(), xs.ravel()

    def test_flat_region_codes_all_p(self):
        gray = np.full((12, 12), 90, dtype=np.uint8)
        hist = lbp_histogram(gray, self.region(3, 9), CFG)
        assert hist.shape == (28,)
        # all-ones uniform pattern: bin P for each variant
        assert hist[8] == 1.0
        assert hist[10 + 16] == 1.0

    def test_step_edge_stays_uniform(self):
        gray = np.zeros((24, 24), dtype=np.uint8)
        gray[:, 12:] = 200
        hist = lbp_histogram(gray, self.region(4, 20), CFG)
        assert hist[9] == 0.0   # non-uniform bin, P=8 variant
        assert hist[27] == 0.0  # non-uniform bin, P=16 variant

    def test_blocks_normalized(self, rng):
        gray = rng.integers(0, 256, size=(20, 20), dtype=np.uint8)
        hist = lbp_histogram(gray, self.region(4, 16), CFG)
        assert hist[:10].sum() == pytest.approx(1.0, abs=1e-9)
        assert hist[10:].sum() == pytest.approx(1.0, abs=1e-9)

    def test_no_interior_pixel_warns_and_zeroes(self):
        gray = np.full((10, 10), 7, dtype=np.uint8)
        ys = np.array([0]); xs = np.array([0])  # corner: no neighborhood
        with pytest.warns(DegenerateFeatureWarning):
            hist = lbp_histogram(gray, (ys, xs), CFG)
        assert np.all(hist == 0)


class TestMr8:
    def test_constant_image_all_zero_with_warning(self):
        with pytest.warns(DegenerateFeatureWarning):
            resp = mr8_responses(np.full((60, 60), 50, dtype=np.uint8))
        assert resp.shape == (8, 60, 60)
        assert np.all(resp == 0)

    def test_too_small_image_names_minimum(self):
        with pytest.raises(DataError, match="49x49"):
            mr8_responses(np.zeros((48, 60)))

    def test_deterministic(self, rng):
        gray = rng.integers(0, 256, size=(64, 64)).astype(np.uint8)
        a = mr8_responses(gray)
        b = mr8_responses(gray.copy())
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("angle", [30, 60, 90])
    def test_rotation_invariance_of_collapsed_channels(self, angle):
        size = 240
        yy, xx = np.mgrid[:size, :size]
        bars = 127.5 + 110 * np.sin(2 * np.pi * xx / 16.0)
        rotated = ndimage.rotate(bars, angle, reshape=False, order=3,
                                 mode="reflect")
        r0 = mr8_responses(bars)
        r1 = mr8_responses(rotated)
        center = ((yy - size / 2) ** 2 + (xx - size / 2) ** 2
                  <= (size * 0.25) ** 2)
        for ch in range(6):  # edge and bar channels
            m0 = np.abs(r0[ch][center]).mean()
            m1 = np.abs(r1[ch][center]).mean()
            assert abs(m0 - m1) / max(m0, m1) <= 0.10

    def test_histogram_of_zero_responses(self):
        resp = np.zeros((8, 10, 10))
        ys, xs = np.mgrid[2:5, 2:5]
        hist = mr8_histogram(resp, (ys.ravel(), xs.ravel()), CFG)
        assert hist.shape == (64,)
        zero_bin = int((0.0 + CFG.mr8_clip) / (2 * CFG.mr8_clip / CFG.mr8_bins))
        for ch in range(8):
            assert hist[ch * 8 + zero_bin] == 1.0

    def test_histogram_spread_is_near_uniform(self, rng):
        vals = rng.uniform(-3, 3, size=(8, 40, 40))
        ys, xs = np.mgrid[0:40, 0:40]
        hist = mr8_histogram(vals, (ys.ravel(), xs.ravel()), CFG)
        for ch in range(8):
            block = hist[ch * 8:(ch + 1) * 8]
            assert block.sum() == pytest.approx(1.0, abs=1e-9)
            assert block.max() <= 0.25

    def test_clip_boundaries_land_in_end_bins(self):
        resp = np.zeros((8, 4, 4))
        resp[:, 0, 0] = 5.0   # clips to +3 -> top bin
        resp[:, 0, 1] = -5.0  # clips to -3 -> bottom bin
        ys = np.array([0, 0]); xs = np.array([0, 1])
        hist = mr8_histogram(resp, (ys, xs), CFG)
        for ch in range(8):
            assert hist[ch * 8 + 7] == 0.5
            assert hist[ch * 8 + 0] == 0.5


class TestRegionFeatures:
    def test_default_dimension(self):
        assert CFG.dim == 200
        assert FeatureConfig(include_texture=False).dim == 108
        assert FeatureConfig(include_color=False).dim == 92

    def test_fingerprint_tracks_config(self):
        assert CFG.fingerprint() == FeatureConfig().fingerprint()
        assert CFG.fingerprint() != \
            FeatureConfig(lab_bin_size=10).fingerprint()
        assert CFG.fingerprint() != \
            FeatureConfig(include_texture=False).fingerprint()

    def test_vector_entries_bounded(self, rng):
        img = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
        plane = np.ones((64, 64), dtype=np.int32)
        region = regions_from_label_plane(plane).regions[0]
        inst = region_feature_vector(img, region, CFG)
        assert inst.dim == 200
        assert np.all(inst.features >= 0) and np.all(inst.features <= 1)
        assert np.all(np.isfinite(inst.features))

    def test_histogram_blocks_sum_to_one(self, rng):
        img = rng.integers(0, 256, size=(56, 56, 3), dtype=np.uint8)
        extractor = RegionFeatureExtractor(img, CFG)
        plane = np.zeros((56, 56), dtype=np.int32)
        plane[10:30, 10:30] = 1
        region = regions_from_label_plane(plane).regions[0]
        v = extractor.vector(region)
        # blocks: 20 + 44 + 44 | 10 + 18 | 8 x 8
        edges = np.cumsum([20, 44, 44, 10, 18] + [8] * 8)
        start = 0
        for end in edges:
            assert v[start:end].sum() == pytest.approx(1.0, abs=1e-9)
            start = end


class TestBagFromImage:
    def test_two_area_lesion_gives_two_instances(self):
        img = generate_images(SynthConfig(
            mode="images", n_pos=1, n_neg=1, image_size=128, seed=5))[0]
        assert img.label == +1
        bag = bag_from_image(img.image, label=img.label, bag_id=img.image_id)
        assert bag.m == 2
        assert bag.dim == 200
        assert bag.label == +1

    def test_uniform_lesion_single_instance(self):
        img = np.full((128, 128, 3), (200, 172, 160), dtype=np.uint8)
        yy, xx = np.ogrid[:128, :128]
        img[(yy - 64) ** 2 + (xx - 64) ** 2 <= 40 ** 2] = (120, 94, 82)
        bag = bag_from_image(img, label=-1)
        assert bag.m == 1

    def test_no_lesion_raises_empty_bag(self):
        flat = np.full((128, 128, 3), 180, dtype=np.uint8)
        with pytest.raises(EmptyBagError):
            bag_from_image(flat, bag_id="flat")

    def test_grid_mode(self):
        img = generate_images(SynthConfig(
            mode="images", n_pos=1, n_neg=1, image_size=128, seed=9))[0]
        bag = bag_from_image(img.image, label=+1, segmentation="grid",
                             grid_cell=16)
        assert bag.m >= 4
        assert bag.dim == 200

    def test_deterministic(self):
        img = generate_images(SynthConfig(
            mode="images", n_pos=1, n_neg=1, image_size=128, seed=3))[0]
        a = bag_from_image(img.image, label=+1)
        b = bag_from_image(img.image, label=+1)
        assert np.array_equal(a.features, b.features)


class TestBagFile:
    def test_round_trip(self, tmp_path, rng):
        from bwsdetect.features import load_bag, save_bag
        from bwsdetect.mil import Bag
        bag = Bag(rng.normal(size=(4, 6)), label=-1, bag_id="rt",
                  region_ids=np.array([2, 3, 5, 7]))
        path = tmp_path / "bag.json"
        save_bag(bag, "fp123", path)
        back, fp = load_bag(path)
        assert fp == "fp123"
        assert back.bag_id == "rt"
        assert back.label == -1
        assert np.array_equal(back.features, bag.features)
        assert np.array_equal(back.region_ids, bag.region_ids)

    def test_malformed_counts_rejected(self, tmp_path):
        import json
        from bwsdetect.features import load_bag, save_bag
        from bwsdetect.mil import Bag
        path = tmp_path / "bag.json"
        save_bag(Bag(np.ones((2, 3)), label=1, bag_id="x"), "fp", path)
        doc = json.loads(path.read_text())
        doc["m"] = 5
        path.write_text(json.dumps(doc))
        with pytest.raises(DataError, match="declared m=5"):
            load_bag(path)
