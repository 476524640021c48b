import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from kneegrade.preprocess import (PreprocessConfig, clahe, clip_normalize,
                                  preprocess_for, standardize)
from oracles import clahe_oracle


class TestConfig:
    def test_defaults(self):
        cfg = PreprocessConfig()
        assert cfg.clahe_clip_limit == 3.0
        assert cfg.clahe_tiles == (8, 8)
        assert cfg.clip_lo == 5.0
        assert cfg.clip_hi == 99.0
        assert cfg.standardize_mu == 0.485
        assert cfg.standardize_sigma == 0.229

    def test_invalid_percentiles(self):
        with pytest.raises(ValueError):
            PreprocessConfig(clip_lo=99.0, clip_hi=5.0)

    def test_invalid_clip_limit(self):
        with pytest.raises(ValueError):
            PreprocessConfig(clahe_clip_limit=0.0)


class TestClahe:
    def test_matches_scalar_oracle(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            img = rng.random((24, 32))
            cfg = PreprocessConfig(clahe_tiles=(3, 4), clahe_clip_limit=2.5)
            got = clahe(img, cfg)
            want = clahe_oracle(img, 2.5, (3, 4))
            np.testing.assert_allclose(got, want, atol=1e-12)

    def test_matches_oracle_default_grid(self):
        rng = np.random.default_rng(42)
        img = rng.random((64, 64))
        got = clahe(img, PreprocessConfig())
        want = clahe_oracle(img, 3.0, (8, 8))
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_output_range(self):
        rng = np.random.default_rng(0)
        out = clahe(rng.random((64, 64)))
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        img = rng.random((64, 64))
        np.testing.assert_array_equal(clahe(img), clahe(img))

    def test_flat_image(self):
        # a constant image maps every pixel through the same histogram bin
        out = clahe(np.full((64, 64), 0.5))
        assert np.allclose(out, out.flat[0])

    def test_too_small_image(self):
        with pytest.raises(ValueError):
            clahe(np.zeros((8, 8)), PreprocessConfig(clahe_tiles=(8, 8)))

    def test_enhances_local_contrast(self):
        # a faint gradient should span more of [0, 1] after equalization
        img = np.tile(np.linspace(0.45, 0.55, 64), (64, 1))
        out = clahe(img, PreprocessConfig(clahe_clip_limit=20.0))
        assert out.max() - out.min() > (img.max() - img.min()) * 2


class TestClipNormalize:
    def test_range_and_endpoints(self):
        rng = np.random.default_rng(0)
        img = rng.random((50, 50))
        out = clip_normalize(img)
        assert out.min() == 0.0 and out.max() == 1.0

    def test_percentile_semantics(self):
        img = np.linspace(0, 1, 10000).reshape(100, 100)
        out = clip_normalize(img)
        lo, hi = np.percentile(img, [5, 99])
        expect = (np.clip(img, lo, hi) - lo) / (hi - lo)
        np.testing.assert_allclose(out, expect)

    def test_constant_image_is_zeros(self):
        np.testing.assert_array_equal(clip_normalize(np.full((10, 10), 0.7)),
                                      np.zeros((10, 10)))

    @given(hnp.arrays(np.float64, (12, 12),
                      elements=st.floats(0, 1, allow_nan=False)))
    @settings(max_examples=50, deadline=None)
    def test_always_in_unit_interval(self, img):
        out = clip_normalize(img)
        assert out.min() >= 0.0 and out.max() <= 1.0


class TestStandardize:
    def test_affine(self):
        img = np.array([[0.485]])
        assert standardize(img)[0, 0] == pytest.approx(0.0)
        img = np.array([[0.485 + 0.229]])
        assert standardize(img)[0, 0] == pytest.approx(1.0)


class TestStages:
    def test_unknown_stage(self):
        with pytest.raises(ValueError):
            preprocess_for("nope", np.zeros((64, 64)))

    def test_jsn_is_clahe_then_clip(self):
        rng = np.random.default_rng(2)
        img = rng.random((64, 64))
        cfg = PreprocessConfig()
        np.testing.assert_array_equal(preprocess_for("jsn", img, cfg),
                                      clip_normalize(clahe(img, cfg), cfg))

    def test_fullimage_equals_jsn_stage(self):
        rng = np.random.default_rng(3)
        img = rng.random((64, 64))
        np.testing.assert_array_equal(preprocess_for("jsn", img),
                                      preprocess_for("osteophyte_fullimage", img))

    def test_roi_stage_identity(self):
        rng = np.random.default_rng(4)
        img = rng.random((32, 32))
        np.testing.assert_array_equal(preprocess_for("osteophyte_roi", img), img)

    def test_sclerosis_stage_skips_clahe(self):
        rng = np.random.default_rng(5)
        img = rng.random((64, 64))
        np.testing.assert_array_equal(preprocess_for("sclerosis", img),
                                      clip_normalize(img))

    def test_clahe_can_be_disabled(self):
        rng = np.random.default_rng(6)
        img = rng.random((64, 64))
        cfg = PreprocessConfig(apply_clahe=False)
        np.testing.assert_array_equal(preprocess_for("jsn", img, cfg),
                                      clip_normalize(img, cfg))
