import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kneegrade.dataio import LabelMask
from kneegrade.errors import CompartmentAbsentError, NotFittedError
from kneegrade.jsn import (ContourPair, Kl0Reference, asymmetry,
                           extract_contours, jsn_rate, jsn_subvector,
                           kl0_reference, measure_compartment, mjsw,
                           sample_landmarks)
from kneegrade.phantoms import band_mask, wedge_mask


def _mask(labels):
    return LabelMask(labels=np.asarray(labels, dtype=np.int64))


class TestContours:
    def test_band_boundaries(self):
        mask = _mask(band_mask(10, top=100))
        c = extract_contours(mask, "medial")
        assert c.column_span == (25, 95)
        np.testing.assert_array_equal(c.femoral_boundary, 100.0)
        np.testing.assert_array_equal(c.tibial_boundary, 110.0)

    def test_absent_compartment_raises(self):
        labels = np.zeros((64, 64), dtype=np.int64)
        with pytest.raises(CompartmentAbsentError):
            extract_contours(_mask(labels), "medial")

    def test_tiny_region_raises(self):
        labels = np.zeros((64, 64), dtype=np.int64)
        labels[10:12, 10:15] = 1  # 10 px, under the 50 px floor
        with pytest.raises(CompartmentAbsentError):
            extract_contours(_mask(labels), "medial")

    def test_narrow_span_raises(self):
        labels = np.zeros((64, 64), dtype=np.int64)
        labels[5:20, 10:20] = 1  # 150 px but only 10 columns wide
        with pytest.raises(CompartmentAbsentError):
            extract_contours(_mask(labels), "medial")

    def test_hole_columns_interpolated(self):
        labels = band_mask(8, top=100)
        labels[:, 60] = 0  # knock out one interior column entirely
        c = extract_contours(_mask(labels), "medial")
        i = 60 - c.column_span[0]
        assert c.femoral_boundary[i] == pytest.approx(100.0)
        assert c.tibial_boundary[i] == pytest.approx(108.0)

    def test_boundary_at_interpolates(self):
        mask = _mask(wedge_mask(4, 12, span=(20, 80), top=50))
        c = extract_contours(mask, "medial")
        f0, t0 = c.boundary_at(30.0)
        f1, t1 = c.boundary_at(31.0)
        fm, tm = c.boundary_at(30.5)
        assert fm == pytest.approx((f0 + f1) / 2)
        assert tm == pytest.approx((t0 + t1) / 2)


class TestLandmarks:
    def test_station_positions_on_100_column_span(self):
        # span columns 0..99: trimmed ends land exactly at columns 10 and 90
        labels = np.zeros((64, 120), dtype=np.int64)
        labels[20:28, 0:100] = 1
        prof = sample_landmarks(extract_contours(_mask(labels), "medial"))
        np.testing.assert_allclose(prof.x, np.linspace(10.0, 90.0, 16))

    def test_sixteen_strictly_increasing_stations(self):
        prof = measure_compartment(_mask(band_mask(9)), "lateral")
        assert prof.x.shape == (16,)
        assert np.all(np.diff(prof.x) > 0)

    def test_widths_nonnegative(self):
        prof = measure_compartment(_mask(band_mask(5)), "medial")
        assert np.all(prof.widths >= 0)

    def test_band_widths_exact(self):
        for gap in (4, 9, 15):
            prof = measure_compartment(_mask(band_mask(gap)), "medial")
            np.testing.assert_allclose(prof.widths, float(gap), atol=1e-9)

    def test_wedge_min_at_narrow_end(self):
        prof = measure_compartment(_mask(wedge_mask(4, 14)), "medial")
        assert int(np.argmin(prof.widths)) == 0
        assert np.all(np.diff(prof.widths) >= -0.51)  # monotone up to rounding


class TestScalars:
    def test_mjsw_is_min_station_width(self):
        prof = measure_compartment(_mask(wedge_mask(5, 12)), "medial")
        assert mjsw(prof) == pytest.approx(float(np.min(prof.widths)))

    def test_jsn_rate_formula(self):
        ref = Kl0Reference(median_mjsw_med=8.0, median_mjsw_lat=10.0, n_images=5)
        assert jsn_rate(4.0, ref, "medial") == pytest.approx(50.0)
        assert jsn_rate(10.0, ref, "lateral") == pytest.approx(0.0)
        assert jsn_rate(12.0, ref, "lateral") == pytest.approx(-20.0)

    def test_jsn_rate_bad_reference(self):
        ref = Kl0Reference(0.0, 1.0, 1)
        with pytest.raises(ValueError):
            jsn_rate(1.0, ref, "medial")

    def test_asymmetry_formula(self):
        assert asymmetry(6.0, 2.0) == pytest.approx(0.5)
        assert asymmetry(5.0, 5.0) == 0.0
        assert asymmetry(0.0, 0.0) == 0.0

    @given(st.floats(0, 30, allow_nan=False), st.floats(0, 30, allow_nan=False))
    @settings(max_examples=100, deadline=None)
    def test_asymmetry_bounded_and_symmetric(self, a, b):
        v = asymmetry(a, b)
        assert 0.0 <= v <= 1.0
        assert v == asymmetry(b, a)


class TestReference:
    def _feat(self, med, lat, quality="measured"):
        from kneegrade.jsn import JsnFeatures
        return JsnFeatures(mjsw_med=med, mjsw_lat=lat,
                           profile_med=np.zeros(8), profile_lat=np.zeros(8),
                           jsn_rate_med=np.nan, jsn_rate_lat=np.nan,
                           ml_ratio=1.0, asymmetry_score=0.0, quality=quality)

    def test_median_of_measured(self):
        feats = [self._feat(6.0, 8.0), self._feat(7.0, 9.0), self._feat(8.0, 10.0)]
        ref = kl0_reference(feats)
        assert ref.median_mjsw_med == 7.0
        assert ref.median_mjsw_lat == 9.0
        assert ref.n_images == 3

    def test_partial_compartments_excluded(self):
        feats = [self._feat(6.0, 8.0),
                 self._feat(100.0, 9.0, quality="imputed_med"),
                 self._feat(7.0, 100.0, quality="imputed_lat")]
        ref = kl0_reference(feats)
        assert ref.median_mjsw_med == 6.5   # 100 (imputed_med) excluded
        assert ref.median_mjsw_lat == 8.5   # 100 (imputed_lat) excluded

    def test_empty_raises(self):
        with pytest.raises(NotFittedError):
            kl0_reference([])

    def test_round_trip(self):
        ref = Kl0Reference(6.5, 8.25, 12)
        assert Kl0Reference.from_dict(ref.to_dict()) == ref


class TestSubvector:
    def test_full_vector_on_band(self):
        ref = Kl0Reference(16.0, 16.0, 10)
        feat = jsn_subvector(_mask(band_mask(8)), ref)
        vec = feat.to_vector()
        assert vec.shape == (22,)
        assert feat.quality == "measured"
        assert vec[0] == pytest.approx(8.0)     # mjsw medial
        assert vec[1] == pytest.approx(8.0)     # mjsw lateral
        np.testing.assert_allclose(vec[2:18], 8.0)  # profiles
        assert vec[18] == pytest.approx(50.0)   # rate medial
        assert vec[19] == pytest.approx(50.0)   # rate lateral
        assert vec[20] == pytest.approx(1.0)    # ml ratio
        assert vec[21] == pytest.approx(0.0)    # asymmetry

    def test_profile_is_every_second_station(self):
        prof = measure_compartment(_mask(wedge_mask(4, 14)), "medial")
        feat = jsn_subvector(_mask(wedge_mask(4, 14)), None)
        np.testing.assert_allclose(feat.profile_med, prof.widths[0::2])

    def test_missing_lateral(self):
        feat = jsn_subvector(_mask(wedge_mask(5, 10)), None)
        assert feat.quality == "imputed_lat"
        assert np.isnan(feat.mjsw_lat)
        assert np.isnan(feat.profile_lat).all()
        assert np.isnan(feat.ml_ratio)
        assert np.isnan(feat.asymmetry_score)
        assert not np.isnan(feat.mjsw_med)

    def test_missing_both(self):
        feat = jsn_subvector(_mask(np.zeros((64, 64), dtype=np.int64)), None)
        assert feat.quality == "imputed_both"
        assert np.isnan(feat.to_vector()).all()

    def test_no_reference_leaves_rates_nan(self):
        feat = jsn_subvector(_mask(band_mask(8)), None)
        assert np.isnan(feat.jsn_rate_med)
        assert np.isnan(feat.jsn_rate_lat)
        assert feat.quality == "measured"

    def test_translation_invariance(self):
        ref = Kl0Reference(16.0, 16.0, 10)
        a = jsn_subvector(_mask(band_mask(7, top=95)), ref).to_vector()
        b = jsn_subvector(_mask(band_mask(7, top=120)), ref).to_vector()
        np.testing.assert_allclose(a, b, atol=1e-9)

    @given(st.integers(3, 20), st.integers(60, 150))
    @settings(max_examples=30, deadline=None)
    def test_band_gap_recovered(self, gap, top):
        feat = jsn_subvector(_mask(band_mask(gap, top=top, shape=(224, 224))),
                             None)
        assert abs(feat.mjsw_med - gap) <= 0.5
        assert abs(feat.mjsw_lat - gap) <= 0.5
