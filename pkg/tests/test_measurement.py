"""Probe batches: expected powers, noisy sampling, and the file format."""

import json

import numpy as np
import pytest

from beamcov.channel import ArrayGeometry
from beamcov.measurement import (MeasurementSet, check_measurement_data, expected_power,
                                 expected_powers, load_measurements, measurements_from_dict,
                                 measurements_to_dict, sample_directions, sample_powers,
                                 save_measurements)
from conftest import random_probes, random_psd


class TestCheckMeasurementData:
    def test_coerces_lists(self):
        u, y = check_measurement_data([[1, 0], [0, 1]], [1.0, 2.0])
        assert u.dtype == np.complex128 and u.shape == (2, 2)
        assert y.dtype == np.float64 and y.shape == (2,)

    def test_rejects_wrong_ndim(self):
        with pytest.raises(ValueError, match="2-D"):
            check_measurement_data(np.ones(3), np.ones(3))

    def test_rejects_empty(self):
        with pytest.raises(ValueError, match="nonempty"):
            check_measurement_data(np.ones((0, 4)), np.ones(0))

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError, match="match"):
            check_measurement_data(np.ones((3, 2)), np.ones(2))

    def test_rejects_nonfinite_directions(self):
        u = np.ones((2, 2), dtype=complex)
        u[0, 0] = np.inf
        with pytest.raises(ValueError, match="finite"):
            check_measurement_data(u, np.ones(2))

    def test_rejects_negative_or_nonfinite_powers(self):
        u = np.ones((2, 2))
        with pytest.raises(ValueError, match="nonnegative"):
            check_measurement_data(u, [1.0, -0.5])
        with pytest.raises(ValueError, match="finite"):
            check_measurement_data(u, [1.0, np.nan])


class TestMeasurementSet:
    def test_properties_and_norms(self):
        ms = MeasurementSet([[1, 1j], [2, 0]], [1.0, 2.0], snr=10.0, diversity=4)
        assert ms.n_probes == 2
        assert ms.n_antennas == 2
        np.testing.assert_allclose(ms.probe_norms_sq(), [2.0, 4.0])
        np.testing.assert_allclose(ms.noise_floors(), [0.2, 0.4])

    def test_validation(self):
        with pytest.raises(ValueError, match="snr"):
            MeasurementSet([[1.0]], [1.0], snr=0.0)
        with pytest.raises(ValueError, match="diversity"):
            MeasurementSet([[1.0]], [1.0], snr=1.0, diversity=0)


class TestExpectedPowers:
    def test_quadratic_form_oracle(self):
        q = np.array([[1.0, 0.5], [0.5, 1.0]])
        u = np.array([[1.0, 1.0]])
        # u* q u = 3 plus noise floor ||u||^2 / snr = 2
        assert expected_powers(q, u, 1.0)[0] == pytest.approx(5.0)

    def test_zero_covariance_gives_noise_floor(self):
        u = np.array([[1.0, 1j, 2.0]])
        assert expected_powers(np.zeros((3, 3)), u, 2.0)[0] == pytest.approx(3.0)

    def test_matches_single_probe_path(self):
        rng = np.random.default_rng(0)
        q = random_psd(rng, 4)
        u = random_probes(rng, 6, 4)
        batched = expected_powers(q, u, 7.0)
        for row, expect in zip(u, batched):
            assert expected_power(q, row, 7.0) == pytest.approx(expect)

    def test_single_probe_validation(self):
        q = np.eye(2)
        with pytest.raises(ValueError, match="length"):
            expected_power(q, np.ones(3), 1.0)
        with pytest.raises(ValueError, match="snr"):
            expected_power(q, np.ones(2), 0.0)
        with pytest.raises(ValueError, match="PSD"):
            expected_power(np.diag([1.0, -1.0]), np.ones(2), 1.0)
        with pytest.raises(ValueError, match="Hermitian"):
            expected_power(np.array([[0.0, 1.0], [0.0, 0.0]]), np.ones(2), 1.0)


class TestSampleDirections:
    def test_shape_and_modulus(self):
        u = sample_directions(ArrayGeometry(4, 4), 10, seed=0)
        assert u.shape == (10, 16)
        np.testing.assert_allclose(np.abs(u), 1.0, atol=1e-14)

    def test_deterministic(self):
        geom = ArrayGeometry(2, 3)
        np.testing.assert_array_equal(sample_directions(geom, 5, 1),
                                      sample_directions(geom, 5, 1))

    def test_rejects_zero_count(self):
        with pytest.raises(ValueError):
            sample_directions(ArrayGeometry(2, 2), 0, seed=0)


class TestSamplePowers:
    def test_deterministic_and_method_specific(self):
        rng = np.random.default_rng(1)
        q = random_psd(rng, 3)
        u = random_probes(rng, 8, 3)
        a = sample_powers(q, u, 5.0, 4, seed=11)
        b = sample_powers(q, u, 5.0, 4, seed=11)
        np.testing.assert_array_equal(a.powers, b.powers)
        c = sample_powers(q, u, 5.0, 4, seed=11, method="chi2")
        assert not np.array_equal(a.powers, c.powers)

    @pytest.mark.parametrize("method", ["gaussian", "chi2"])
    def test_nonnegative_with_correct_mean(self, method):
        rng = np.random.default_rng(2)
        q = random_psd(rng, 3)
        q *= 3 / np.trace(q).real
        u = np.tile(random_probes(rng, 1, 3), (20000, 1))
        lam = expected_powers(q, u[:1], 10.0)[0]
        ms = sample_powers(q, u, 10.0, 4, seed=[2, 0], method=method)
        assert np.all(ms.powers >= 0)
        assert ms.powers.mean() == pytest.approx(lam, rel=0.03)

    def test_diversity_shrinks_variance(self):
        rng = np.random.default_rng(3)
        q = np.eye(2)
        u = np.tile(random_probes(rng, 1, 2), (20000, 1))
        low = sample_powers(q, u, 10.0, 1, seed=[3, 0]).powers.var()
        high = sample_powers(q, u, 10.0, 16, seed=[3, 1]).powers.var()
        assert high < low / 8

    def test_rejects_bad_arguments(self):
        q = np.eye(2)
        u = np.ones((2, 2))
        with pytest.raises(ValueError, match="method"):
            sample_powers(q, u, 1.0, 1, seed=0, method="exact")
        with pytest.raises(ValueError, match="diversity"):
            sample_powers(q, u, 1.0, 0, seed=0)
        with pytest.raises(ValueError, match="positive"):
            sample_powers(np.diag([-2.0, 0.0]), np.array([[1.0, 0.0]]), 1e6, 1, seed=0)


class TestSerialization:
    def make(self):
        rng = np.random.default_rng(4)
        q = random_psd(rng, 3)
        u = random_probes(rng, 5, 3)
        return sample_powers(q, u, 6.0, 2, seed=9)

    def test_round_trip_exact(self, tmp_path):
        ms = self.make()
        path = tmp_path / "m.json"
        save_measurements(ms, path)
        loaded = load_measurements(path)
        np.testing.assert_array_equal(loaded.directions, ms.directions)
        np.testing.assert_array_equal(loaded.powers, ms.powers)
        assert loaded.snr == ms.snr
        assert loaded.diversity == ms.diversity

    def test_schema_fields(self):
        doc = measurements_to_dict(self.make())
        assert set(doc) == {"n", "gamma", "d", "measurements"}
        assert doc["n"] == 3 and doc["d"] == 2
        assert len(doc["measurements"]) == 5
        entry = doc["measurements"][0]
        assert set(entry) == {"u", "y"}
        assert len(entry["u"]) == 3 and len(entry["u"][0]) == 2
        json.dumps(doc)

    def test_rejects_unknown_keys(self):
        doc = measurements_to_dict(self.make())
        doc["comment"] = "hello"
        with pytest.raises(ValueError, match="unknown"):
            measurements_from_dict(doc)

    def test_rejects_malformed_entries(self):
        doc = measurements_to_dict(self.make())
        doc["measurements"][1] = {"u": doc["measurements"][1]["u"]}
        with pytest.raises(ValueError, match="exactly"):
            measurements_from_dict(doc)
        doc = measurements_to_dict(self.make())
        doc["measurements"][0]["u"] = doc["measurements"][0]["u"][:-1]
        with pytest.raises(ValueError, match="length"):
            measurements_from_dict(doc)
        with pytest.raises(ValueError, match="nonempty"):
            measurements_from_dict({"n": 2, "gamma": 1.0, "d": 1, "measurements": []})
        with pytest.raises(ValueError):
            measurements_from_dict({"gamma": 1.0, "d": 1, "measurements": [{}]})
