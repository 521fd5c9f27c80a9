import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pasnli.shaping_core import (
    AmplitudeDistribution,
    PasRates,
    ShapedConstellation,
    ShapingError,
    assemble_pam,
    entropy,
    fit_mb_lambda,
    invert_binary_entropy,
    rate_loss,
    sign_info_fraction,
    sign_source,
)


def test_constellation_alphabet_and_labels():
    c = ShapedConstellation(4)
    assert list(c.amplitude_alphabet) == [1, 3, 5, 7, 9, 11, 13, 15]
    labels = {tuple(r) for r in c.amplitude_labels}
    assert len(labels) == 8
    # neighbouring amplitudes differ in one label bit
    assert np.all(np.abs(np.diff(c.amplitude_labels.astype(int), axis=0)).sum(axis=1) == 1)
    pl = c.pam_labels()
    assert np.all(pl[:8, 0] == 1) and np.all(pl[8:, 0] == 0)
    assert len({tuple(r) for r in pl}) == 16


def test_entropy_examples():
    assert entropy(np.full(8, 1 / 8)) == pytest.approx(3.0)
    assert entropy([1, 0, 0, 0]) == 0.0
    assert entropy([0.25] * 4) == pytest.approx(2.0)


def test_fit_mb_uniform_at_maximum():
    d = fit_mb_lambda(3.0, np.arange(1, 16, 2))
    assert d.mb_lambda == 0.0
    np.testing.assert_allclose(d.probabilities, 1 / 8)


def test_fit_mb_binary_matches_root_finder():
    d = fit_mb_lambda(0.5, [1, 3])
    np.testing.assert_allclose(d.probabilities, [0.8900, 0.1100], atol=1e-3)
    assert d.probabilities[1] == pytest.approx(invert_binary_entropy(0.5), abs=1e-9)


def test_fit_mb_setup1_shaping_rate():
    d = fit_mb_lambda(2.4 + 0.02, np.arange(1, 16, 2))
    assert d.entropy == pytest.approx(2.42, abs=1e-9)
    assert np.all(np.diff(d.probabilities) < 0)


@settings(max_examples=40, deadline=None)
@given(m=st.sampled_from([2, 3, 4]), frac=st.floats(0.05, 0.999))
def test_fit_mb_inverts_entropy(m, frac):
    alphabet = np.arange(1, 2 ** m, 2)
    target = frac * (m - 1)
    assert fit_mb_lambda(target, alphabet).entropy == pytest.approx(target, abs=1e-9)


def test_fit_mb_out_of_range():
    with pytest.raises(ShapingError):
        fit_mb_lambda(2.5, [1, 3, 5, 7])
    with pytest.raises(ShapingError):
        fit_mb_lambda(0.0, [1, 3])


def test_distribution_validation():
    with pytest.raises(ShapingError):
        AmplitudeDistribution(np.array([0.5, 0.6]))


def test_rate_loss_examples():
    assert rate_loss(2.4, 240, 100, 0) == pytest.approx(0.0, abs=1e-12)
    assert rate_loss(2.4, 240, 100, 2) == pytest.approx(0.02)
    with pytest.raises(ShapingError):
        rate_loss(2.0, 240, 100)
    with pytest.raises(ShapingError):
        rate_loss(2.4, 2, 100, 3)


def test_pas_rates_setups():
    s1 = PasRates(2.4, sign_info_fraction(4, 0.8))
    assert s1.overall_rate == pytest.approx(2.6)
    assert s1.rate_per_qam_symbol == pytest.approx(5.2)
    s2 = PasRates(1.5, sign_info_fraction(3, 5 / 6))
    assert s2.rate_per_qam_symbol == pytest.approx(4.0)


def test_assemble_pam():
    np.testing.assert_array_equal(assemble_pam([1, 3], [0, 0]), [1, 3])
    np.testing.assert_array_equal(assemble_pam([1, 3], [1, 0]), [-1, 3])
    with pytest.raises(ShapingError):
        assemble_pam([1, 3], [1])


def test_assemble_roundtrip_and_energy():
    rng = np.random.default_rng(1)
    a = rng.choice([1, 3, 5, 7], size=(10_000, 8))
    s = rng.integers(0, 2, size=a.shape)
    x = assemble_pam(a, s, 0.25)
    np.testing.assert_array_equal(np.abs(x) / 0.25, a)
    assert np.sum(x**2) == pytest.approx(0.25**2 * np.sum(a**2), rel=1e-15)


def test_sign_source():
    assert sign_source(0, 1).size == 0
    np.testing.assert_array_equal(sign_source(100, 7), sign_source(100, 7))
    assert abs(sign_source(100_000, 3).mean() - 0.5) < 0.01
