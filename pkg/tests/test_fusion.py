import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holofusion.fusion import (
    DesignKind, FusionWeights, deflection, llr, max_deflection, optimal_weights,
    optimal_weights_fuc, optimal_weights_is, threshold_test, wl_statistic,
)
from holofusion.sensing import SensorStats, augment, iid_pmf_table
from helpers import crandn, random_instance, random_stats
from oracles import deflection_from_moments, llr_enumeration


def random_probe(rng, n):
    a = augment(crandn(rng, n))
    return FusionWeights(a / np.linalg.norm(a))


def test_design_kind_parse():
    assert DesignKind.parse("fuc-0") is DesignKind.FUC0
    assert DesignKind.parse("IS") is DesignKind.IS
    assert DesignKind.FUC1.hypothesis == 1 and DesignKind.FUC0.hypothesis == 0
    with pytest.raises(ValueError):
        DesignKind.parse("LLR")


# ------------------------------------------------------------------ LLR

def test_llr_zero_for_identical_hypotheses(rng):
    s = SensorStats.independent(0.3, 0.3, 1.0, 3)
    y = crandn(rng, 5, 2)
    np.testing.assert_allclose(llr(y, crandn(rng, 2, 3), s, 0.5), 0.0, atol=1e-12)


def test_llr_vanishes_in_high_noise(rng):
    s = SensorStats.independent(0.9, 0.1, 1.0, 3)
    H = crandn(rng, 2, 3)
    y = crandn(rng, 2)
    vals = [abs(llr(y, H, s, n)) for n in (1e2, 1e4, 1e6)]
    assert vals[0] > vals[1] > vals[2] and vals[2] < 1e-4


def test_llr_two_sensors_hand_rolled(rng):
    pd, pf, alpha = np.array([0.8, 0.6]), np.array([0.1, 0.2]), np.array([1.0, 0.7])
    s = SensorStats.independent(pd, pf, alpha)
    h = crandn(rng, 1, 2)
    y = crandn(rng, 1)
    num = den = 0.0
    for x1 in (-1, 1):
        for x2 in (-1, 1):
            g = np.exp(-abs(y[0] - h[0, 0] * alpha[0] * x1 - h[0, 1] * alpha[1] * x2) ** 2 / 0.5)
            q1 = (pd[0] if x1 > 0 else 1 - pd[0]) * (pd[1] if x2 > 0 else 1 - pd[1])
            q0 = (pf[0] if x1 > 0 else 1 - pf[0]) * (pf[1] if x2 > 0 else 1 - pf[1])
            num += q1 * g
            den += q0 * g
    assert llr(y, h, s, 0.5) == pytest.approx(np.log(num / den), rel=1e-12)


def test_llr_matches_enumeration_oracle(rng):
    for _ in range(50):
        K, N = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        s = random_stats(rng, K)
        H = crandn(rng, N, K)
        noise = float(rng.uniform(0.3, 2.0))
        y = H @ (s.alpha * rng.choice([-1.0, 1.0], K)) + np.sqrt(noise) * crandn(rng, N)
        ref = llr_enumeration(y, H, s.rho1, s.rho0, s.alpha, noise)
        assert llr(y, H, s, noise) == pytest.approx(ref, rel=1e-12, abs=1e-13)


def test_llr_batch_and_custom_tables(rng):
    s = random_stats(rng, 3)
    H = crandn(rng, 2, 3)
    Y = crandn(rng, 6, 2)
    batch = llr(Y, H, s, 0.7)
    single = np.array([llr(y, H, s, 0.7) for y in Y])
    np.testing.assert_allclose(batch, single, rtol=1e-13)
    tables = (iid_pmf_table(s.rho1), iid_pmf_table(s.rho0))
    np.testing.assert_allclose(llr(Y, H, s, 0.7, tables), batch, rtol=1e-13)
    with pytest.raises(ValueError):
        llr(Y, H, s, 0.7, (np.ones(8), np.ones(8)))
    with pytest.raises(ValueError):
        llr(Y, H, s, 0.0)


def test_llr_handles_large_signal_without_overflow(rng):
    s = SensorStats.independent(0.9, 0.05, 1.0, 4)
    H = 1e3 * crandn(rng, 2, 4)
    y = H @ np.ones(4)
    assert np.isfinite(llr(y, H, s, 1e-6))


# ------------------------------------------------------------------ WL statistic

def test_wl_statistic_single_output():
    w = FusionWeights(augment(np.array([1.0 + 0j])) / np.sqrt(2))
    c = 0.3 - 1.7j
    assert wl_statistic(w, np.array([c])) == pytest.approx(2 * c.real / np.sqrt(2))
    assert wl_statistic(w, np.array([0j])) == 0.0


def test_wl_statistic_rejects_non_conjugate_weights():
    w = FusionWeights(np.array([1.0, 1j]))
    with pytest.raises(ValueError):
        wl_statistic(w, np.array([1.0 + 0.5j]))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 31), t=st.floats(-100, 100))
def test_wl_statistic_linear_in_real_scaling(seed, t):
    r = np.random.default_rng(seed)
    w = FusionWeights.from_half(crandn(r, 3))
    y = crandn(r, 4, 3)
    np.testing.assert_allclose(wl_statistic(w, t * y), t * wl_statistic(w, y), rtol=1e-10, atol=1e-10)


def test_from_half_normalizes(rng):
    w = FusionWeights.from_half(crandn(rng, 4))
    assert np.linalg.norm(w.a_aug) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        FusionWeights.from_half(np.zeros(2))


def test_threshold_test():
    assert threshold_test(1.0, 1.0) == 0
    assert threshold_test(1.0, -np.inf) == 1
    assert threshold_test(1e300, np.inf) == 0
    np.testing.assert_array_equal(threshold_test([0.0, 2.0], 1.0), [0, 1])


# ------------------------------------------------------------------ deflection

def test_fuc_deflection_zero_without_discrimination(rng):
    s = SensorStats.independent(0.4, 0.4, 1.0, 3)
    H = crandn(rng, 2, 3)
    assert deflection("FuC-0", random_probe(rng, 2), H, s, 0.5) == pytest.approx(0.0, abs=1e-20)


@pytest.mark.parametrize("kind", list(DesignKind))
def test_deflection_scale_invariant(rng, kind):
    ch, s, noise = random_instance(rng)
    H = ch.effective(np.exp(1j * rng.uniform(0, 6, ch.shape[1])))
    w = random_probe(rng, H.shape[0])
    d1 = deflection(kind, w, H, s, noise)
    d2 = deflection(kind, FusionWeights(-3.7 * w.a_aug), H, s, noise)
    assert d2 == pytest.approx(d1, rel=1e-12)


@pytest.mark.parametrize("correlated", [False, True])
def test_deflection_matches_moment_oracle(rng, correlated):
    for _ in range(20):
        ch, s, noise = random_instance(rng, correlated=correlated, K=int(rng.integers(1, 5)))
        H = ch.effective(np.exp(1j * rng.uniform(0, 6, ch.shape[1])))
        w = random_probe(rng, H.shape[0])
        for kind in DesignKind:
            ref = deflection_from_moments(w.a_aug, H, s, noise, kind.hypothesis, kind is DesignKind.IS)
            assert deflection(kind, w, H, s, noise) == pytest.approx(ref, rel=1e-10)


# ------------------------------------------------------------------ optimal weights

def test_fuc_weights_reduce_to_is_direction_for_ideal_sensors(rng):
    s = SensorStats.independent(1.0, 0.0, [1.0, 2.0, 0.5], 3)
    H = crandn(rng, 3, 3)
    for h in (0, 1):
        np.testing.assert_allclose(optimal_weights_fuc(h, H, s, 0.3).a_aug,
                                   optimal_weights_is(H, s).a_aug, atol=1e-12)


def test_is_weights_scalar_channel():
    s = SensorStats.independent(0.9, 0.1, 1.0, 1)
    c = 0.6 - 0.8j
    w = optimal_weights_is(np.array([[c]]), s)
    np.testing.assert_allclose(w.a_aug, np.array([c, np.conj(c)]) / (np.sqrt(2) * abs(c)), atol=1e-15)


def test_is_weights_invariant_to_amplitude_scaling(rng):
    s = random_stats(rng, 4)
    H = crandn(rng, 2, 4)
    s2 = SensorStats.independent(s.rho1, s.rho0, 5.0 * s.alpha)
    np.testing.assert_allclose(optimal_weights_is(H, s).a_aug, optimal_weights_is(H, s2).a_aug, atol=1e-13)


@pytest.mark.parametrize("kind", list(DesignKind))
def test_optimal_weights_beat_random_probes(rng, kind):
    for _ in range(10):
        ch, s, noise = random_instance(rng)
        H = ch.effective(np.exp(1j * rng.uniform(0, 6, ch.shape[1])))
        w = optimal_weights(kind, H, s, noise)
        assert np.linalg.norm(w.a_aug) == pytest.approx(1.0, abs=1e-12)
        best = deflection(kind, w, H, s, noise)
        probes = [deflection(kind, random_probe(rng, H.shape[0]), H, s, noise) for _ in range(200)]
        assert best >= max(probes) * (1 - 1e-12)
        assert max_deflection(kind, H, s, noise) == pytest.approx(best, rel=1e-12)


def test_optimal_weights_degenerate_channel():
    s = SensorStats.independent(0.9, 0.1, 1.0, 2)
    with pytest.raises(ValueError):
        optimal_weights_is(np.zeros((1, 2)), s)
    with pytest.raises(ValueError):
        optimal_weights_fuc(0, np.zeros((1, 2)), s, 1.0)
