import numpy as np
import pytest

from wptlab import numerics
from wptlab.errors import BracketError, DomainError, SamplingError


def test_lambert_w0_known_values():
    assert numerics.lambert_w0(0.0) == 0.0
    assert numerics.lambert_w0(np.e) == pytest.approx(1.0, abs=1e-12)
    assert numerics.lambert_w0(-1.0 / np.e) == pytest.approx(-1.0, abs=1e-6)


def test_lambert_w0_inverts_w_exp_w():
    for x in np.concatenate([
        np.linspace(-1.0 / np.e + 1e-9, 1.0, 41),
        np.logspace(0.0, 6.0, 25),
    ]):
        w = numerics.lambert_w0(x)
        assert w * np.exp(w) == pytest.approx(x, rel=1e-9, abs=1e-10)


def test_lambert_w0_domain():
    with pytest.raises(DomainError):
        numerics.lambert_w0(-0.4)
    with pytest.raises(DomainError):
        numerics.lambert_w0(np.nan)


def test_bisect_finds_cos_root():
    root = numerics.bisect(np.cos, 0.0, np.pi)
    assert root == pytest.approx(np.pi / 2.0, abs=1e-8)


def test_bisect_returns_exact_endpoint_root():
    assert numerics.bisect(lambda x: x, 0.0, 1.0) == 0.0


def test_bisect_rejects_unbracketed_interval():
    with pytest.raises(BracketError):
        numerics.bisect(lambda x: x * x + 1.0, -1.0, 1.0)


def test_golden_section_quadratic():
    x, val = numerics.golden_section_max(lambda x: -(x - 1.3) ** 2, 0.0, 4.0)
    assert x == pytest.approx(1.3, abs=1e-6)
    assert val == pytest.approx(0.0, abs=1e-10)


def test_golden_section_endpoint_maximum():
    x, val = numerics.golden_section_max(lambda x: x, 0.0, 2.0)
    assert x == pytest.approx(2.0, abs=1e-6)
    assert val == pytest.approx(2.0, abs=1e-6)


def test_projected_gradient_simplex_interior_optimum():
    target = np.array([0.2, 0.1, 0.3])

    def objective(x):
        return -np.sum((x - target) ** 2)

    def grad(x):
        return -2.0 * (x - target)

    x = numerics.projected_gradient_max(objective, 3, 2.0, grad=grad)
    np.testing.assert_allclose(x, target, atol=1e-6)


def test_projected_gradient_simplex_active_budget():
    # Optimum of Σx_i·g_i with all g_i > 0 puts the whole budget on max g.
    g = np.array([1.0, 3.0, 2.0])
    x = numerics.projected_gradient_max(
        lambda x: g @ x, 3, 1.5, grad=lambda x: g
    )
    assert np.sum(x) == pytest.approx(1.5, rel=1e-6)
    assert x[1] == pytest.approx(1.5, rel=1e-4)


def test_projected_gradient_ball_constraint():
    ones = np.ones(4)
    x = numerics.projected_gradient_max(
        lambda x: ones @ x, 4, 2.0, grad=lambda x: ones,
        constraint="ball", nonneg=False,
    )
    np.testing.assert_allclose(x, 2.0 * ones / 2.0, atol=1e-5)
    assert np.linalg.norm(x) == pytest.approx(2.0, rel=1e-8)


def test_projected_gradient_honors_warm_starts():
    # A spiky objective the random starts miss; the warm start finds it.
    peak = np.array([0.9, 0.05, 0.05])

    def objective(x):
        return float(np.exp(-400.0 * np.sum((x - peak) ** 2)))

    x = numerics.projected_gradient_max(objective, 3, 1.0, starts=[peak])
    assert objective(x) >= objective(peak) - 1e-12


def test_substream_reproducible_and_distinct():
    a = numerics.substream(7, 3).random(5)
    b = numerics.substream(7, 3).random(5)
    c = numerics.substream(7, 4).random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_time_average_single_tone_moments():
    wave = numerics.passband_waveform([1.0 + 0.0j])
    moments = numerics.time_average(wave, 1.0, 64, orders=(2, 4, 6))
    # √2·cos carries unit mean-square power; higher moments follow cosⁿ.
    assert moments[2] == pytest.approx(1.0, rel=1e-12)
    assert moments[4] == pytest.approx(1.5, rel=1e-12)
    assert moments[6] == pytest.approx(2.5, rel=1e-12)


def test_time_average_rejects_undersampling():
    wave = numerics.passband_waveform([1.0, 0.5j])
    with pytest.raises(SamplingError):
        numerics.time_average(wave, 1.0, 8, orders=(2, 4), nyquist_floor=64)


def test_time_average_rejects_odd_orders():
    with pytest.raises(ValueError):
        numerics.time_average(np.cos, 2.0 * np.pi, 64, orders=(2, 3))


def test_passband_waveform_scales_with_power():
    rng = np.random.default_rng(0)
    c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    wave = numerics.passband_waveform(c)
    samples = numerics.default_samples_per_period(4, 2)
    moments = numerics.time_average(wave, 1.0, samples, orders=(2,))
    assert moments[2] == pytest.approx(float(np.sum(np.abs(c) ** 2)), rel=1e-10)


def test_passband_waveform_carrier_ratio_invariance():
    rng = np.random.default_rng(3)
    c = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    samples = numerics.default_samples_per_period(3, 6) * 4
    base = numerics.time_average(
        numerics.passband_waveform(c), 1.0, samples, orders=(2, 4, 6)
    )
    shifted = numerics.time_average(
        numerics.passband_waveform(c, carrier_ratio=11), 1.0, samples, orders=(2, 4, 6)
    )
    for order in (2, 4, 6):
        assert shifted[order] == pytest.approx(base[order], rel=1e-9)


@pytest.mark.parametrize("length", [1, 2, 4, 9])
def test_symmetric_unitary_realizes_target_coupling(length):
    rng = np.random.default_rng(length)
    for trial in range(20):
        a = rng.standard_normal(length) + 1j * rng.standard_normal(length)
        b = rng.standard_normal(length) + 1j * rng.standard_normal(length)
        a /= np.linalg.norm(a)
        b /= np.linalg.norm(b)
        phase = rng.uniform(-np.pi, np.pi)
        theta = numerics.symmetric_unitary_from_pair(a, b, phase)
        eye = theta.conj().T @ theta
        np.testing.assert_allclose(eye, np.eye(length), atol=1e-9)
        np.testing.assert_allclose(theta, theta.T, atol=1e-9)
        coupling = b @ theta @ a
        assert coupling == pytest.approx(np.exp(1j * phase), abs=1e-9)


def test_symmetric_unitary_aligned_pair():
    # b ∝ conj(a) is the degenerate geometry where the auxiliary vector
    # construction collapses to a single column.
    a = np.array([1.0, 1.0j]) / np.sqrt(2.0)
    b = np.conj(a)
    theta = numerics.symmetric_unitary_from_pair(a, b, 0.5)
    assert b @ theta @ a == pytest.approx(np.exp(0.5j), abs=1e-9)
