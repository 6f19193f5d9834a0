import numpy as np
import pytest

from wptlab import hpa, numerics, waveform
from wptlab.errors import DomainError, NonFiniteError, RandomSignalError


def test_linear_apply_scales():
    model = hpa.LinearHpa(gain=2.5)
    x = np.array([-1.0, 0.0, 0.3])
    np.testing.assert_allclose(hpa.apply(model, x), 2.5 * x)


def test_rapp_small_signal_is_linear():
    model = hpa.RappHpa(gain=3.0, a_s=1.0, beta=3.0)
    x = np.array([1e-4, -2e-4, 5e-5])
    np.testing.assert_allclose(hpa.apply(model, x), 3.0 * x, rtol=1e-6)


def test_rapp_saturates_at_a_s():
    model = hpa.RappHpa(gain=1.0, a_s=0.7, beta=2.0)
    out = hpa.apply(model, np.array([50.0, -80.0, 1e3]))
    np.testing.assert_allclose(np.abs(out), 0.7, rtol=1e-3)
    assert np.all(np.abs(hpa.apply(model, np.linspace(-9, 9, 101))) <= 0.7)


def test_rapp_sharper_knee_with_larger_beta():
    soft = hpa.RappHpa(gain=1.0, a_s=1.0, beta=1.0)
    hard = hpa.RappHpa(gain=1.0, a_s=1.0, beta=50.0)
    # At the knee the smooth model compresses to 1/√2, the sharp one barely.
    assert hpa.apply(soft, 1.0) == pytest.approx(2.0 ** -0.5, rel=1e-12)
    assert hpa.apply(hard, 1.0) == pytest.approx(1.0 / 2.0 ** (1.0 / 100.0), rel=1e-12)


def test_rapp_preserves_phase_of_complex_envelope():
    model = hpa.RappHpa(gain=1.0, a_s=0.5, beta=4.0)
    rng = np.random.default_rng(1)
    points = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    out = hpa.apply(model, points)
    assert np.iscomplexobj(out)
    np.testing.assert_allclose(np.angle(out), np.angle(points), atol=1e-12)
    assert np.all(np.abs(out) <= 0.5 + 1e-12)


def test_apply_rejects_non_finite():
    with pytest.raises(NonFiniteError):
        hpa.apply(hpa.LinearHpa(), np.array([1.0, np.nan]))


def test_model_validation():
    with pytest.raises(DomainError):
        hpa.LinearHpa(gain=0.0)
    with pytest.raises(DomainError):
        hpa.LinearHpa(e1_const=1.5)
    with pytest.raises(DomainError):
        hpa.RappHpa(a_s=-1.0)
    with pytest.raises(DomainError):
        hpa.RappHpa(beta=0.5)


def test_linear_e1_is_the_configured_constant():
    model = hpa.LinearHpa(e1_const=0.35)
    spec = waveform.SignalSpec(x=np.ones((1, 4), dtype=complex))
    assert hpa.e1_report(model, spec) == 0.35


def test_rapp_e1_degrades_with_drive():
    model = hpa.RappHpa(gain=1.0, a_s=1.0, beta=3.0)
    weak = waveform.SignalSpec(x=np.full((1, 4), 1e-3, dtype=complex))
    strong = waveform.SignalSpec(x=np.full((1, 4), 10.0, dtype=complex))
    e1_weak = hpa.e1_report(model, weak)
    e1_strong = hpa.e1_report(model, strong)
    assert e1_weak == pytest.approx(1.0, rel=1e-4)
    assert e1_strong < 0.1


def test_papr_single_tone():
    spec = waveform.SignalSpec(x=np.array([[1.0 + 0.0j]]))
    assert hpa.papr(spec) == pytest.approx(10.0 * np.log10(2.0), abs=0.01)


def test_papr_grows_with_coherent_tones():
    def equal_tones(n):
        return waveform.SignalSpec(x=np.ones((1, n), dtype=complex) / np.sqrt(n))

    # In-phase equal tones peak coherently: PAPR ≈ 2N in linear units.
    for n in (2, 4, 8):
        expected = 10.0 * np.log10(2.0 * n)
        assert hpa.papr(equal_tones(n)) == pytest.approx(expected, abs=0.1)


def test_papr_rejects_modulated_profiles():
    from wptlab.distributions import Cscg

    spec = waveform.SignalSpec(x=np.ones((1, 2), dtype=complex), dist=(Cscg(1.0), None))
    with pytest.raises(RandomSignalError):
        hpa.papr(spec)
