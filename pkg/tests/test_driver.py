import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from attoqo.driver import (
    MIN_NODES,
    ClassicalLimitWeight,
    DriverDistribution,
    SamplerConfig,
    averaged_hhg_spectrum,
    averaged_observable,
    classical_limit_weight,
    cutoff_bin,
    pulse_for_amplitude,
    sample_nodes,
)
from attoqo.errors import DomainError, PrecisionError
from attoqo.qstate import CouplingConfig, driver_amplitude
from attoqo.sfa import AtomModel, LaserPulse, TimeGrid, dipole_expectation, hhg_spectrum

H = AtomModel(0.5)
CP = CouplingConfig()


@pytest.fixture(scope="module")
def template():
    return LaserPulse.from_lab(800.0, 1e14, cycles=8)


@pytest.fixture(scope="module")
def coherent_run(template):
    a0 = driver_amplitude(template, CP)
    w = classical_limit_weight(DriverDistribution("coherent", a0))
    return a0, averaged_hhg_spectrum(w, template, H, CP)


# ---------------------------------------------------------------------------
# distributions and weights


def test_distribution_validation():
    with pytest.raises(DomainError):
        DriverDistribution("laser")
    with pytest.raises(DomainError):
        DriverDistribution("coherent", 1.0, r=0.1)
    with pytest.raises(DomainError):
        DriverDistribution("thermal", nbar=-1.0)
    with pytest.raises(DomainError):
        DriverDistribution("squeezed-vacuum", alpha0=1.0, r=1.0)
    with pytest.raises(DomainError):
        DriverDistribution("displaced-squeezed", 1.0, r=1.0, nbar=2.0)
    with pytest.raises(DomainError):
        DriverDistribution.matched("coherent", 4.0)


def test_mean_photon_number_and_matching():
    d = DriverDistribution("displaced-squeezed", 2 + 1j, r=0.5)
    assert d.mean_photon_number == pytest.approx(5 + np.sinh(0.5) ** 2)
    for kind in ("squeezed-vacuum", "thermal"):
        assert DriverDistribution.matched(kind, 37.0).mean_photon_number == pytest.approx(37.0)


def test_coherent_weight_is_point_mass():
    w = classical_limit_weight(DriverDistribution("coherent", 3 - 2j))
    assert w.is_point_mass and w.mean == 3 - 2j
    nodes, wts = sample_nodes(w, SamplerConfig(nodes=1))
    assert nodes.tolist() == [3 - 2j] and wts.tolist() == [1.0]


def test_thermal_sampling_mean_intensity():
    nbar = 7.5
    w = classical_limit_weight(DriverDistribution("thermal", nbar=nbar))
    np.testing.assert_allclose(w.cov, 0.5 * nbar * np.eye(2))
    nodes, _ = sample_nodes(w, SamplerConfig("mc", 100_000, seed=3))
    x = np.abs(nodes) ** 2
    # |alpha|^2 is exponential with mean nbar, so sigma = nbar
    assert abs(x.mean() - nbar) < 3 * nbar / np.sqrt(x.size)


@pytest.mark.parametrize("theta", [0.0, 0.9, np.pi])
def test_squeezed_sample_covariance(theta):
    r = 0.7
    w = classical_limit_weight(DriverDistribution("squeezed-vacuum", r=r, theta=theta))
    nodes, _ = sample_nodes(w, SamplerConfig("mc", 100_000, seed=1))
    c = np.cov(np.stack([nodes.real, nodes.imag]))
    lam = np.linalg.eigvalsh(c)
    assert lam[1] / lam[0] == pytest.approx(np.exp(4 * r), rel=0.03)
    assert lam[0] == pytest.approx(0.25 * np.exp(-2 * r), rel=0.03)
    # squeezed quadrature along theta/2
    u = np.array([np.cos(theta / 2), np.sin(theta / 2)])
    assert u @ c @ u == pytest.approx(lam[0], rel=0.03)


def test_gauss_hermite_moments_exact():
    w = classical_limit_weight(DriverDistribution("displaced-squeezed", 1.5 - 0.5j, r=0.4, theta=0.3))
    nodes, wts = sample_nodes(w, SamplerConfig("gh", 25))
    assert wts.sum() == pytest.approx(1.0, abs=1e-14)
    assert wts @ nodes == pytest.approx(w.mean, abs=1e-12)
    assert wts @ np.abs(nodes) ** 2 == pytest.approx(w.mean_intensity(), rel=1e-12)


def test_sampler_validation():
    with pytest.raises(DomainError):
        SamplerConfig("grid")
    with pytest.raises(DomainError):
        SamplerConfig("gh", 20)
    with pytest.raises(DomainError):
        SamplerConfig(dt=0.0)


@pytest.mark.parametrize("method,nodes", [("mc", MIN_NODES - 1), ("gh", 9)])
def test_precision_error_below_min_nodes(method, nodes):
    w = classical_limit_weight(DriverDistribution("thermal", nbar=1.0))
    with pytest.raises(PrecisionError):
        averaged_observable(w, lambda a: 1.0, SamplerConfig(method, nodes))


# ---------------------------------------------------------------------------
# averaging


def test_constant_evaluator_zero_variance():
    w = classical_limit_weight(DriverDistribution("thermal", nbar=4.0))
    for s in (SamplerConfig("mc", 64), SamplerConfig("gh", 64)):
        m, e = averaged_observable(w, lambda a: 2.5, s)
        assert m == pytest.approx(2.5, abs=1e-14)
        assert e == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_intensity_evaluator_within_three_errors(seed):
    w = classical_limit_weight(DriverDistribution("displaced-squeezed", 3.0, r=0.8, theta=1.0))
    m, e = averaged_observable(w, lambda a: abs(a) ** 2, SamplerConfig("mc", 400, seed=seed))
    assert abs(m - w.mean_intensity()) < 3 * e


def test_vector_evaluator():
    w = classical_limit_weight(DriverDistribution("thermal", nbar=2.0))
    m, e = averaged_observable(w, lambda a: np.array([a.real, a.imag, 1.0]), SamplerConfig("gh", 36))
    assert m.shape == e.shape == (3,)
    np.testing.assert_allclose(m, [0, 0, 1], atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(
    st.floats(-3, 3),
    st.floats(-3, 3),
    st.integers(0, 1000),
    st.sampled_from(["mc", "gh"]),
)
def test_averaging_is_linear(c1, c2, seed, method):
    w = classical_limit_weight(DriverDistribution("thermal", 1.0 + 0.5j, nbar=3.0))
    s = SamplerConfig(method, 16 if method == "gh" else 32, seed=seed)
    f = lambda a: abs(a) ** 2
    h = lambda a: np.cos(a.real) * a.imag
    m1, _ = averaged_observable(w, f, s)
    m2, _ = averaged_observable(w, h, s)
    m12, _ = averaged_observable(w, lambda a: c1 * f(a) + c2 * h(a), s)
    assert m12 == pytest.approx(c1 * m1 + c2 * m2, abs=1e-10 * (1 + abs(m1) + abs(m2)))


def test_monotone_refinement():
    w = classical_limit_weight(DriverDistribution("squeezed-vacuum", r=1.2))
    f = lambda a: abs(a) ** 4
    for n in (16, 32, 64, 128):
        e1 = np.mean([averaged_observable(w, f, SamplerConfig("mc", n, seed=s))[1] for s in range(10)])
        e2 = np.mean([averaged_observable(w, f, SamplerConfig("mc", 2 * n, seed=s))[1] for s in range(10)])
        assert e2 <= e1


def test_mc_seed_reproducible():
    w = classical_limit_weight(DriverDistribution("thermal", nbar=2.0))
    a = sample_nodes(w, SamplerConfig("mc", 64, seed=11))[0]
    b = sample_nodes(w, SamplerConfig("mc", 64, seed=11))[0]
    assert np.array_equal(a, b)


# ---------------------------------------------------------------------------
# pulse mapping and spectra


def test_pulse_mapping(template):
    a0 = driver_amplitude(template, CP)
    assert pulse_for_amplitude(template, a0, a0) is template
    p = pulse_for_amplitude(template, -2 * a0, a0)
    assert p.E0 == pytest.approx(2 * template.E0)
    assert np.cos(p.cep - template.cep) == pytest.approx(-1.0)
    # the mapped pulse is the one whose own driver amplitude is the sample
    assert driver_amplitude(p, CP) == pytest.approx(-2 * a0, rel=1e-12)
    with pytest.raises(DomainError):
        pulse_for_amplitude(template, 1.0, 0.0)


def test_coherent_spectrum_bitwise(template, coherent_run):
    _, s = coherent_run
    ref = hhg_spectrum(dipole_expectation(template, H, TimeGrid.covering(template, 0.2)))
    assert np.array_equal(s.intensity, ref.intensity)
    assert np.array_equal(s.omega, ref.omega)
    assert np.all(s.extra["stderr"] == 0)
    assert 25 < s.cutoff_harmonic < 40
    assert "stderr" in s.to_csv().splitlines()[0]


def test_cutoff_bin_requires_plateau(template, coherent_run):
    _, s = coherent_run
    short = type(s)(s.omega[:3], s.intensity[:3], omega0=s.omega0)
    with pytest.raises(DomainError):
        cutoff_bin(short, template, H)


@pytest.mark.parametrize("kind", ["squeezed-vacuum", "thermal"])
def test_cutoff_extension_at_matched_photon_number(template, coherent_run, kind):
    a0, coh = coherent_run
    dist = DriverDistribution.matched(kind, abs(a0) ** 2)
    w = classical_limit_weight(dist)
    assert w.mean_intensity() == pytest.approx(abs(a0) ** 2, rel=1e-4)
    s = averaged_hhg_spectrum(w, template, H, CP, SamplerConfig("mc", 16, seed=0))
    assert s.cutoff_harmonic > coh.cutoff_harmonic
    assert np.all(np.isfinite(s.extra["stderr"]))


def test_weak_squeezing_keeps_cutoff(template, coherent_run):
    a0, coh = coherent_run
    # vacuum-level widths around a bright mean do not move the cutoff
    w = classical_limit_weight(DriverDistribution("displaced-squeezed", a0, r=0.5))
    s = averaged_hhg_spectrum(w, template, H, CP, SamplerConfig("gh", 16))
    assert s.cutoff_harmonic >= coh.cutoff_harmonic - 1
    assert isinstance(w, ClassicalLimitWeight)


def test_worker_count_does_not_change_results():
    w = classical_limit_weight(DriverDistribution("thermal", 1.0, nbar=2.0))
    f = lambda a: np.array([abs(a) ** 2, np.sin(a.real)])
    s = SamplerConfig("mc", 64, seed=4)
    m1, e1 = averaged_observable(w, f, s, workers=1)
    m4, e4 = averaged_observable(w, f, s, workers=4)
    assert np.array_equal(m1, m4) and np.array_equal(e1, e4)
