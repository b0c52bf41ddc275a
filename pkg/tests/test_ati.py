import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad, quad_vec
from scipy.signal import find_peaks
from scipy.special import roots_legendre

from attoqo.ati import (
    ContinuumGrid,
    continuum_displacement,
    dati_amplitudes,
    dati_field_state,
    emission_table,
    falloff_ratio,
    hhg_single_photon_probability,
    light_matter_entropy,
    mode_displacement,
    photoelectron_spectrum,
    photon_emission_probability,
    two_branch_entropy,
)
from attoqo.errors import CoverageError, DomainError, NyquistError, OrderingError
from attoqo.qstate import CouplingConfig
from attoqo.sfa import (
    AtomModel,
    LaserPulse,
    ionization_amplitude,
    ponderomotive_energy,
    semiclassical_action,
    transition_dipole,
)

H = AtomModel(0.5)
CP = CouplingConfig(q_cutoff=10)
LN2 = np.log(2.0)


@pytest.fixture(scope="module")
def nir():
    return LaserPulse.from_lab(800.0, 1e14, cycles=8)


@pytest.fixture(scope="module")
def mir():
    return LaserPulse.from_lab(2400.0, 1e14, cycles=8)


def flat(wavelength=800.0, intensity=1e14, cycles=12):
    return LaserPulse.from_lab(wavelength, intensity, cycles=cycles, envelope="flat-top", ramp_cycles=2)


# ---------------------------------------------------------------------------
# grids and classical paths


def test_continuum_grid():
    with pytest.raises(DomainError):
        ContinuumGrid(1.0, 63)
    with pytest.raises(DomainError):
        ContinuumGrid(0.0)
    p = flat()
    g = ContinuumGrid.for_pulse(p, 101)
    assert g.v[0] == -g.v_max and g.v[-1] == g.v_max
    np.testing.assert_allclose(g.v, -g.v[::-1], atol=1e-15)
    assert g.weights().sum() == pytest.approx(2 * g.v_max)
    g.check_covers(p)
    with pytest.raises(CoverageError):
        ContinuumGrid(0.9 * np.sqrt(4 * ponderomotive_energy(p))).check_covers(p)
    with pytest.raises(DomainError):
        ContinuumGrid.for_pulse(p, energy_span=1.5)


def test_displacement_free_flight():
    p = flat().with_amplitude(0.0)
    assert continuum_displacement(0.7, 300.0, 100.0, p) == pytest.approx(140.0, abs=1e-12)
    assert continuum_displacement(0.7, 250.0, 250.0, flat()) == 0.0
    with pytest.raises(OrderingError):
        continuum_displacement(0.1, 10.0, 20.0, p)


def test_displacement_monochromatic_closed_form():
    p = flat(cycles=12)
    T = p.period
    t1 = 2 * T + np.linspace(0.1, 5.0, 7)  # inside the flat top
    t = t1 + np.linspace(3.0, 9 * T, 7)
    v = np.linspace(-1.0, 1.0, 7)

    def ph(x):
        return p.omega * (x - p.center) + p.cep

    a_t = -(p.E0 / p.omega) * np.sin(ph(t))
    int_a = (p.E0 / p.omega**2) * (np.cos(ph(t)) - np.cos(ph(t1)))
    exact = (v + a_t) * (t - t1) - int_a
    np.testing.assert_allclose(continuum_displacement(v, t, t1, p), exact, rtol=0, atol=1e-10)


def test_displacement_rate_is_kinetic_momentum(nir):
    # moving the endpoint back at fixed canonical momentum: d(dr)/dt equals v at t
    t1, t, h = 300.0, 500.0, 1e-4
    p_can = 0.4 + nir.vector_potential(t)
    rate = (
        continuum_displacement(0.4, t, t1, nir)
        - continuum_displacement(p_can - nir.vector_potential(t - h), t - h, t1, nir)
    ) / h
    assert rate == pytest.approx(0.4, abs=1e-3)


# ---------------------------------------------------------------------------
# mode displacements


def _delta_by_quad(v, t, tp, pulse, g, q):
    """g sqrt(q) int dr(tau) exp(-i q w tau) by adaptive quadrature of the path."""
    p_can = v + float(pulse.vector_potential(t))

    def path(tau):
        return continuum_displacement(p_can - float(pulse.vector_potential(tau)), tau, tp, pulse)

    w = q * pulse.omega
    re = quad(lambda x: path(x) * np.cos(w * x), tp, t, limit=2000, epsabs=1e-11)[0]
    im = quad(lambda x: -path(x) * np.sin(w * x), tp, t, limit=2000, epsabs=1e-11)[0]
    return g * np.sqrt(q) * (re + 1j * im)


@pytest.mark.parametrize("q", [1, 3, 7])
def test_mode_displacement_matches_adaptive_quadrature(nir, q):
    tp, t = 250.0, nir.t_end
    got = mode_displacement(0.3, t, tp, nir, CP, q)
    ref = _delta_by_quad(0.3, t, tp, nir, CP.g, q)
    assert abs(got - ref) < 1e-7 * abs(ref)


def test_mode_displacement_free_flight_closed_form():
    p = flat().with_amplitude(0.0)
    v, tp, t, w = 0.5, 100.0, 900.0, p.omega
    anti = lambda x: np.exp(-1j * w * x) * (1j * x / w + 1 / w**2)
    exact = CP.g * v * (anti(t) - anti(tp) - tp * (np.exp(-1j * w * t) - np.exp(-1j * w * tp)) / (-1j * w))
    assert mode_displacement(v, t, tp, p, CP, 1) == pytest.approx(exact, rel=1e-12)
    # an electron at rest in a field-free region never moves
    assert abs(mode_displacement(0.0, t, tp, p, CP, 5)) < 1e-10


def test_mode_displacement_linear_in_g(nir):
    a = mode_displacement(0.2, nir.t_end, 400.0, nir, CouplingConfig(1e-4), 2)
    b = mode_displacement(0.2, nir.t_end, 400.0, nir, CouplingConfig(2e-4), 2)
    assert b == pytest.approx(2 * a, rel=1e-13)


def test_mode_displacement_errors(nir):
    with pytest.raises(OrderingError):
        mode_displacement(0.1, 10.0, 20.0, nir, CP, 1)
    with pytest.raises(NyquistError):
        mode_displacement(0.1, 500.0, 20.0, nir, CP, 30, dt=2.0)
    with pytest.raises(DomainError):
        mode_displacement(0.1, 500.0, 20.0, nir, CP, 0)
    assert mode_displacement(0.1, 20.0, 20.0, nir, CP, 1) == 0


def test_mode_displacement_grows_with_wavelength(nir, mir):
    # same electron momentum, born at the pulse centre, detected at the end
    d8 = mode_displacement(0.5, nir.t_end, nir.center, nir, CP, 1)
    d24 = mode_displacement(0.5, mir.t_end, mir.center, mir, CP, 1)
    assert abs(d24) > abs(d8)


# ---------------------------------------------------------------------------
# field states


def test_zero_field_gives_empty_state(nir):
    s = dati_field_state(0.3, nir.with_amplitude(0.0), H, CP)
    assert s.n_terms == 0
    assert s.norm_squared() == 0.0
    assert s.decoupled_amplitude() == 0


def test_decoupled_amplitude_is_semiclassical(nir):
    v = np.array([-0.6, 0.1, 0.45])
    m = dati_amplitudes(nir, H, v)
    for vi, mi in zip(v, m):
        assert dati_field_state(vi, nir, H, CP).decoupled_amplitude() == pytest.approx(mi, rel=1e-12)


def test_dati_amplitudes_match_sfa_ionization_amplitude(nir):
    t = np.linspace(0, nir.t_end, 1767)
    w = np.full(t.size, t[1] - t[0])
    w[0] = w[-1] = 0.5 * w[0]
    for v in (-0.5, 0.2):
        ref = -1j * (w @ ionization_amplitude(v, t, nir, H))
        assert dati_amplitudes(nir, H, [v], dt=nir.t_end / 1766)[0] == pytest.approx(ref, rel=1e-10)


def test_explicit_coarse_step_raises(mir):
    with pytest.raises(NyquistError):
        dati_amplitudes(mir, H, [1.0], dt=1.0)


def test_decoupling_limit_norm(nir):
    s = dati_field_state(0.35, nir, H, CouplingConfig(1e-9, q_cutoff=10))
    assert s.norm_squared() == pytest.approx(abs(s.decoupled_amplitude()) ** 2, rel=1e-6)


def test_gram_norm_matches_phase_space(nir):
    short = LaserPulse.from_lab(800.0, 1e14, cycles=2)
    s = dati_field_state(0.3, short, H, CP, dt=0.5)
    assert s.n_terms < 600
    assert s.norm_squared() == pytest.approx(s.to_superposition().norm_squared(), rel=1e-10)
    with pytest.raises(DomainError):
        s.single_photon_amplitude(11)


def test_integrated_norm_matches_yield_oracle(nir):
    """Sum of squared field-state norms over momenta against an adaptive SFA yield."""
    c5 = CouplingConfig(q_cutoff=5)
    grid = ContinuumGrid.for_pulse(nir, 128)
    norms = np.array([dati_field_state(v, nir, H, c5).norm_squared() for v in grid.v])
    total = grid.weights() @ norms

    x, wx = roots_legendre(128)
    v = grid.v_max * x

    def integrand(t):
        s = semiclassical_action(v, nir.t_end, t, nir, H)
        amp = nir.electric_field(t) * transition_dipole(v - nir.vector_potential(t), H) * np.exp(-1j * s)
        return np.concatenate([amp.real, amp.imag])

    parts = quad_vec(integrand, 0.0, nir.t_end, epsrel=1e-6, limit=4000)[0]
    re, im = parts[:128], parts[128:]
    oracle = grid.v_max * (wx @ (re**2 + im**2))
    assert total == pytest.approx(oracle, rel=0.02)
    assert total <= 1.0


# ---------------------------------------------------------------------------
# photoelectron spectra


def test_zero_field_spectrum(nir):
    s = photoelectron_spectrum(nir.with_amplitude(0.0), H, ContinuumGrid(1.0, 64))
    assert np.all(s.yield_ == 0)


def test_spectrum_csv_and_coverage(nir):
    s = photoelectron_spectrum(nir, H, ContinuumGrid.for_pulse(nir, 128))
    head = s.to_csv().splitlines()[0]
    assert head.lstrip("# ") == "energy_au,energy_over_Up,yield"
    assert np.all(s.energy > 0)
    with pytest.raises(CoverageError):
        photoelectron_spectrum(nir, H, ContinuumGrid(0.5, 64))
    with pytest.raises(CoverageError):
        falloff_ratio(s, 2.0, 20.0)


def test_yield_bounded(nir):
    grid = ContinuumGrid.for_pulse(nir, 256)
    m = dati_amplitudes(nir, H, grid.v)
    assert 0 < grid.weights() @ np.abs(m) ** 2 <= 1.0


def test_ati_comb_spacing():
    p = flat()
    grid = ContinuumGrid.for_pulse(p, 1001)
    s = photoelectron_spectrum(p, H, grid)
    w, up = p.omega, s.up
    step = w / 40
    e = np.arange(0.05 * up, 1.9 * up, step)
    y = np.interp(e, s.energy, np.log(s.yield_))
    peaks, _ = find_peaks(y, distance=int(0.6 * w / step))
    spacing = np.median(np.diff(e[peaks]))
    # energy bin of the momentum grid at the top of the band
    ebin = np.sqrt(2 * 1.9 * up) * grid.step
    assert len(peaks) >= 5
    assert abs(spacing - w) < ebin


@pytest.mark.parametrize("wavelength,intensity", [(1600.0, 1e14), (1600.0, 2e14), (2000.0, 1e14), (2400.0, 5e13)])
def test_two_up_falloff_in_tunneling_regime(wavelength, intensity):
    p = LaserPulse.from_lab(wavelength, intensity, cycles=8)
    assert np.sqrt(H.ip / (2 * ponderomotive_energy(p))) < 1
    s = photoelectron_spectrum(p, H, ContinuumGrid.for_pulse(p, 1601))
    assert falloff_ratio(s) > 10


# ---------------------------------------------------------------------------
# single-photon emission


def test_emission_zero_field(nir):
    assert photon_emission_probability(nir.with_amplitude(0.0), H, CP, 1, ContinuumGrid(1.0, 64)) == 0.0


def test_hhg_single_photon_reference():
    assert hhg_single_photon_probability(1.0) == pytest.approx(np.exp(-1))
    np.testing.assert_allclose(hhg_single_photon_probability([0, 2j]), [0, 4 * np.exp(-4)])


@pytest.fixture(scope="module")
def perturbative_table(mir):
    cp = CouplingConfig(1e-6, q_cutoff=10)
    return cp, emission_table(mir, H, cp, np.arange(1, 6), ContinuumGrid.for_pulse(mir, 64))


def test_ati_emission_exceeds_hhg_at_low_orders(perturbative_table):
    _, t = perturbative_table
    assert np.all(t.p_ati > t.p_hhg_reference)
    assert t.to_csv().splitlines()[0].lstrip("# ") == "q,p_ati,p_hhg_reference"


def test_ati_emission_decreases_with_order(perturbative_table):
    _, t = perturbative_table
    assert np.all(np.diff(t.p_ati) < 0)


def test_emission_scales_as_g_squared(nir):
    grid = ContinuumGrid.for_pulse(nir, 64)
    a = photon_emission_probability(nir, H, CouplingConfig(1e-8, q_cutoff=10), 3, grid)
    b = photon_emission_probability(nir, H, CouplingConfig(5e-9, q_cutoff=10), 3, grid)
    assert b == pytest.approx(0.25 * a, rel=1e-6)


# ---------------------------------------------------------------------------
# entanglement


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-6, 1.0), st.floats(1e-6, 1.0), st.floats(0.0, 1.0), st.floats(0, 2 * np.pi))
def test_two_branch_entropy_bounds(a, b, c, phi):
    s = two_branch_entropy(a, b, c * np.sqrt(a * b) * np.exp(1j * phi))
    assert -1e-12 <= s <= LN2 + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-3, 1.0), st.floats(1e-3, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_two_branch_entropy_grows_with_separation(a, b, c1, c2):
    lo, hi = sorted([c1, c2])
    # smaller overlap means larger branch separation
    assert two_branch_entropy(a, b, lo * np.sqrt(a * b)) >= two_branch_entropy(a, b, hi * np.sqrt(a * b)) - 1e-10


def test_two_branch_entropy_limits():
    assert two_branch_entropy(0.3, 0.3, 0.3) == pytest.approx(0.0, abs=1e-10)
    assert two_branch_entropy(0.3, 0.3, 0.0) == pytest.approx(LN2, abs=1e-12)
    # unequal weights, orthogonal branches: binary entropy
    p = 0.2
    assert two_branch_entropy(p, 1 - p, 0.0) == pytest.approx(-p * np.log(p) - (1 - p) * np.log(1 - p), abs=1e-12)
    assert two_branch_entropy(0.0, 0.0, 0.0) == 0.0
    with pytest.raises(DomainError):
        two_branch_entropy(-1.0, 1.0, 0.0)


def test_entropy_decoupling_limit(nir):
    s = light_matter_entropy(nir, H, CouplingConfig(1e-9, q_cutoff=10), 0.6)
    assert 0 <= s < 1e-6


def test_entropy_forced_separation(nir):
    # a huge coupling makes the two field branches orthogonal
    s = light_matter_entropy(nir, H, CouplingConfig(1.0, q_cutoff=4), 0.6)
    plus = dati_field_state(0.6, nir, H, CouplingConfig(1.0, q_cutoff=4)).norm_squared()
    minus = dati_field_state(-0.6, nir, H, CouplingConfig(1.0, q_cutoff=4)).norm_squared()
    p = plus / (plus + minus)
    assert s == pytest.approx(-p * np.log(p) - (1 - p) * np.log(1 - p), abs=1e-6)


def test_entropy_larger_in_mid_infrared(nir, mir):
    v = np.sqrt(2 * 0.2)  # equal electron energy for both wavelengths
    s8 = light_matter_entropy(nir, H, CP, v)
    s24 = light_matter_entropy(mir, H, CP, v)
    assert 0 <= s8 < s24 <= LN2
    with pytest.raises(DomainError):
        light_matter_entropy(nir, H, CP, 0.0)
