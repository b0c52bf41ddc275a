import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm
from scipy.optimize import curve_fit

from attoqo.coherence import (
    CorrelationSeries,
    EnvironmentConfig,
    GaussianSource,
    csi_parameter,
    damped_spectrum,
    equal_time_g2,
    first_order_correlation,
    first_order_from_source,
    g1_normalized,
    g2,
    g2_from_source,
    gaussian_source_from_state,
    incoherent_power_bound,
    mode_photon_numbers,
    scaling_exponents,
    source_moments,
    wkt_spectrum,
)
from attoqo.errors import DomainError, NyquistError, PhysicalityError, StationarityError, ZeroNormError
from attoqo.phase_space import GaussianModeState
from attoqo.qstate import (
    BENCHMARK_EMITTERS,
    BilinearCoefficients,
    CouplingConfig,
    HarmonicAmplitudes,
    coherent_amplitudes,
    gaussian_output_state,
)
from attoqo.sfa import (
    AtomModel,
    DipoleCorrelation,
    DipoleRecord,
    LaserPulse,
    TimeGrid,
    dipole_correlation,
    dipole_expectation,
    hhg_spectrum,
)

from fock_oracle import annihilation, displacement

H = AtomModel(0.5)


@pytest.fixture(scope="module")
def bench():
    p = LaserPulse.from_lab(800.0, 1e14, cycles=8)
    rec = dipole_expectation(p, H, TimeGrid.covering(p, 0.2))
    n = 2274
    corr = dipole_correlation(p, H, TimeGrid(0.0, rec.grid.t_end / (n - 1), n))
    return p, rec, corr


def synthetic_record(orders=(1, 3, 5), amps=(1.0, 0.3, 0.1)):
    # harmonics fall exactly on FFT bins; the envelope vanishes at both ends
    g = TimeGrid(0.0, 0.5, 4000)
    w0 = 2 * np.pi * 10 / (g.n * g.dt)
    t = g.times
    env = np.sin(np.pi * t / (g.n * g.dt)) ** 2
    d = env * sum(a * np.cos(q * w0 * t + 0.3 * q) for q, a in zip(orders, amps))
    return DipoleRecord(g, d, w0)


# ---------------------------------------------------------------------------
# containers


def test_series_validation_and_csv():
    tau = np.arange(3.0)
    with pytest.raises(DomainError):
        CorrelationSeries(tau, np.ones(3), "other")
    with pytest.raises(DomainError):
        CorrelationSeries(tau, np.ones(2))
    with pytest.raises(PhysicalityError):
        CorrelationSeries(tau, np.array([1.0, 1.1, 0.5]), "normalized")
    with pytest.raises(PhysicalityError):
        CorrelationSeries(tau, np.array([1.0, -0.1, 0.5]), "g2")
    s = CorrelationSeries(tau, np.array([1.0, 1j, -1.0]))
    assert "tau,re,im" in s.to_csv()
    assert "tau,g2" in CorrelationSeries(tau, np.ones(3), "g2").to_csv()


def test_environment_config():
    env = EnvironmentConfig(g0=0.1)
    assert env.kappa == pytest.approx(np.pi * 0.01)
    assert EnvironmentConfig(kappa=env.kappa).g0 == pytest.approx(0.1)
    assert EnvironmentConfig(kappa=0.0).g0 == 0.0
    with pytest.raises(DomainError):
        EnvironmentConfig(kappa=-1.0)
    with pytest.raises(DomainError):
        EnvironmentConfig()
    with pytest.raises(DomainError):
        EnvironmentConfig(kappa=1.0, g0=1.0)


# ---------------------------------------------------------------------------
# first-order correlation


def test_zero_dipole_gives_zero_series():
    g = TimeGrid(0.0, 0.5, 200)
    rec = DipoleRecord(g, np.zeros(g.n), 0.057)
    corr = DipoleCorrelation(g, np.zeros((g.n, g.n), dtype=complex))
    s = first_order_correlation(rec, corr, 3, CouplingConfig())
    assert np.all(s.values == 0) and s.intensity0 == 0
    with pytest.raises(ZeroNormError):
        g1_normalized(s)


def test_equal_time_value_is_photon_number(bench):
    p, rec, _ = bench
    cp = CouplingConfig(n_emitters=1000)
    chi = coherent_amplitudes(rec, cp)
    for q in (1, 7, 13):
        s = first_order_correlation(rec, None, q, cp, n_delay=1)
        assert s.intensity0 == pytest.approx(abs(chi.chi[q - 1]) ** 2, rel=1e-12)


def test_emitter_scaling_of_components(bench):
    _, rec, corr = bench
    t = rec.grid.t_end / 2
    one = first_order_correlation(rec, corr, 9, CouplingConfig(n_emitters=1), t=t, n_delay=20)
    three = first_order_correlation(rec, corr, 9, CouplingConfig(n_emitters=3), t=t, n_delay=20)
    assert np.allclose(three.coherent, 9 * one.coherent, rtol=1e-12, atol=0)
    assert np.allclose(three.incoherent, 3 * one.incoherent, rtol=1e-12, atol=0)


def test_nyquist_and_grid_checks(bench):
    p, rec, corr = bench
    with pytest.raises(NyquistError):
        first_order_correlation(rec, corr, 200, CouplingConfig())
    short = DipoleCorrelation(TimeGrid(0.0, 1.0, 10), np.eye(10, dtype=complex))
    with pytest.raises(DomainError):
        first_order_correlation(rec, short, 3, CouplingConfig())
    with pytest.raises(DomainError):
        first_order_correlation(rec, None, 3, CouplingConfig(), t=-50.0)


def test_g1_coherent_only_is_unity(bench):
    _, rec, _ = bench
    s = g1_normalized(first_order_correlation(rec, None, 11, CouplingConfig(), t=rec.grid.t_end / 2, n_delay=400))
    assert np.max(np.abs(np.abs(s.values) - 1)) < 1e-12


def test_g1_fluctuations_decay_within_pulse(bench):
    _, rec, corr = bench
    cp = CouplingConfig()
    src = source_moments(rec, corr, 11, cp)
    pure = GaussianSource(np.zeros(src.slots), src.normal, src.anomalous, src.times, src.omega)
    g = np.abs(g1_normalized(first_order_from_source(pure, t=rec.grid.t_end / 2, n_delay=300)).values)
    assert np.all(g <= 1 + 1e-9)
    assert g[0] == pytest.approx(1.0, abs=1e-12)
    assert g.min() < 0.9


def test_g1_long_time_limit_is_unity(bench):
    _, rec, corr = bench
    for n in (1, BENCHMARK_EMITTERS):
        s = g1_normalized(first_order_correlation(rec, corr, 11, CouplingConfig(n_emitters=n), n_delay=200))
        assert np.max(np.abs(np.abs(s.values) - 1)) < 1e-12


# ---------------------------------------------------------------------------
# Gaussian toys against the Fock oracle


def two_mode_fock(chi, G, K, n=28):
    a = annihilation(n)
    eye = np.eye(n)
    ops = [np.kron(a, eye), np.kron(eye, a)]
    h = np.zeros((n * n, n * n), dtype=complex)
    for q in range(2):
        for p in range(2):
            h += 0.5 * (G[q, p] * ops[q].conj().T @ ops[p].conj().T + np.conj(G[q, p]) * ops[q] @ ops[p])
            h -= K[q, p] * ops[q].conj().T @ ops[p]
    psi = np.zeros(n * n, dtype=complex)
    psi[0] = 1.0
    psi = expm(-1j * h) @ psi
    psi = np.kron(displacement(chi[0], n), displacement(chi[1], n)) @ psi
    return psi, ops


def expect(psi, op):
    return complex(psi.conj() @ op @ psi)


TOY_G = np.array([[0.1, 0.35j], [0.35j, -0.05]])
TOY_K = np.array([[0.2, 0.1 - 0.05j], [0.1 + 0.05j, -0.1]])
TOY_CHI = np.array([0.6 + 0.2j, -0.3 + 0.4j])


@pytest.fixture(scope="module")
def toy():
    st_ = gaussian_output_state(HarmonicAmplitudes(TOY_CHI), BilinearCoefficients(TOY_G, TOY_K))
    psi, ops = two_mode_fock(TOY_CHI, TOY_G, TOY_K)
    return gaussian_source_from_state(st_), psi, ops


def test_two_mode_first_order_matches_fock(toy):
    src, psi, (a1, a2) = toy
    n1 = expect(psi, a1.conj().T @ a1).real
    n2 = expect(psi, a2.conj().T @ a2).real
    c12 = expect(psi, a1.conj().T @ a2)
    assert src.intensity(0) == pytest.approx(n1, abs=1e-8)
    assert src.intensity(1) == pytest.approx(n2, abs=1e-8)
    assert abs(sum(src.first_order(0, 1)) - c12) < 1e-8
    # as a two-slot series: g1 between the modes
    timed = GaussianSource(src.mean, src.normal, src.anomalous, np.array([0.0, 1.0]))
    g1 = g1_normalized(first_order_from_source(timed, t=0.0, n_delay=2)).values[1]
    assert abs(g1 - c12 / np.sqrt(n1 * n2)) < 1e-8


def test_two_mode_g2_matches_fock(toy):
    src, psi, (a1, a2) = toy
    m = equal_time_g2(src)
    ad = [a1.conj().T, a2.conj().T]
    a = [a1, a2]
    n = [expect(psi, ad[i] @ a[i]).real for i in range(2)]
    for i in range(2):
        for j in range(2):
            ref = expect(psi, ad[i] @ ad[j] @ a[j] @ a[i]).real / (n[i] * n[j])
            assert m[i, j] == pytest.approx(ref, abs=1e-8)


def test_two_mode_squeezed_violates_csi():
    r = 0.4
    G = np.array([[0, r], [r, 0]], dtype=complex)
    state = gaussian_output_state(HarmonicAmplitudes(np.zeros(2, complex)), BilinearCoefficients(G, np.zeros((2, 2))))
    m = equal_time_g2(gaussian_source_from_state(state))
    R = csi_parameter(m[0, 0], m[1, 1], m[0, 1])
    assert R > 1
    psi, (a1, a2) = two_mode_fock(np.zeros(2), G, np.zeros((2, 2)))
    n = expect(psi, a1.conj().T @ a1).real
    ref = {
        "11": expect(psi, a1.conj().T @ a1.conj().T @ a1 @ a1).real / n**2,
        "12": expect(psi, a1.conj().T @ a2.conj().T @ a2 @ a1).real / n**2,
    }
    assert m[0, 0] == pytest.approx(ref["11"], abs=1e-8)
    assert m[0, 1] == pytest.approx(ref["12"], abs=1e-8)
    assert R == pytest.approx(ref["12"] ** 2 / ref["11"] ** 2, rel=1e-8)
    # closed form: g2_11 = 2, g2_12 = 2 + 1/sinh^2 r
    assert m[0, 1] == pytest.approx(2 + 1 / np.sinh(r) ** 2, rel=1e-10)


# ---------------------------------------------------------------------------
# second order and CSI


def test_g2_coherent_only_is_one(bench):
    _, rec, _ = bench
    for t in (rec.grid.t_end / 3, None):
        s = g2(rec, None, 9, CouplingConfig(), t=t, n_delay=100)
        assert np.max(np.abs(s.values - 1)) < 1e-9


def test_thermal_anchor():
    for nbar in (0.01, 1.0, 37.0):
        st_ = GaussianModeState(np.zeros(2), (nbar + 0.5) * np.eye(2))
        assert equal_time_g2(gaussian_source_from_state(st_))[0, 0] == pytest.approx(2.0, abs=1e-6)
    two = GaussianModeState(np.zeros(4), np.diag([1.5, 1.5, 3.0, 3.0]))
    m = equal_time_g2(gaussian_source_from_state(two))
    assert csi_parameter(m[0, 0], m[1, 1], m[0, 1]) == pytest.approx(0.25, abs=1e-12)


def test_classical_inequality_battery():
    t = np.arange(50) * 0.2
    lag = np.abs(t[:, None] - t[None, :])
    z = np.zeros((50, 50))
    cases = {
        "coherent": GaussianSource(np.full(50, 1.3 - 0.4j), z, z, t, 0.5),
        "thermal": GaussianSource(np.zeros(50), 2.0 * np.exp(-0.7 * lag), z, t, 0.5),
        "mixed": GaussianSource(np.full(50, 0.8 + 0j), 0.5 * np.exp(-0.3 * lag), z, t, 0.5),
    }
    for name, src in cases.items():
        v = g2_from_source(src, t=0.0, n_delay=50).values
        assert v[0] >= 1 - 1e-12, name
        assert np.all(v[0] >= v - 1e-12), name
    th = g2_from_source(cases["thermal"], t=0.0, n_delay=50).values
    assert np.allclose(th, 1 + np.exp(-1.4 * t), atol=1e-12)


def test_csi_product_coherent_baseline(bench):
    _, rec, _ = bench
    amps = coherent_amplitudes(rec, CouplingConfig(n_emitters=BENCHMARK_EMITTERS, q_cutoff=15), alpha_in=50.0)
    m = equal_time_g2(gaussian_source_from_state(gaussian_output_state(amps)))
    for i in range(15):
        for j in range(15):
            assert csi_parameter(m[i, i], m[j, j], m[i, j]) == pytest.approx(1.0, abs=1e-9)


def test_csi_domain_errors():
    with pytest.raises(DomainError):
        csi_parameter(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        csi_parameter(1.0, -2.0, 1.0)
    with pytest.raises(DomainError):
        csi_parameter(1.0, 1.0, np.nan)


@settings(max_examples=30, deadline=None)
@given(
    st.floats(0.0, 3.0),
    st.floats(-2.0, 2.0),
    st.floats(-2.0, 2.0),
    st.floats(0.0, 1.0),
)
def test_g2_of_gaussian_states_is_nonnegative(nbar, re, im, sq):
    cov = (nbar + 0.5) * np.diag([np.exp(2 * sq), np.exp(-2 * sq)])
    st_ = GaussianModeState(np.sqrt(2) * np.array([re, im]), cov)
    src = gaussian_source_from_state(st_)
    if src.intensity(0) > 1e-6:
        assert equal_time_g2(src)[0, 0] >= 0


# ---------------------------------------------------------------------------
# spectra


def test_wkt_zero_kernel_gives_zero_incoherent(bench):
    _, rec, corr = bench
    zero = DipoleCorrelation(corr.grid, np.zeros_like(corr.cov))
    _, s_inc = wkt_spectrum(rec, zero, CouplingConfig())
    assert np.all(s_inc.intensity == 0)


def test_wkt_coherent_matches_hhg_bins():
    rec = synthetic_record()
    cp = CouplingConfig(n_emitters=7, q_cutoff=5)
    s_coh, _ = wkt_spectrum(rec, None, cp)
    ref = hhg_spectrum(rec, window="none")
    w0 = rec.omega0
    for q in (1, 3, 5):
        k = int(np.argmin(np.abs(ref.omega - q * w0)))
        expected = (7 * cp.g) ** 2 * ref.intensity[k] / (w0 * ref.omega[k] ** 3)
        assert s_coh.intensity[k] == pytest.approx(expected, rel=1e-6)
    assert np.count_nonzero(s_coh.intensity) == 5


def test_wkt_energy_consistency(bench):
    _, rec, corr = bench
    cp = CouplingConfig(n_emitters=BENCHMARK_EMITTERS)
    s_coh, _ = wkt_spectrum(rec, corr, cp)
    chi = coherent_amplitudes(rec, cp)
    energy = np.sum(chi.orders * rec.omega0 * chi.photon_numbers())
    assert np.sum(s_coh.omega * s_coh.intensity) == pytest.approx(energy, rel=0.02)


def test_incoherent_part_is_structureless(bench):
    _, rec, corr = bench
    q, _, inc = mode_photon_numbers(rec, corr, CouplingConfig())
    odd, even = inc[(q % 2 == 1) & (q >= 5) & (q <= 25)], inc[(q % 2 == 0) & (q >= 6) & (q <= 24)]
    # neighbouring odd and even modes differ by less than a factor 3
    ratios = odd[:-1] / even
    assert np.all((ratios < 3) & (ratios > 1 / 3))


def test_emitter_crossover(bench):
    _, rec, corr = bench
    q, coh, inc = mode_photon_numbers(rec, corr, CouplingConfig())
    plateau = (q % 2 == 1) & (q >= 9) & (q <= 21)
    # single emitter: fluctuations dominate the whole plateau and tail
    assert np.all(inc[q >= 9] > coh[q >= 9])
    n = BENCHMARK_EMITTERS
    assert np.all(n**2 * coh[plateau] > n * inc[plateau])


def test_stationarity_error():
    p = LaserPulse.from_lab(800.0, 1e14, cycles=12, envelope="flat-top", ramp_cycles=1)
    rec = dipole_expectation(p, H, TimeGrid.covering(p, 0.2))
    with pytest.raises(StationarityError):
        wkt_spectrum(rec, None, CouplingConfig())
    padded = dipole_expectation(p, H, TimeGrid.covering(p, 0.2, pad=0.3 * p.duration))
    s_coh, _ = wkt_spectrum(padded, None, CouplingConfig())
    assert s_coh.intensity.max() > 0


def test_scaling_exponents(bench):
    _, rec, corr = bench
    c, i = scaling_exponents(rec, corr, CouplingConfig(), orders=range(9, 22, 2))
    assert c == pytest.approx(2.0, abs=0.05)
    assert i == pytest.approx(1.0, abs=0.05)


# ---------------------------------------------------------------------------
# damping


def lorentz(w, a, w_c, hw, c):
    return a * hw**2 / ((w - w_c) ** 2 + hw**2) + c


def test_damped_kappa_zero_recovers_bins():
    rec = synthetic_record()
    cp = CouplingConfig(n_emitters=3, q_cutoff=5)
    s = damped_spectrum(rec, EnvironmentConfig(kappa=0.0), cp)
    ref = hhg_spectrum(rec, window="none")
    w0 = rec.omega0
    nz = ref.omega > 0
    expected = (3 * cp.g) ** 2 * ref.intensity[nz] / (w0 * ref.omega[nz] ** 3)
    # hhg_spectrum uses rectangle weights, the damped spectrum trapezoid ones
    assert np.allclose(s.intensity[nz], expected, rtol=1e-7, atol=1e-12 * expected.max())


def test_damped_linewidth():
    g = TimeGrid(0.0, 0.5, 16000)
    w0 = 2 * np.pi * 400 / (g.n * g.dt)
    rec = DipoleRecord(g, np.cos(w0 * g.times) + 0.5 * np.cos(3 * w0 * g.times), w0)
    bw = 2 * np.pi / (g.n * g.dt)
    for kappa in (10 * bw, 5 * bw):
        s = damped_spectrum(rec, EnvironmentConfig(kappa=kappa), CouplingConfig(q_cutoff=3))
        for q in (1, 3):
            m = np.abs(s.omega - q * w0) < 6 * kappa
            # the q/w0 mode weight is removed before fitting the line shape
            y = s.intensity[m] / s.harmonic_order[m]
            popt, _ = curve_fit(lorentz, s.omega[m], y, p0=[y.max(), q * w0, kappa, 0.0])
            assert abs(popt[2]) == pytest.approx(kappa, rel=0.05)


def test_damped_peak_ratio_independent_of_kappa():
    g = TimeGrid(0.0, 0.5, 16000)
    w0 = 2 * np.pi * 400 / (g.n * g.dt)
    rec = DipoleRecord(g, np.cos(w0 * g.times) + 0.5 * np.cos(3 * w0 * g.times), w0)
    bw = 2 * np.pi / (g.n * g.dt)
    ratios = []
    for kappa in (2.5 * bw, 5 * bw, 10 * bw):
        s = damped_spectrum(rec, EnvironmentConfig(kappa=kappa), CouplingConfig(q_cutoff=3))
        i1, i3 = (int(np.argmin(np.abs(s.omega - q * w0))) for q in (1, 3))
        ratios.append(s.intensity[i3] / s.intensity[i1])
    assert np.ptp(ratios) < 1e-2 * np.mean(ratios)


def test_incoherent_power_bound():
    assert incoherent_power_bound(0.3, 0.3) == pytest.approx(1.0)
    assert incoherent_power_bound(1.2, 0.5) == pytest.approx(16 * incoherent_power_bound(0.3, 0.5))
    assert incoherent_power_bound(CouplingConfig(g=2e-4), EnvironmentConfig(g0=1e-4)) == pytest.approx(4.0)
    with pytest.raises(DomainError):
        incoherent_power_bound(0.1, 0.0)
    with pytest.raises(DomainError):
        incoherent_power_bound(0.1, EnvironmentConfig(kappa=0.0))


def test_toy_fluctuation_emission_saturates_below_bound():
    # damped mode driven by a coloured two-level fluctuation of population p;
    # moments n = <a^+ a> and c = <a^+ s> obey closed linear equations
    g, env = 0.05, EnvironmentConfig(g0=0.2)
    kappa = env.kappa
    bound = incoherent_power_bound(g, env)
    for gamma, detuning, pop in [(0.01, 0.0, 1.0), (0.5, 0.0, 1.0), (0.05, 0.3, 0.6)]:

        def rhs(t, y):
            n, c = y[0], y[1] + 1j * y[2]
            dn = -2 * kappa * n + 2 * g * c.real
            dc = (1j * detuning - kappa - gamma) * c + g * pop
            return [dn, dc.real, dc.imag]

        t_end = 40 / min(kappa, gamma)
        sol = solve_ivp(rhs, (0, t_end), [0.0, 0.0, 0.0], rtol=1e-10, atol=1e-14, dense_output=True)
        power = 2 * kappa * sol.y[0]
        late = 2 * kappa * sol.sol(np.array([0.8 * t_end, t_end]))[0]
        assert late[1] == pytest.approx(late[0], rel=1e-6)  # saturated
        assert np.all(power <= bound)
