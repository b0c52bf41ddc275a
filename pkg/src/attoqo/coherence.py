"""Heisenberg-picture field observables of the harmonic modes.

Mode q with frequency w_q = q w0 evolves as

    a_q(t) = exp(-i w_q t) [a_q + g sqrt(q) sum_i int_0^t d_i(t') exp(i w_q t') dt'],

so in the frame rotating at w_q the field is the vacuum plus a source amplitude
``s(t)``.  Splitting the dipole into its mean and fluctuations, the source has a
c-number part (N emitters add coherently, weight N^2 in intensities) and an
operator part whose moments follow from the two-time kernel
C(t', t'') = <Dd(t') Dd(t'')> (independent emitters add, weight N):

    <Ds^+(t1) Ds(t2)> = N g^2 q int^t1 int^t2 exp(-i w t') exp(i w t'') C(t', t'')
    <Ds(t1) Ds(t2)>   = N g^2 q int^t1 int^t2 exp(i w t') exp(i w t'') C(t', t'').

The photon number of a mode after the pulse is |s|^2 computed with the same
weights as the displacements of :mod:`attoqo.qstate`; the displacement itself is
the complex conjugate of ``chi_q`` there (opposite frequency-sign convention,
identical photon numbers).

Higher moments use the Gaussian (Wick) factorization, which becomes exact for
many independent emitters.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DomainError, NyquistError, PhysicalityError, StationarityError, ZeroNormError
from .phase_space import GaussianModeState
from .qstate import CouplingConfig
from .sfa import DipoleCorrelation, DipoleRecord, Spectrum

__all__ = [
    "STATIONARITY_FACTOR",
    "CorrelationSeries",
    "EnvironmentConfig",
    "GaussianSource",
    "source_moments",
    "gaussian_source_from_state",
    "first_order_from_source",
    "g2_from_source",
    "first_order_correlation",
    "g1_normalized",
    "g2",
    "equal_time_g2",
    "csi_parameter",
    "mode_photon_numbers",
    "wkt_spectrum",
    "scaling_exponents",
    "damped_spectrum",
    "incoherent_power_bound",
]

# the analysis window must span this many envelope durations (RMS widths of
# the mean-dipole intensity) for the long-time limit to be taken at its end
STATIONARITY_FACTOR = 4.0


@dataclass(frozen=True)
class CorrelationSeries:
    """Correlation function sampled at uniform delays.

    ``normalization`` is ``"raw"`` (G1), ``"normalized"`` (g1) or ``"g2"``.
    For raw series ``intensity0`` is G(t, t) and ``intensity`` holds
    G(t + tau, t + tau); ``coherent`` and ``incoherent`` are the two parts of
    ``values`` coming from the mean dipole and from its fluctuations.
    """

    tau: np.ndarray
    values: np.ndarray
    normalization: str = "raw"
    intensity0: float | None = None
    intensity: np.ndarray | None = None
    coherent: np.ndarray | None = None
    incoherent: np.ndarray | None = None

    def __post_init__(self):
        if self.normalization not in ("raw", "normalized", "g2"):
            raise DomainError(f"unknown normalization {self.normalization!r}")
        if np.shape(self.tau) != np.shape(self.values):
            raise DomainError("tau and values differ in length")
        if self.normalization == "normalized" and np.any(np.abs(self.values) > 1 + 1e-9):
            raise PhysicalityError("|g1| exceeds 1")
        if self.normalization == "g2":
            v = np.asarray(self.values)
            if np.iscomplexobj(v) or np.any(v < 0):
                raise PhysicalityError("g2 must be real and non-negative")

    def to_csv(self) -> str:
        from .textio import format_csv

        if self.normalization == "g2":
            return format_csv(["tau", "g2"], [self.tau, self.values])
        v = np.asarray(self.values, dtype=complex)
        return format_csv(["tau", "re", "im"], [self.tau, v.real, v.imag], comments=[f"normalization = {self.normalization}"])


@dataclass(frozen=True)
class EnvironmentConfig:
    """Markovian bath: amplitude damping ``kappa`` and mode-bath coupling ``g0``.

    Convention: kappa = pi g0^2 (golden-rule decay into a flat continuum of unit
    density).  Either field may be omitted and is then derived from the other.
    """

    kappa: float | None = None
    g0: float | None = None

    def __post_init__(self):
        k, g0 = self.kappa, self.g0
        if k is None and g0 is None:
            raise DomainError("give kappa or g0")
        if k is None:
            k = np.pi * g0**2
        if g0 is None:
            g0 = np.sqrt(max(k, 0.0) / np.pi)
        if not (k >= 0 and g0 >= 0):
            raise DomainError("kappa and g0 must be non-negative")
        if not np.isclose(k, np.pi * g0**2, rtol=1e-12, atol=0.0):
            raise DomainError("kappa and g0 violate kappa = pi g0^2")
        object.__setattr__(self, "kappa", float(k))
        object.__setattr__(self, "g0", float(g0))


@dataclass(frozen=True)
class GaussianSource:
    """First and second moments of a field at a set of slots.

    Slots are either time samples of one mode (``times`` set, free evolution at
    ``omega`` between them) or distinct modes at equal time.  With b_i the
    rotating-frame amplitude at slot i: ``mean[i] = <b_i>``,
    ``normal[i, j] = <Db_i^+ Db_j>``, ``anomalous[i, j] = <Db_i Db_j>``.
    The split of the mean into a coherent and fluctuation part is kept in
    ``mean`` and ``normal``/``anomalous`` respectively.
    """

    mean: np.ndarray
    normal: np.ndarray
    anomalous: np.ndarray
    times: np.ndarray | None = None
    omega: float = 0.0

    def __post_init__(self):
        k = np.size(self.mean)
        if np.shape(self.normal) != (k, k) or np.shape(self.anomalous) != (k, k):
            raise DomainError("moment matrices must be square over the slots")

    @property
    def slots(self) -> int:
        return np.size(self.mean)

    def first_order(self, i: int, j: int) -> tuple[complex, complex]:
        """Coherent and fluctuation parts of <b_i^+ b_j>."""
        return complex(np.conj(self.mean[i]) * self.mean[j]), complex(self.normal[i, j])

    def intensity(self, i: int) -> float:
        return float(abs(self.mean[i]) ** 2 + self.normal[i, i].real)

    def normal_ordered_intensity(self, i: int, j: int) -> float:
        """<b_i^+ b_j^+ b_j b_i> by Wick factorization."""
        bi, bj = self.mean[i], self.mean[j]
        nii, njj, nij = self.normal[i, i].real, self.normal[j, j].real, self.normal[i, j]
        m = self.anomalous[j, i]
        val = (
            abs(bi) ** 2 * abs(bj) ** 2
            + abs(bj) ** 2 * nii
            + abs(bi) ** 2 * njj
            + 2 * np.real(bi * np.conj(bj) * nij)
            + 2 * np.real(np.conj(bi) * np.conj(bj) * m)
            + abs(m) ** 2
            + abs(nij) ** 2
            + nii * njj
        )
        return float(val)


def _check_nyquist(dt: float, w: float):
    if dt * w > np.pi:
        raise NyquistError(f"time step {dt} cannot resolve omega = {w:.4f}")


def _fundamental(record: DipoleRecord, omega0: float | None) -> float:
    w0 = omega0 or record.omega0
    if not w0:
        raise DomainError("fundamental frequency unknown: pass omega0")
    return float(w0)


def _check_grids(record: DipoleRecord, corr: DipoleCorrelation):
    rg, cg = record.grid, corr.grid
    tol = max(rg.dt, cg.dt) * (1 + 1e-9)
    if abs(rg.t0 - cg.t0) > tol or abs(rg.t_end - cg.t_end) > tol:
        raise DomainError(
            f"dipole record [{rg.t0:.2f}, {rg.t_end:.2f}] and kernel [{cg.t0:.2f}, {cg.t_end:.2f}] cover different windows"
        )


def _trapezoid_weights(n: int, dt: float) -> np.ndarray:
    w = np.full(n, dt)
    if n > 1:
        w[0] = w[-1] = 0.5 * dt
    return w


def _cumulative(values: np.ndarray, dt: float, axis: int) -> np.ndarray:
    return cumulative_trapezoid(values, dx=dt, axis=axis, initial=0)


def source_moments(
    record: DipoleRecord,
    corr: DipoleCorrelation | None,
    q: float,
    coupling: CouplingConfig,
    omega0: float | None = None,
) -> GaussianSource:
    """Time-resolved source moments of mode ``q`` on the kernel grid.

    The mean part is integrated on the (finer) record grid and interpolated at
    the kernel times; the running double integrals of the kernel are cumulative
    trapezoid sums.  ``corr=None`` means no dipole fluctuations.
    """
    w0 = _fundamental(record, omega0)
    w = q * w0
    _check_nyquist(record.grid.dt, w)
    n_em = coupling.n_emitters
    amp = n_em * coupling.g * np.sqrt(q)
    tr = record.grid.times
    running = _cumulative(np.real(record.values) * np.exp(1j * w * tr), record.grid.dt, 0)
    if corr is None:
        t = tr
        mean = amp * running
        z = np.zeros((t.size, t.size), dtype=complex)
        return GaussianSource(mean, z, z, t, w)
    _check_grids(record, corr)
    _check_nyquist(corr.grid.dt, w)
    t = corr.grid.times
    tc = np.clip(t, tr[0], tr[-1])
    mean = amp * (np.interp(tc, tr, running.real) + 1j * np.interp(tc, tr, running.imag))
    ph = np.exp(1j * w * t)
    c = np.asarray(corr.cov)
    dt = corr.grid.dt
    scale = n_em * coupling.g**2 * q
    normal = _cumulative(_cumulative(ph.conj()[:, None] * c * ph[None, :], dt, 1), dt, 0)
    anomalous = _cumulative(_cumulative(ph[:, None] * c * ph[None, :], dt, 1), dt, 0)
    return GaussianSource(mean, scale * normal, scale * anomalous, t, w)


def gaussian_source_from_state(state: GaussianModeState) -> GaussianSource:
    """Equal-time moments of every mode of a Gaussian state (slots = modes)."""
    m = state.modes
    mu = np.asarray(state.mean)
    v = np.asarray(state.covariance)
    mean = (mu[0::2] + 1j * mu[1::2]) / np.sqrt(2)
    xx, pp = v[0::2, 0::2], v[1::2, 1::2]
    xp, px = v[0::2, 1::2], v[1::2, 0::2]
    normal = 0.5 * (xx + pp + 1j * (xp - px)) - 0.5 * np.eye(m)
    anomalous = 0.5 * (xx - pp + 1j * (xp + px))
    return GaussianSource(mean, normal, anomalous)


def _slot_index(src: GaussianSource, t: float | None) -> int:
    if t is None:
        return src.slots - 1
    if src.times is None:
        raise DomainError("source has no time axis")
    if not (src.times[0] - 1e-12 <= t <= src.times[-1] + 1e-12):
        raise DomainError(f"t = {t} outside the analysis window")
    return int(np.argmin(np.abs(src.times - t)))


def _delay_axis(src: GaussianSource, i0: int, n_delay: int) -> tuple[np.ndarray, np.ndarray]:
    if n_delay < 1:
        raise DomainError("need at least one delay")
    dt = src.times[1] - src.times[0] if src.times is not None and src.times.size > 1 else 1.0
    k = np.arange(n_delay)
    # beyond the window the sources are off and the slot amplitude is frozen
    return k * dt, np.minimum(i0 + k, src.slots - 1)


def first_order_from_source(src: GaussianSource, t: float | None = None, n_delay: int = 64) -> CorrelationSeries:
    """Raw G1(t, t + tau) of a time-resolved source; ``t=None`` is the window end."""
    i0 = _slot_index(src, t)
    tau, js = _delay_axis(src, i0, n_delay)
    free = np.exp(-1j * src.omega * tau)
    parts = np.array([src.first_order(i0, j) for j in js]).reshape(-1, 2)
    coh, inc = free * parts[:, 0], free * parts[:, 1]
    inten = np.array([src.intensity(j) for j in js])
    return CorrelationSeries(tau, coh + inc, "raw", src.intensity(i0), inten, coh, inc)


def g2_from_source(src: GaussianSource, t: float | None = None, n_delay: int = 64) -> CorrelationSeries:
    """g2(tau) = <:I(t) I(t + tau):> / (<I(t)> <I(t + tau)>) of a time-resolved source."""
    i0 = _slot_index(src, t)
    tau, js = _delay_axis(src, i0, n_delay)
    n0 = src.intensity(i0)
    vals = []
    for j in js:
        den = n0 * src.intensity(j)
        if not den > 0:
            raise ZeroNormError("zero field intensity: g2 undefined")
        vals.append(src.normal_ordered_intensity(i0, j) / den)
    return CorrelationSeries(tau, np.asarray(vals), "g2")


def first_order_correlation(
    record: DipoleRecord,
    corr: DipoleCorrelation | None,
    q: float,
    coupling: CouplingConfig,
    t: float | None = None,
    n_delay: int = 64,
    omega0: float | None = None,
) -> CorrelationSeries:
    """G1(t, t + tau) = <a_q^+(t) a_q(t + tau)> for tau on the kernel grid.

    ``t=None`` takes the end of the window, where the sources have switched off
    (long-time limit).  Delays reaching past the window use free evolution.

    Raises
    ------
    NyquistError
        If either grid cannot resolve w_q.
    """
    return first_order_from_source(source_moments(record, corr, q, coupling, omega0), t, n_delay)


def g1_normalized(series: CorrelationSeries) -> CorrelationSeries:
    """g1(tau) = G1(t, t + tau) / sqrt(G1(t, t) G1(t + tau, t + tau)).

    Raises
    ------
    ZeroNormError
        If an equal-time intensity vanishes.
    """
    if series.normalization != "raw" or series.intensity is None or series.intensity0 is None:
        raise DomainError("g1_normalized needs a raw G1 series with equal-time intensities")
    den = series.intensity0 * np.asarray(series.intensity)
    if not np.all(den > 0):
        raise ZeroNormError("zero field intensity: g1 undefined")
    return CorrelationSeries(series.tau, series.values / np.sqrt(den), "normalized")


def g2(
    record: DipoleRecord,
    corr: DipoleCorrelation | None,
    q: float,
    coupling: CouplingConfig,
    t: float | None = None,
    n_delay: int = 64,
    omega0: float | None = None,
) -> CorrelationSeries:
    """g2(tau) = <:I(t) I(t + tau):> / (<I(t)> <I(t + tau)>) for mode ``q``.

    Values below one flag photon anti-bunching.
    """
    return g2_from_source(source_moments(record, corr, q, coupling, omega0), t, n_delay)


def equal_time_g2(src: GaussianSource) -> np.ndarray:
    """Matrix of g2_ij(0) between slots (modes) of a Gaussian source."""
    k = src.slots
    n = np.array([src.intensity(i) for i in range(k)])
    if not np.all(n > 0):
        raise ZeroNormError("a slot has zero intensity")
    out = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            out[i, j] = src.normal_ordered_intensity(i, j) / (n[i] * n[j])
    return out


def csi_parameter(g2_ii: float, g2_jj: float, g2_ij: float) -> float:
    """Cauchy-Schwarz ratio R = g2_ij^2 / (g2_ii g2_jj); R > 1 is nonclassical."""
    vals = np.array([g2_ii, g2_jj, g2_ij], dtype=float)
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        raise DomainError("CSI parameter needs positive finite g2 values")
    return float(g2_ij**2 / (g2_ii * g2_jj))


# ---------------------------------------------------------------------------
# spectra


def _envelope_duration(record: DipoleRecord) -> float:
    """RMS width of the mean-dipole intensity |<d(t)>|^2."""
    p = np.abs(np.real(record.values)) ** 2
    tot = p.sum()
    if tot == 0:
        return 0.0
    t = record.grid.times
    m = (p * t).sum() / tot
    return float(np.sqrt((p * (t - m) ** 2).sum() / tot))


def _check_stationary(record: DipoleRecord):
    span = record.grid.t_end - record.grid.t0
    dur = _envelope_duration(record)
    if span < STATIONARITY_FACTOR * dur:
        raise StationarityError(
            f"window {span:.1f} a.u. shorter than {STATIONARITY_FACTOR:g} envelope durations ({dur:.1f} a.u. each)"
        )


def mode_photon_numbers(
    record: DipoleRecord,
    corr: DipoleCorrelation | None,
    coupling: CouplingConfig,
    orders=None,
    omega0: float | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Long-time photon numbers (orders, coherent N^2 part, fluctuation N part)."""
    w0 = _fundamental(record, omega0)
    q = coupling.orders if orders is None else np.asarray(orders, dtype=float)
    w = q * w0
    _check_nyquist(record.grid.dt, w.max())
    n_em, g = coupling.n_emitters, coupling.g
    wr = _trapezoid_weights(record.grid.n, record.grid.dt)
    d = np.real(record.values) * wr
    mean = np.exp(1j * np.outer(w, record.grid.times)) @ d
    coh = (n_em * g) ** 2 * q * np.abs(mean) ** 2
    if corr is None:
        return q, coh, np.zeros_like(coh)
    _check_grids(record, corr)
    _check_nyquist(corr.grid.dt, w.max())
    b = np.exp(1j * np.outer(w, corr.grid.times)) * _trapezoid_weights(corr.grid.n, corr.grid.dt)
    quad = np.einsum("ki,ij,kj->k", b.conj(), np.asarray(corr.cov), b).real
    return q, coh, n_em * g**2 * q * quad


def _bin_index(omega: np.ndarray, targets: np.ndarray) -> np.ndarray:
    edges = np.concatenate([[omega[0] - 0.5 * (omega[1] - omega[0])], 0.5 * (omega[1:] + omega[:-1]), [omega[-1] + 0.5 * (omega[-1] - omega[-2])]])
    idx = np.searchsorted(edges, targets, side="right") - 1
    return np.where((idx >= 0) & (idx < omega.size), idx, -1)


def wkt_spectrum(
    record: DipoleRecord,
    corr: DipoleCorrelation | None,
    coupling: CouplingConfig,
    omega: np.ndarray | None = None,
    omega0: float | None = None,
) -> tuple[Spectrum, Spectrum]:
    """Coherent and incoherent power spectra from the long-time G1 of each mode.

    After the sources switch off each mode is stationary, G1(t, t + tau) =
    n_q exp(-i w_q tau), and the Wiener-Khintchine transform is a line of mass
    n_q at w_q.  Lines are returned as single-bin masses on ``omega`` (default:
    the record's FFT bins); modes are q = 1..q_cutoff.

    Raises
    ------
    StationarityError
        If the window is shorter than STATIONARITY_FACTOR envelope durations.
    """
    w0 = _fundamental(record, omega0)
    _check_stationary(record)
    if omega is None:
        omega = 2 * np.pi * np.fft.rfftfreq(record.grid.n, record.grid.dt)
    omega = np.asarray(omega, dtype=float)
    if omega.size < 2:
        raise DomainError("frequency grid needs at least two points")
    q, coh, inc = mode_photon_numbers(record, corr, coupling, omega0=w0)
    idx = _bin_index(omega, q * w0)
    ok = idx >= 0
    s_coh = np.zeros(omega.size)
    s_inc = np.zeros(omega.size)
    np.add.at(s_coh, idx[ok], coh[ok])
    np.add.at(s_inc, idx[ok], inc[ok])
    return Spectrum(omega, s_coh, "none", w0), Spectrum(omega, s_inc, "none", w0)


def scaling_exponents(
    record: DipoleRecord,
    corr: DipoleCorrelation,
    coupling: CouplingConfig,
    emitters=range(1, 9),
    orders=None,
) -> tuple[float, float]:
    """Log-log slopes of the summed coherent and incoherent spectra versus N."""
    from dataclasses import replace

    ns = np.asarray(list(emitters), dtype=float)
    coh, inc = [], []
    for n in emitters:
        sc, si = wkt_spectrum(record, corr, replace(coupling, n_emitters=int(n)))
        if orders is not None:
            keep = np.isin(np.rint(sc.harmonic_order).astype(int), np.asarray(orders)) & (sc.intensity + si.intensity > 0)
        else:
            keep = sc.intensity + si.intensity > 0
        coh.append(sc.intensity[keep].sum())
        inc.append(si.intensity[keep].sum())
    slope_c = np.polyfit(np.log(ns), np.log(coh), 1)[0]
    slope_i = np.polyfit(np.log(ns), np.log(inc), 1)[0]
    return float(slope_c), float(slope_i)


def _lorentz_bin_mass(omega: np.ndarray, centers: np.ndarray, kappa: float) -> np.ndarray:
    """Fraction of a unit-area Lorentzian (HWHM kappa) at each center falling in each bin."""
    edges = np.concatenate([[omega[0] - 0.5 * (omega[1] - omega[0])], 0.5 * (omega[1:] + omega[:-1]), [omega[-1] + 0.5 * (omega[-1] - omega[-2])]])
    if kappa == 0:
        m = np.zeros((omega.size, centers.size))
        idx = _bin_index(omega, centers)
        ok = idx >= 0
        m[idx[ok], np.nonzero(ok)[0]] = 1.0
        return m
    cdf = np.arctan((edges[:, None] - centers[None, :]) / kappa) / np.pi
    return np.diff(cdf, axis=0)


def damped_spectrum(
    record: DipoleRecord,
    env: EnvironmentConfig,
    coupling: CouplingConfig,
    omega: np.ndarray | None = None,
    omega0: float | None = None,
) -> Spectrum:
    """Coherent emission of damped modes driven by the mean dipole.

    A mode at w_q damped at rate kappa and driven by the dipole component at
    w_N radiates a power proportional to kappa / ((w_q - w_N)^2 + kappa^2).
    The dipole components are the FFT bins of the record; each contributes a
    unit-area Lorentzian over the mode frequencies, integrated over each output
    bin, so kappa = 0 returns the undamped single-bin spectrum
    N^2 g^2 (w/w0) |int <d> exp(i w t) dt|^2.
    """
    w0 = _fundamental(record, omega0)
    g = record.grid
    w_n = 2 * np.pi * np.fft.rfftfreq(g.n, g.dt)
    d = np.real(record.values) * _trapezoid_weights(g.n, g.dt)
    # exp(+i w t) relative to t0; only |.|^2 is used
    dn = np.abs(np.fft.rfft(d)) ** 2
    if omega is None:
        omega = w_n
    omega = np.asarray(omega, dtype=float)
    mass = _lorentz_bin_mass(omega, w_n, env.kappa)
    inten = (coupling.n_emitters * coupling.g) ** 2 * (omega / w0) * (mass @ dn)
    return Spectrum(omega, inten, "none", w0, extra={})


def incoherent_power_bound(g: float | CouplingConfig, g0: float | EnvironmentConfig) -> float:
    """Saturation bound g^2 / g0^2 on incoherently emitted power.

    The proportionality constant is one: the power 2 kappa <a^+ a> radiated by
    a mode driven by a fluctuation of unit strength never exceeds 2 g^2/kappa =
    (2/pi) g^2/g0^2 under kappa = pi g0^2.
    """
    gv = g.g if isinstance(g, CouplingConfig) else float(g)
    g0v = g0.g0 if isinstance(g0, EnvironmentConfig) else float(g0)
    if not g0v > 0:
        raise DomainError("g0 = 0 is the undamped limit: incoherent power is unbounded")
    return gv**2 / g0v**2
