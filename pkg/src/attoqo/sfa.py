"""Strong-field approximation (SFA) core in atomic units.

Pulses are defined through their vector potential,
``A(t) = -(E0/omega) f(t) sin(omega (t - tc) + cep)`` with ``E(t) = -dA/dt``, so
that ``A`` vanishes before and after the pulse by construction.  Kinetic momentum
of a continuum electron with canonical momentum ``p`` is ``p - A(t)``.

The mean dipole follows the saddle-point (in momentum) form of the Lewenstein
integral,

    d(t) = -i int_0^T0 dtau (2 pi / (eps + i tau))^{3/2}
           d(p_s - A(t)) E(t - tau) d(p_s - A(t - tau)) exp(-i S) + c.c.,

with ``p_s = int A / tau`` over the excursion and ``S`` the semiclassical action.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import CoverageError, DomainError, NyquistError, OrderingError

log = logging.getLogger(__name__)

__all__ = [
    "AU_INTENSITY_WCM2",
    "LaserPulse",
    "AtomModel",
    "TimeGrid",
    "DipoleRecord",
    "DipoleCorrelation",
    "Spectrum",
    "field_from_intensity",
    "omega_from_wavelength",
    "ponderomotive_energy",
    "cutoff_energy",
    "transition_dipole",
    "semiclassical_action",
    "dipole_expectation",
    "hhg_spectrum",
    "dipole_correlation",
    "ionization_amplitude",
    "harmonic_peaks",
    "plateau_cutoff",
]

AU_INTENSITY_WCM2 = 3.50944758e16
HARTREE_NM = 45.56335253  # photon energy in hartree times wavelength in nm
SADDLE_EPS = 1e-4
TABLE_STEP = 0.05


def field_from_intensity(intensity_wcm2: float) -> float:
    """Peak field (a.u.) of a linearly polarized beam of the given intensity."""
    return float(np.sqrt(intensity_wcm2 / AU_INTENSITY_WCM2))


def omega_from_wavelength(wavelength_nm: float) -> float:
    return HARTREE_NM / wavelength_nm


# ---------------------------------------------------------------------------
# pulses


@dataclass(frozen=True)
class LaserPulse:
    """Linearly polarized few-cycle pulse.

    Parameters
    ----------
    E0 : float
        Peak field amplitude (a.u.).
    omega : float
        Carrier angular frequency (a.u.).
    cep : float
        Carrier-envelope phase (rad).
    envelope : {"sin2", "gaussian", "flat-top"}
        ``sin2`` spans ``cycles`` optical cycles.  ``gaussian`` has an intensity
        FWHM of ``cycles`` cycles and is truncated where the field envelope
        falls below 1e-9.  ``flat-top`` holds ``cycles`` cycles at full strength
        between sin^2 ramps of ``ramp_cycles`` cycles.
    """

    E0: float
    omega: float
    cep: float = 0.0
    envelope: str = "sin2"
    cycles: float = 8.0
    ramp_cycles: float = 2.0

    def __post_init__(self):
        if not (self.E0 >= 0 and np.isfinite(self.E0)):
            raise DomainError("E0 must be a finite non-negative number")
        if not self.omega > 0:
            raise DomainError("omega must be positive")
        if self.cycles < 1:
            raise DomainError("a pulse needs at least one cycle")
        if self.envelope not in ("sin2", "gaussian", "flat-top"):
            raise DomainError(f"unknown envelope {self.envelope!r}")
        if self.envelope == "flat-top" and self.ramp_cycles <= 0:
            raise DomainError("ramp_cycles must be positive")

    @classmethod
    def from_lab(cls, wavelength_nm: float, intensity_wcm2: float, **kw) -> "LaserPulse":
        return cls(field_from_intensity(intensity_wcm2), omega_from_wavelength(wavelength_nm), **kw)

    def with_amplitude(self, E0: float, cep: float | None = None) -> "LaserPulse":
        return LaserPulse(E0, self.omega, self.cep if cep is None else cep, self.envelope, self.cycles, self.ramp_cycles)

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega

    @property
    def _gauss_tau(self) -> float:
        return self.cycles * self.period

    @property
    def duration(self) -> float:
        if self.envelope == "sin2":
            return self.cycles * self.period
        if self.envelope == "flat-top":
            return (self.cycles + 2 * self.ramp_cycles) * self.period
        # field envelope exp(-2 ln2 s^2 / tau^2) < 1e-9 at the edges
        half = self._gauss_tau * np.sqrt(np.log(1e9) / (2 * np.log(2)))
        return 2 * half

    @property
    def t_start(self) -> float:
        return 0.0

    @property
    def t_end(self) -> float:
        return self.duration

    @property
    def center(self) -> float:
        return 0.5 * self.duration

    def _envelope(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Envelope f and its time derivative."""
        T = self.duration
        inside = (t >= 0) & (t <= T)
        if self.envelope == "sin2":
            arg = np.pi * t / T
            f = np.sin(arg) ** 2
            df = (np.pi / T) * np.sin(2 * arg)
        elif self.envelope == "gaussian":
            k = 2 * np.log(2) / self._gauss_tau**2
            s = t - self.center
            f = np.exp(-k * s**2)
            df = -2 * k * s * f
        else:
            tr = self.ramp_cycles * self.period
            f = np.ones_like(t)
            df = np.zeros_like(t)
            up = t < tr
            down = t > T - tr
            a = np.pi * t[up] / (2 * tr)
            f[up] = np.sin(a) ** 2
            df[up] = (np.pi / (2 * tr)) * np.sin(2 * a)
            b = np.pi * (T - t[down]) / (2 * tr)
            f[down] = np.sin(b) ** 2
            df[down] = -(np.pi / (2 * tr)) * np.sin(2 * b)
        return np.where(inside, f, 0.0), np.where(inside, df, 0.0)

    def vector_potential(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        f, _ = self._envelope(np.atleast_1d(t))
        ph = self.omega * (np.atleast_1d(t) - self.center) + self.cep
        out = -(self.E0 / self.omega) * f * np.sin(ph)
        return out.reshape(t.shape)

    def electric_field(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        tt = np.atleast_1d(t)
        f, df = self._envelope(tt)
        ph = self.omega * (tt - self.center) + self.cep
        out = (self.E0 / self.omega) * (df * np.sin(ph) + self.omega * f * np.cos(ph))
        return out.reshape(t.shape)

    @cached_property
    def _tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Cumulative integrals of A and A^2 on a fine grid over the pulse.

        Each interval uses the endpoint-corrected trapezoid rule
        h/2 (y0 + y1) + h^2/12 (y0' - y1'), exact to O(h^5).
        """
        n = int(np.ceil(self.duration / TABLE_STEP)) + 1
        t = np.linspace(0.0, self.duration, n)
        h = t[1] - t[0]
        a = self.vector_potential(t)
        da = -self.electric_field(t)
        y2, dy2 = a * a, 2 * a * da
        i1 = 0.5 * h * (a[:-1] + a[1:]) + h * h / 12 * (da[:-1] - da[1:])
        i2 = 0.5 * h * (y2[:-1] + y2[1:]) + h * h / 12 * (dy2[:-1] - dy2[1:])
        return t, np.concatenate([[0.0], np.cumsum(i1)]), np.concatenate([[0.0], np.cumsum(i2)])

    def integrals(self, t) -> tuple[np.ndarray, np.ndarray]:
        """int_{t_start}^t A and int_{t_start}^t A^2, evaluated anywhere."""
        t = np.asarray(t, dtype=float)
        tt = np.clip(np.atleast_1d(t), 0.0, self.duration)
        grid, c1, c2 = self._tables
        h = grid[1] - grid[0]
        i = np.clip(np.floor(tt / h).astype(int), 0, grid.size - 1)
        s = tt - grid[i]
        a0 = self.vector_potential(grid[i])
        a1 = self.vector_potential(tt)
        d0 = -self.electric_field(grid[i])
        d1 = -self.electric_field(tt)
        f1 = c1[i] + 0.5 * s * (a0 + a1) + s * s / 12 * (d0 - d1)
        f2 = c2[i] + 0.5 * s * (a0**2 + a1**2) + s * s / 12 * (2 * a0 * d0 - 2 * a1 * d1)
        return f1.reshape(t.shape), f2.reshape(t.shape)


@dataclass(frozen=True)
class AtomModel:
    """Hydrogen-like 1s ground state with ionization potential ``ip``."""

    ip: float = 0.5

    def __post_init__(self):
        if not self.ip > 0:
            raise DomainError("ionization potential must be positive")


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    dt: float
    n: int

    def __post_init__(self):
        if not self.dt > 0 or self.n < 1:
            raise DomainError("time grid needs dt > 0 and at least one sample")

    @classmethod
    def covering(cls, pulse: LaserPulse, dt: float, pad: float = 0.0) -> "TimeGrid":
        """Grid from the pulse start to its end plus ``pad`` atomic units."""
        n = int(np.ceil((pulse.duration + pad) / dt)) + 1
        return cls(pulse.t_start, dt, n)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (self.n - 1)

    def nyquist_ok(self, omega_max: float) -> bool:
        return self.dt * omega_max <= np.pi


@dataclass(frozen=True)
class DipoleRecord:
    grid: TimeGrid
    values: np.ndarray
    omega0: float | None = None

    def to_csv(self) -> str:
        from .textio import format_csv

        return format_csv(["t", "d"], [self.grid.times, self.values])


@dataclass(frozen=True)
class DipoleCorrelation:
    grid: TimeGrid
    cov: np.ndarray

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.cov - self.cov.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.cov + self.cov.conj().T)).min())


@dataclass(frozen=True)
class Spectrum:
    omega: np.ndarray
    intensity: np.ndarray
    window: str = "hann"
    omega0: float | None = None
    cutoff_harmonic: float | None = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def bin_width(self) -> float:
        return float(self.omega[1] - self.omega[0])

    @property
    def harmonic_order(self) -> np.ndarray:
        if not self.omega0:
            return np.full(self.omega.shape, np.nan)
        return self.omega / self.omega0

    def to_csv(self) -> str:
        from .textio import format_csv

        cols = [self.omega, self.harmonic_order, self.intensity]
        names = ["omega", "harmonic_order", "intensity"]
        for k, v in self.extra.items():
            names.append(k)
            cols.append(v)
        return format_csv(names, cols)


# ---------------------------------------------------------------------------
# closed-form quantities


def ponderomotive_energy(pulse: LaserPulse) -> float:
    return pulse.E0**2 / (4 * pulse.omega**2)


def cutoff_energy(pulse: LaserPulse, atom: AtomModel) -> float:
    return 3.17 * ponderomotive_energy(pulse) + atom.ip


def transition_dipole(v, atom: AtomModel):
    """Bound-free dipole <v|x|g> along the polarization axis for a 1s state.

    d(v) = 2^{7/2} (2 ip)^{5/4} / pi * v / (v^2 + 2 ip)^3, real and odd.
    """
    kappa2 = 2 * atom.ip
    norm = 2**3.5 * kappa2**1.25 / np.pi
    v = np.asarray(v, dtype=float) if np.isrealobj(v) else np.asarray(v)
    return norm * v / (v * v + kappa2) ** 3


def semiclassical_action(p, t, tp, pulse: LaserPulse, atom: AtomModel):
    """S(p, t, t') = int_{t'}^{t} [(p - A)^2 / 2 + ip] dtau.

    Raises
    ------
    OrderingError
        If any ``t < t'``.
    """
    p, t, tp = np.broadcast_arrays(np.asarray(p, float), np.asarray(t, float), np.asarray(tp, float))
    if np.any(t < tp):
        raise OrderingError("action requires t >= t'")
    f1t, f2t = pulse.integrals(t)
    f1p, f2p = pulse.integrals(tp)
    tau = t - tp
    out = (0.5 * p * p + atom.ip) * tau - p * (f1t - f1p) + 0.5 * (f2t - f2p)
    return out if out.ndim else float(out)


def nyquist_frequency_required(pulse: LaserPulse, atom: AtomModel) -> float:
    """Highest angular frequency a dipole grid has to resolve: twice the cutoff."""
    return 2.0 * cutoff_energy(pulse, atom)


# ---------------------------------------------------------------------------
# dipole


def _grid_tables(pulse: LaserPulse, grid: TimeGrid):
    t = grid.times
    f1, f2 = pulse.integrals(t)
    return t, pulse.vector_potential(t), pulse.electric_field(t), f1, f2


def dipole_expectation(
    pulse: LaserPulse,
    atom: AtomModel,
    grid: TimeGrid,
    excursion_cycles: float = 1.0,
    eps: float = SADDLE_EPS,
    chunk: int = 256,
    complex_output: bool = False,
) -> DipoleRecord:
    """Mean dipole <d(t)> on ``grid``.

    Parameters
    ----------
    excursion_cycles : float
        Length of the ionization-time window per emission time, in optical cycles.
    complex_output : bool
        Return the one-sided amplitude ``-i X(t)`` instead of ``2 Im X(t)``;
        the physical dipole is twice its real part.

    Raises
    ------
    NyquistError
        If ``grid.dt`` cannot resolve twice the cutoff frequency.
    """
    w_req = nyquist_frequency_required(pulse, atom)
    if not grid.nyquist_ok(w_req):
        raise NyquistError(f"dt={grid.dt} does not resolve omega={w_req:.3f} (need dt <= {np.pi / w_req:.4f})")
    if pulse.E0 == 0:
        return DipoleRecord(grid, np.zeros(grid.n), pulse.omega)
    if grid.t0 > pulse.t_start + 1e-12:
        warnings.warn("grid starts after the pulse: early ionization times are dropped", RuntimeWarning)

    t, a, e, f1, f2 = _grid_tables(pulse, grid)
    window = excursion_cycles * pulse.period
    kmax = int(np.floor(window / grid.dt + 1e-9))
    frac = window - kmax * grid.dt
    k = np.arange(kmax + 1)
    tau = k * grid.dt
    wts = np.full(k.size, grid.dt)
    wts[0] = wts[-1] = 0.5 * grid.dt
    wts[-1] += 0.5 * frac
    # the window end generally falls between grid nodes; that node is
    # evaluated from the analytic pulse so the window length is exact
    tail_t = t - window
    tail_a = pulse.vector_potential(tail_t)
    tail_e = pulse.electric_field(tail_t)
    tail_f1, tail_f2 = pulse.integrals(tail_t)
    tail_ok = tail_t >= grid.t0 - 1e-12
    pref = (2 * np.pi / (eps + 1j * tau)) ** 1.5
    pref_tail = (2 * np.pi / (eps + 1j * window)) ** 1.5
    out = np.zeros(grid.n, dtype=complex)

    def kernel(d1, d2, tt, ai, aj, ej):
        ps = np.where(tt > 0, d1 / np.where(tt > 0, tt, 1.0), ai)
        action = atom.ip * tt - 0.5 * d1 * ps + 0.5 * d2
        amp = transition_dipole(ps - ai, atom) * ej * transition_dipole(ps - aj, atom)
        return amp * np.exp(-1j * action)

    for s in range(0, grid.n, chunk):
        i = np.arange(s, min(s + chunk, grid.n))
        j = i[:, None] - k[None, :]
        valid = j >= 0
        jj = np.where(valid, j, 0)
        integrand = kernel(f1[i, None] - f1[jj], f2[i, None] - f2[jj], tau[None, :], a[i, None], a[jj], e[jj])
        integrand = np.where(valid, pref * integrand, 0.0)
        acc = integrand @ wts
        if frac > 0:
            end = kernel(f1[i] - tail_f1[i], f2[i] - tail_f2[i], window, a[i], tail_a[i], tail_e[i])
            acc = acc + np.where(tail_ok[i], 0.5 * frac * pref_tail * end, 0.0)
        out[i] = -1j * acc
    if complex_output:
        return DipoleRecord(grid, out, pulse.omega)
    return DipoleRecord(grid, 2.0 * out.real, pulse.omega)


# ---------------------------------------------------------------------------
# spectra


_WINDOWS = {
    "hann": np.hanning,
    "none": np.ones,
    "blackman": np.blackman,
}


def hhg_spectrum(record: DipoleRecord, window: str = "hann") -> Spectrum:
    """I(omega) = omega^4 |FT[w(t) d(t)]|^2 on the non-negative FFT bins."""
    if record.values.size == 0:
        raise DomainError("empty dipole record")
    try:
        win = _WINDOWS[window](record.grid.n)
    except KeyError:
        raise DomainError(f"unknown window {window!r}") from None
    dt = record.grid.dt
    spec = np.fft.rfft(np.real(record.values) * win) * dt
    omega = 2 * np.pi * np.fft.rfftfreq(record.grid.n, dt)
    inten = omega**4 * np.abs(spec) ** 2
    s = Spectrum(omega, inten, window, record.omega0)
    if record.omega0 and np.any(inten > 0):
        s = Spectrum(omega, inten, window, record.omega0, plateau_cutoff(s))
    return s


def harmonic_peaks(spec: Spectrum, orders) -> np.ndarray:
    """Largest intensity within half an order of each harmonic order."""
    h = spec.harmonic_order
    out = []
    for q in np.atleast_1d(orders):
        m = np.abs(h - q) <= 0.5
        out.append(spec.intensity[m].max() if np.any(m) else 0.0)
    return np.asarray(out)


def plateau_cutoff(spec: Spectrum, q_min: int = 5, floor: float = 1e-3) -> float:
    """Harmonic order where the plateau ends.

    Peaks are taken at odd orders from ``q_min`` upward.  The plateau level is
    the median of the peaks that are at least ``floor`` times the strongest
    one, and the cutoff is the highest odd order whose peak still reaches that
    level.  Returns NaN for an empty spectrum.
    """
    h = spec.harmonic_order
    qmax = int(np.floor(np.nanmax(h)))
    odd = np.arange(q_min | 1, qmax + 1, 2)
    if odd.size == 0:
        return float("nan")
    peaks = harmonic_peaks(spec, odd)
    if not np.any(peaks > 0):
        return float("nan")
    level = np.median(peaks[peaks >= floor * peaks.max()])
    above = np.nonzero(peaks >= level)[0]
    return float(odd[above[-1]])


# ---------------------------------------------------------------------------
# correlations and ionization amplitudes


def continuum_amplitudes(pulse: LaserPulse, atom: AtomModel, times: np.ndarray, v: np.ndarray) -> np.ndarray:
    """<g|d_H(t)|v> = d(v - A(t)) exp(-i S(v, t, t_start)) on a (time, momentum) mesh."""
    a = pulse.vector_potential(times)
    f1, f2 = pulse.integrals(times)
    tau = times - pulse.t_start
    s = (0.5 * v[None, :] ** 2 + atom.ip) * tau[:, None] - v[None, :] * f1[:, None] + 0.5 * f2[:, None]
    return transition_dipole(v[None, :] - a[:, None], atom) * np.exp(-1j * s)


def momentum_coverage_required(pulse: LaserPulse) -> float:
    return float(np.sqrt(2 * 10 * ponderomotive_energy(pulse)))


def dipole_correlation(
    pulse: LaserPulse,
    atom: AtomModel,
    grid: TimeGrid | None = None,
    v_max: float | None = None,
    n_v: int = 2048,
    chunk: int = 512,
) -> DipoleCorrelation:
    """Two-time dipole covariance C(t', t'') on a (possibly coarse) grid.

    Resolving the identity as |g><g| + int dv |v><v|, the ground-state term
    reproduces <d(t')><d(t'')>, so the covariance is the continuum integral

        C(t', t'') = int dv <g|d(t')|v> <v|d(t'')|g>

    on a 1-D momentum line (trapezoid rule), stored as ``cov[i, j] = C(t_i, t_j)``.
    The result is Hermitian and positive semidefinite by construction.

    The default grid samples the kernel carrier exp(-i (Ip + v^2/2) tau) at
    least six times per period for |v| up to sqrt(20 Up), and never uses fewer
    than 256 points.

    Raises
    ------
    CoverageError
        If ``v_max`` is below sqrt(20 Up).
    """
    need = momentum_coverage_required(pulse)
    if grid is None:
        w_kernel = atom.ip + 0.5 * need**2
        n_t = max(256, int(np.ceil(pulse.duration * 3 * w_kernel / np.pi)) + 1)
        grid = TimeGrid(pulse.t_start, pulse.duration / (n_t - 1), n_t)
    if v_max is None:
        v_max = max(need, 4.0 * np.sqrt(2 * atom.ip))
    if v_max < need:
        raise CoverageError(f"v_max={v_max:.3f} below sqrt(20 Up)={need:.3f}")
    v = np.linspace(-v_max, v_max, n_v)
    w = np.full(n_v, v[1] - v[0])
    w[0] = w[-1] = 0.5 * (v[1] - v[0])
    cov = np.zeros((grid.n, grid.n), dtype=complex)
    for lo in range(0, n_v, chunk):
        h = continuum_amplitudes(pulse, atom, grid.times, v[lo : lo + chunk])
        cov += (h * w[None, lo : lo + chunk]) @ h.conj().T
    return DipoleCorrelation(grid, 0.5 * (cov + cov.conj().T))


def ionization_amplitude(v, tp, pulse: LaserPulse, atom: AtomModel, t_final: float | None = None):
    """Amplitude for ionization at time t' into final momentum v.

    Returns ``E(t') d(v - A(t')) exp(-i S(v, t_f, t'))`` where ``t_f`` (default
    the end of the pulse) is the detection time; the phase is the action
    accumulated between ionization and detection.
    """
    v, tp = np.broadcast_arrays(np.asarray(v, float), np.asarray(tp, float))
    tf = pulse.t_end if t_final is None else t_final
    amp = pulse.electric_field(tp) * transition_dipole(v - pulse.vector_potential(tp), atom)
    s = semiclassical_action(v, np.full(v.shape, tf), tp, pulse, atom)
    out = amp * np.exp(-1j * np.asarray(s))
    return out if out.ndim else complex(out)
