"""Quantum state of the harmonic field generated by a driven atom.

To first order the electron acts as a classical current: each harmonic mode q
is displaced by

    chi_q = N g sqrt(q) int dt <d(t)> exp(-i q omega t),

with chi_1 the shift (depletion) of the driving mode.  Dipole correlations add a
quadratic generator built from the coefficients

    G_qp = N g^2 sqrt(qp) int int Re C(t', t'') exp(i w_q t' + i w_p t'')
    K_qp = N g^2 sqrt(qp) int int Re C(t', t'') exp(i w_q t' - i w_p t'')

which is exponentiated as the Gaussian unitary exp(-i H) with
``H = 1/2 sum (G_qp a_q^+ a_p^+ + h.c.) - sum K_qp a_q^+ a_p`` (all correlations
taken at once, first Magnus order).

Driver phase convention: a coherent driver of amplitude ``alpha`` has classical
field ``E(t) = -2 g Im(alpha exp(i omega t))``.  With this choice the energy
absorbed by the electron, int E d<d>/dt dt, equals the loss of driver photons,
so |alpha + delta_alpha| < |alpha| whenever the atom absorbs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, InputError, NyquistError, PhysicalityError
from .phase_space import GaussianModeState, symplectic_eigenvalues, symplectic_form
from .sfa import DipoleCorrelation, DipoleRecord, LaserPulse

__all__ = [
    "DEFAULT_G",
    "BENCHMARK_EMITTERS",
    "CouplingConfig",
    "HarmonicAmplitudes",
    "BilinearCoefficients",
    "driver_amplitude",
    "coherent_amplitudes",
    "depletion_trace",
    "bilinear_coefficients",
    "symplectic_matrix",
    "gaussian_output_state",
]

DEFAULT_G = 1e-4
# Emitter count that brings plateau photon numbers |chi_q|^2 of the hydrogen
# benchmark (800 nm, 1e14 W/cm^2) to O(1) at the default coupling.
BENCHMARK_EMITTERS = 100_000


@dataclass(frozen=True)
class CouplingConfig:
    """Light-matter coupling ``g``, highest retained harmonic and emitter count."""

    g: float = DEFAULT_G
    q_cutoff: int = 30
    n_emitters: int = 1

    def __post_init__(self):
        if not self.g > 0:
            raise DomainError("coupling g must be positive")
        if self.q_cutoff < 2:
            raise DomainError("q_cutoff must be at least 2")
        if self.n_emitters < 1:
            raise DomainError("need at least one emitter")

    @property
    def orders(self) -> np.ndarray:
        return np.arange(1, self.q_cutoff + 1)


@dataclass(frozen=True)
class HarmonicAmplitudes:
    """Displacements chi_q for q = 1..q_cutoff; chi[0] is the driver shift."""

    chi: np.ndarray
    alpha_in: complex = 0.0
    omega0: float = 1.0

    @property
    def orders(self) -> np.ndarray:
        return np.arange(1, self.chi.size + 1)

    @property
    def delta_alpha(self) -> complex:
        return complex(self.chi[0])

    def photon_numbers(self) -> np.ndarray:
        return np.abs(self.chi) ** 2

    def to_csv(self) -> str:
        from .textio import format_csv

        return format_csv(
            ["q", "re_chi", "im_chi", "photon_number"],
            [self.orders, self.chi.real, self.chi.imag, self.photon_numbers()],
            comments=[f"alpha_in = {self.alpha_in.real!r} {self.alpha_in.imag!r}"],
        )


@dataclass(frozen=True)
class BilinearCoefficients:
    """Pair-creation (G, symmetric) and beam-splitter (K, Hermitian) blocks."""

    G: np.ndarray
    K: np.ndarray

    def __post_init__(self):
        G = np.asarray(self.G, dtype=complex)
        K = np.asarray(self.K, dtype=complex)
        if G.shape != K.shape or G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise DomainError("G and K must be square and of equal size")
        scale = max(np.max(np.abs(G), initial=0.0), np.max(np.abs(K), initial=0.0), 1e-300)
        if np.max(np.abs(G - G.T), initial=0.0) > 1e-10 * scale:
            raise InputError("G is not symmetric")
        if np.max(np.abs(K - K.conj().T), initial=0.0) > 1e-10 * scale:
            raise InputError("K is not Hermitian")
        object.__setattr__(self, "G", 0.5 * (G + G.T))
        object.__setattr__(self, "K", 0.5 * (K + K.conj().T))

    @property
    def modes(self) -> int:
        return self.G.shape[0]

    @classmethod
    def zeros(cls, modes: int) -> "BilinearCoefficients":
        z = np.zeros((modes, modes), dtype=complex)
        return cls(z, z)


def driver_amplitude(pulse: LaserPulse, coupling: CouplingConfig) -> complex:
    """Coherent amplitude of the driving mode whose mean field is ``pulse``'s carrier."""
    mag = pulse.E0 / (2 * coupling.g)
    return complex(mag * np.exp(1j * (pulse.cep - pulse.omega * pulse.center - np.pi / 2)))


def _trapezoid_weights(n: int, dt: float) -> np.ndarray:
    w = np.full(n, dt)
    if n > 1:
        w[0] = w[-1] = 0.5 * dt
    return w


def _check_nyquist(dt: float, omega_max: float):
    if dt * omega_max > np.pi:
        raise NyquistError(f"time step {dt} cannot resolve omega = {omega_max:.4f}")


def coherent_amplitudes(
    record: DipoleRecord,
    coupling: CouplingConfig,
    alpha_in: complex | None = None,
    omega0: float | None = None,
) -> HarmonicAmplitudes:
    """chi_q = N g sqrt(q) int <d(t)> exp(-i q w t) dt by trapezoid quadrature over the record."""
    w0 = omega0 or record.omega0
    if not w0:
        raise DomainError("fundamental frequency unknown: pass omega0")
    _check_nyquist(record.grid.dt, coupling.q_cutoff * w0)
    t = record.grid.times
    d = np.real(record.values) * _trapezoid_weights(record.grid.n, record.grid.dt)
    q = coupling.orders
    phase = np.exp(-1j * np.outer(q * w0, t))
    chi = coupling.n_emitters * coupling.g * np.sqrt(q) * (phase @ d)
    return HarmonicAmplitudes(chi, complex(alpha_in or 0.0), w0)


def depletion_trace(
    record: DipoleRecord,
    coupling: CouplingConfig,
    alpha_in: complex,
    omega0: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Running |alpha_in + delta_alpha(t)| with delta_alpha(t) the partial chi_1 integral.

    Returns the sample times and the magnitudes; the last value equals
    ``|alpha_in + chi_1|`` from :func:`coherent_amplitudes` up to rounding.
    """
    if not np.isfinite(alpha_in):
        raise DomainError("alpha_in must be finite")
    w0 = omega0 or record.omega0
    if not w0:
        raise DomainError("fundamental frequency unknown: pass omega0")
    t = record.grid.times
    f = np.real(record.values) * np.exp(-1j * w0 * t)
    incr = 0.5 * record.grid.dt * (f[1:] + f[:-1])
    running = coupling.n_emitters * coupling.g * np.concatenate([[0.0], np.cumsum(incr)])
    return t, np.abs(alpha_in + running)


def bilinear_coefficients(
    corr: DipoleCorrelation,
    coupling: CouplingConfig,
    omega0: float,
) -> BilinearCoefficients:
    """Second-order coefficients from the dipole covariance kernel.

    Raises
    ------
    InputError
        If the kernel is not Hermitian to 1e-6 (relative).
    NyquistError
        If the kernel grid cannot resolve the highest retained harmonic.
    """
    c = np.asarray(corr.cov)
    scale = max(np.max(np.abs(c), initial=0.0), 1e-300)
    if np.max(np.abs(c - c.conj().T), initial=0.0) > 1e-6 * scale:
        raise InputError("dipole correlation kernel is not Hermitian")
    _check_nyquist(corr.grid.dt, coupling.q_cutoff * omega0)
    t = corr.grid.times
    w = _trapezoid_weights(corr.grid.n, corr.grid.dt)
    q = coupling.orders
    f = np.exp(1j * np.outer(t, q * omega0)) * w[:, None]  # (time, mode)
    cs = np.real(c)
    pref = coupling.n_emitters * coupling.g**2 * np.sqrt(np.outer(q, q))
    G = pref * (f.T @ cs @ f)
    K = pref * (f.T @ cs @ f.conj())
    return BilinearCoefficients(0.5 * (G + G.T), 0.5 * (K + K.conj().T))


def _quadrature_transform(m: int) -> np.ndarray:
    """Matrix T with (x1, p1, ..., xm, pm) = T (a1..am, a1^+..am^+)."""
    t = np.zeros((2 * m, 2 * m), dtype=complex)
    s = 1 / np.sqrt(2)
    for k in range(m):
        t[2 * k, k] = s
        t[2 * k, m + k] = s
        t[2 * k + 1, k] = -1j * s
        t[2 * k + 1, m + k] = 1j * s
    return t


def symplectic_matrix(bil: BilinearCoefficients) -> np.ndarray:
    """Real symplectic matrix of exp(-iH) acting on (x1, p1, ...).

    Heisenberg flow of H = 1/2 sum (G a^+ a^+ + h.c.) - sum K a^+ a:
    d/ds (a, a^+) = [[iK, -iG], [iG*, -iK*]] (a, a^+).
    """
    m = bil.modes
    flow = np.block([[1j * bil.K, -1j * bil.G], [1j * bil.G.conj(), -1j * bil.K.conj()]])
    t = _quadrature_transform(m)
    s = t @ expm(flow) @ np.linalg.inv(t)
    if np.max(np.abs(s.imag), initial=0.0) > 1e-8 * max(1.0, np.max(np.abs(s.real))):
        raise PhysicalityError("symplectic transform acquired an imaginary part")
    return s.real


def gaussian_output_state(
    amps: HarmonicAmplitudes,
    bil: BilinearCoefficients | None = None,
    include_driver: bool = True,
) -> GaussianModeState:
    """Gaussian state D(chi) U |0> of all retained modes.

    With ``bil=None`` this is the product of coherent states |alpha + delta_alpha>,
    |chi_2>, ...  With ``include_driver=False`` the fundamental is reported in the
    frame displaced by ``alpha_in``.

    Raises
    ------
    PhysicalityError
        If the exponentiated generator is too large to give a physical covariance.
    """
    m = amps.chi.size
    disp = amps.chi.astype(complex).copy()
    if include_driver:
        disp[0] += amps.alpha_in
    mean = np.empty(2 * m)
    mean[0::2] = np.sqrt(2) * disp.real
    mean[1::2] = np.sqrt(2) * disp.imag
    if bil is None:
        return GaussianModeState(mean, 0.5 * np.eye(2 * m))
    if bil.modes != m:
        raise DomainError(f"bilinear coefficients cover {bil.modes} modes, amplitudes {m}")
    omega = symplectic_form(m)
    with np.errstate(over="ignore", invalid="ignore"):
        s = symplectic_matrix(bil)
        defect = np.max(np.abs(s @ omega @ s.T - omega))
    if not np.isfinite(defect) or defect > 1e-6 * max(1.0, np.max(np.abs(s)) ** 2):
        raise PhysicalityError("generator magnitude outside the range of the second-order treatment")
    cov = 0.5 * (s @ s.T)
    cov = 0.5 * (cov + cov.T)
    nu = symplectic_eigenvalues(cov)
    if nu.min() < 0.5 - 1e-6:
        raise PhysicalityError("generator magnitude outside the range of the second-order treatment")
    return GaussianModeState(mean, cov, check=False)
