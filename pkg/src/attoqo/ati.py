"""Direct above-threshold ionization and the state of the field it leaves behind.

An electron ionized at t' and detected with momentum v at the end of the
pulse travels a classical path.  Its displacement from the ion,

    dr(tau) = int_{t'}^{tau} [p - A(s)] ds,      p = v (A = 0 after the pulse),

couples to every field mode and displaces it by

    delta_q(v, t') = g sqrt(q) int_{t'}^{t_f} dr(tau) exp(-i w_q tau) dtau.

The field state that accompanies detection at v is the superposition over
ionization times of these displaced vacua, weighted by the ionization
amplitude.  Only the direct (non-rescattered) electrons are modelled, along
the polarization axis; transverse momenta are not integrated.

The kinetic momentum of an electron with canonical momentum p is p - A(t), the
same convention as :mod:`attoqo.sfa`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CoverageError, DomainError, NyquistError, OrderingError, StructureError
from .phase_space import CoherentSuperposition, entanglement_entropy, log_overlap_matrix
from .qstate import CouplingConfig, coherent_amplitudes
from .sfa import (
    AtomModel,
    LaserPulse,
    TimeGrid,
    dipole_expectation,
    ponderomotive_energy,
    transition_dipole,
)

__all__ = [
    "MIN_CONTINUUM_POINTS",
    "ContinuumGrid",
    "DatiFieldState",
    "PhotoelectronSpectrum",
    "EmissionTable",
    "continuum_displacement",
    "mode_displacement",
    "dati_amplitudes",
    "dati_field_state",
    "photoelectron_spectrum",
    "falloff_ratio",
    "photon_emission_probability",
    "emission_table",
    "hhg_single_photon_probability",
    "two_branch_entropy",
    "light_matter_entropy",
]

MIN_CONTINUUM_POINTS = 64
DEFAULT_IONIZATION_STEP = 0.5
# coherent amplitude that stands in for orthogonal branches: exp(-L^2/2) underflows
_FAR = 40.0


@dataclass(frozen=True)
class ContinuumGrid:
    """Uniform momentum grid over [-v_max, v_max] along the polarization axis."""

    v_max: float
    count: int = 256

    def __post_init__(self):
        if not (self.v_max > 0 and np.isfinite(self.v_max)):
            raise DomainError("v_max must be positive and finite")
        if self.count < MIN_CONTINUUM_POINTS:
            raise DomainError(f"need at least {MIN_CONTINUUM_POINTS} momenta, got {self.count}")

    @classmethod
    def for_pulse(cls, pulse: LaserPulse, count: int = 256, energy_span: float = 3.5) -> "ContinuumGrid":
        """Grid reaching kinetic energy ``energy_span`` * Up."""
        if energy_span < 2:
            raise DomainError("the grid must reach at least 2 Up")
        return cls(float(np.sqrt(2 * energy_span * ponderomotive_energy(pulse))), count)

    @property
    def v(self) -> np.ndarray:
        return np.linspace(-self.v_max, self.v_max, self.count)

    @property
    def step(self) -> float:
        return 2 * self.v_max / (self.count - 1)

    def weights(self) -> np.ndarray:
        w = np.full(self.count, self.step)
        w[0] = w[-1] = 0.5 * self.step
        return w

    def check_covers(self, pulse: LaserPulse):
        need = np.sqrt(4 * ponderomotive_energy(pulse))
        if self.v_max < need * (1 - 1e-12):
            raise CoverageError(f"v_max = {self.v_max:.4g} does not reach 2 Up (need {need:.4g})")


# ---------------------------------------------------------------------------
# classical paths and mode displacements


def continuum_displacement(v, t, t1, pulse: LaserPulse):
    """Distance travelled between t1 and t by an electron with kinetic momentum v at t.

    dr = int_{t1}^{t} [v + A(t) - A(tau)] dtau; broadcasts over its arguments.

    Raises
    ------
    OrderingError
        If any ``t < t1``.
    """
    v, t, t1 = np.broadcast_arrays(np.asarray(v, float), np.asarray(t, float), np.asarray(t1, float))
    if np.any(t < t1):
        raise OrderingError("displacement requires t >= t1")
    f1t, _ = pulse.integrals(t)
    f1s, _ = pulse.integrals(t1)
    out = (v + pulse.vector_potential(t)) * (t - t1) - (f1t - f1s)
    return out if out.ndim else float(out)


def _ionization_nodes(pulse: LaserPulse, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Uniform nodes over the pulse and their trapezoid weights."""
    if not dt > 0:
        raise DomainError("time step must be positive")
    n = int(np.ceil(pulse.duration / dt)) + 1
    t = np.linspace(pulse.t_start, pulse.t_end, n)
    h = t[1] - t[0]
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return t, w


def _check_mode_nyquist(dt: float, omega_max: float):
    if dt * omega_max > np.pi:
        raise NyquistError(f"time step {dt:.4g} cannot resolve omega = {omega_max:.4g}")


def _displacements(p: float, tp: np.ndarray, t_f: float, pulse: LaserPulse, orders, g: float) -> np.ndarray:
    """delta_q(p, t') for nodes ``tp`` (uniform, ending at t_f); shape (nodes, modes).

    With F(tau) = int A, the path is p (tau - t') - F(tau) + F(t').  The
    polynomial parts are transformed in closed form; int F exp(-i w tau) uses
    the endpoint-corrected trapezoid rule on the node grid.
    """
    q = np.asarray(orders, dtype=float)
    w = q * pulse.omega
    h = tp[1] - tp[0] if tp.size > 1 else 0.0
    _check_mode_nyquist(h, w.max())
    f1, _ = pulse.integrals(tp)
    a = pulse.vector_potential(tp)
    ph = np.exp(-1j * np.outer(tp, w))  # (nodes, modes)
    ph_f = np.exp(-1j * w * t_f)
    # int_{t'}^{t_f} exp(-i w tau) and int tau exp(-i w tau)
    i0 = (ph - ph_f[None, :]) / (1j * w[None, :])

    def anti(tt, e):
        return e * (1j * tt[..., None] / w + 1.0 / w**2)

    i1 = anti(np.asarray(t_f), ph_f)[None, :] - anti(tp, ph)
    y = f1[:, None] * ph
    dy = (a[:, None] - 1j * w[None, :] * f1[:, None]) * ph
    seg = 0.5 * h * (y[:-1] + y[1:]) + h * h / 12 * (dy[:-1] - dy[1:])
    iF = np.zeros_like(y)
    iF[:-1] = np.cumsum(seg[::-1], axis=0)[::-1]
    path = p * (i1 - tp[:, None] * i0) - iF + f1[:, None] * i0
    return g * np.sqrt(q)[None, :] * path


def mode_displacement(
    v: float,
    t: float,
    tp: float,
    pulse: LaserPulse,
    coupling: CouplingConfig,
    q: int,
    dt: float = 0.05,
) -> complex:
    """delta_q = g sqrt(q) int_{t'}^{t} dr(tau) exp(-i w_q tau) dtau for an electron born at t'.

    ``v`` is the kinetic momentum at the final time ``t``.  The quadrature step is
    at most ``dt``.

    Raises
    ------
    OrderingError
        If ``t < t'``.
    NyquistError
        If ``dt`` cannot resolve the mode frequency.
    """
    if t < tp:
        raise OrderingError("mode displacement requires t >= t'")
    if q < 1:
        raise DomainError("mode order must be positive")
    _check_mode_nyquist(dt, q * pulse.omega)
    if t == tp:
        return 0.0j
    n = max(int(np.ceil((t - tp) / dt)), 1) + 1
    nodes = np.linspace(tp, t, n)
    p = v + float(pulse.vector_potential(t))
    return complex(_displacements(p, nodes, t, pulse, [q], coupling.g)[0, 0])


# ---------------------------------------------------------------------------
# amplitudes and field states


def _phase_rate_max(v: np.ndarray, pulse: LaserPulse, atom: AtomModel) -> float:
    a0 = pulse.E0 / pulse.omega
    return float(0.5 * (np.max(np.abs(v)) + a0) ** 2 + atom.ip)


def _ionization_step(dt: float | None, v: np.ndarray, pulse: LaserPulse, atom: AtomModel) -> float:
    """Explicit steps are checked against the fastest action phase; None picks a safe one."""
    rate = _phase_rate_max(np.atleast_1d(v), pulse, atom)
    if dt is None:
        return min(DEFAULT_IONIZATION_STEP, 0.5 * np.pi / rate)
    _check_mode_nyquist(dt, rate)
    return dt


def dati_amplitudes(
    pulse: LaserPulse,
    atom: AtomModel,
    v,
    dt: float | None = None,
    chunk: int = 128,
) -> np.ndarray:
    """Direct ionization amplitudes M(v) = -i int dt' E(t') d(v - A(t')) exp(-i S).

    Raises
    ------
    NyquistError
        If an explicit ``dt`` cannot follow the fastest phase of the integrand.
        With ``dt=None`` a step is chosen as in :func:`dati_field_state`.
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    dt = _ionization_step(dt, v, pulse, atom)
    t, w = _ionization_nodes(pulse, dt)
    tab = _ionization_table(pulse, atom, t)
    out = np.empty(v.size, dtype=complex)
    for lo in range(0, v.size, chunk):
        out[lo : lo + chunk] = _ionization_matrix(v[lo : lo + chunk], tab, atom) @ w
    return -1j * out


def _ionization_table(pulse: LaserPulse, atom: AtomModel, t: np.ndarray) -> dict:
    """Per-node field, vector potential and action integrals (detection at the pulse end)."""
    f1, f2 = pulse.integrals(t)
    f1e, f2e = pulse.integrals(pulse.t_end)
    return {
        "tau": pulse.t_end - t,
        "E": pulse.electric_field(t),
        "A": pulse.vector_potential(t),
        "dF1": f1e - f1,
        "dF2": f2e - f2,
    }


def _ionization_matrix(v: np.ndarray, tab: dict, atom: AtomModel) -> np.ndarray:
    """ionization_amplitude(v, t') on a (momentum, node) mesh from precomputed tables."""
    vv = v[:, None]
    s = (0.5 * vv * vv + atom.ip) * tab["tau"] - vv * tab["dF1"] + 0.5 * tab["dF2"]
    return tab["E"] * transition_dipole(vv - tab["A"], atom) * np.exp(-1j * s)


@dataclass(frozen=True)
class DatiFieldState:
    """Field state attached to a photoelectron of momentum ``v``.

    sum_k weights[k] |displacements[k]>, one coherent component per ionization
    time with non-zero amplitude; the columns of ``displacements`` are the modes
    in ``orders``.  Not normalized: the squared norm is the photoelectron
    density at ``v``.
    """

    v: float
    times: np.ndarray
    weights: np.ndarray
    displacements: np.ndarray
    orders: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.weights)) or not np.all(np.isfinite(self.displacements)):
            raise DomainError("non-finite weights or displacements")
        if self.displacements.shape != (self.weights.size, self.orders.size):
            raise DomainError("one displacement row per weight is required")

    @property
    def n_terms(self) -> int:
        return self.weights.size

    def decoupled_amplitude(self) -> complex:
        """Amplitude with every displacement set to zero: the semiclassical M(v)."""
        return complex(np.sum(self.weights))

    def overlap(self, other: "DatiFieldState", block: int = 1024) -> complex:
        """<other|self>, summed in blocks to bound memory."""
        if not np.array_equal(self.orders, other.orders):
            raise DomainError("states cover different modes")
        total = 0.0j
        for lo in range(0, other.n_terms, block):
            g = np.exp(log_overlap_matrix(other.displacements[lo : lo + block], self.displacements))
            total += other.weights[lo : lo + block].conj() @ (g @ self.weights)
        return complex(total)

    def norm_squared(self) -> float:
        return float(self.overlap(self).real)

    def single_photon_amplitude(self, q: int) -> complex:
        """<1_q| projected on mode q alone: sum_k c_k beta_k exp(-|beta_k|^2 / 2)."""
        idx = np.nonzero(self.orders == q)[0]
        if idx.size == 0:
            raise DomainError(f"mode {q} not in the state")
        b = self.displacements[:, idx[0]]
        return complex(np.sum(self.weights * b * np.exp(-0.5 * np.abs(b) ** 2)))

    def to_superposition(self) -> CoherentSuperposition:
        if self.n_terms == 0:
            raise StructureError("state has no components")
        return CoherentSuperposition(self.weights, self.displacements, normalized=False)


def dati_field_state(
    v: float,
    pulse: LaserPulse,
    atom: AtomModel,
    coupling: CouplingConfig,
    dt: float | None = None,
    orders=None,
) -> DatiFieldState:
    """Superposition over ionization times of displaced field components.

    Ionization times are trapezoid nodes of step ``dt`` over the pulse (by
    default the largest step, capped at 0.5, that samples the fastest action
    phase four times per cycle), and
    detection happens at the end of the pulse.  Components with exactly zero
    amplitude are dropped, so a field-free pulse gives an empty state.
    """
    orders = coupling.orders if orders is None else np.asarray(orders, dtype=int)
    dt = _ionization_step(dt, np.array([v]), pulse, atom)
    t, w = _ionization_nodes(pulse, dt)
    c = -1j * w * _ionization_matrix(np.array([float(v)]), _ionization_table(pulse, atom, t), atom)[0]
    delta = _displacements(float(v), t, pulse.t_end, pulse, orders, coupling.g)
    keep = c != 0
    return DatiFieldState(float(v), t[keep], c[keep], delta[keep], np.asarray(orders))


# ---------------------------------------------------------------------------
# photoelectron spectra


@dataclass(frozen=True)
class PhotoelectronSpectrum:
    """Yield per unit momentum, both emission directions summed, against kinetic energy."""

    energy: np.ndarray
    yield_: np.ndarray
    up: float
    omega: float

    def to_csv(self) -> str:
        from .textio import format_csv

        return format_csv(["energy_au", "energy_over_Up", "yield"], [self.energy, self.energy / self.up, self.yield_])


def photoelectron_spectrum(
    pulse: LaserPulse,
    atom: AtomModel,
    grid: ContinuumGrid | None = None,
    dt: float | None = None,
) -> PhotoelectronSpectrum:
    """|M(v)|^2 + |M(-v)|^2 at energies v^2/2 for the positive momenta of ``grid``.

    Raises
    ------
    CoverageError
        If the grid stops short of 2 Up.
    """
    grid = grid or ContinuumGrid.for_pulse(pulse)
    grid.check_covers(pulse)
    v = grid.v
    m = dati_amplitudes(pulse, atom, v, dt)
    pos = v > 0
    # the grid is symmetric, so -v[pos] sits at the mirrored indices
    y = np.abs(m[pos]) ** 2 + np.abs(m[::-1][pos]) ** 2
    return PhotoelectronSpectrum(0.5 * v[pos] ** 2, y, ponderomotive_energy(pulse), pulse.omega)


def falloff_ratio(spec: PhotoelectronSpectrum, lower: float = 2.0, upper: float = 2.5) -> float:
    """Peak yield just below ``lower`` Up over peak yield just above ``upper`` Up.

    Each peak is taken over one photon energy, which spans one ATI order.
    """
    e = spec.energy

    def peak(a, b):
        sel = (e >= a) & (e <= b)
        if not np.any(sel):
            raise CoverageError(f"spectrum has no samples in [{a:.4g}, {b:.4g}]")
        return float(spec.yield_[sel].max())

    top = peak(upper * spec.up, upper * spec.up + spec.omega)
    bottom = peak(lower * spec.up - spec.omega, lower * spec.up)
    return np.inf if top == 0 else bottom / top


# ---------------------------------------------------------------------------
# single-photon emission


@dataclass(frozen=True)
class EmissionTable:
    q: np.ndarray
    p_ati: np.ndarray
    p_hhg_reference: np.ndarray

    def to_csv(self) -> str:
        from .textio import format_csv

        return format_csv(["q", "p_ati", "p_hhg_reference"], [self.q, self.p_ati, self.p_hhg_reference])


def hhg_single_photon_probability(chi) -> np.ndarray:
    """|<1|chi>|^2 for a coherent state of amplitude chi."""
    n = np.abs(np.asarray(chi)) ** 2
    return n * np.exp(-n)


def _emission_ati(pulse, atom, coupling, orders, grid, dt) -> np.ndarray:
    grid = grid or ContinuumGrid.for_pulse(pulse, count=128)
    wv = grid.weights()
    out = np.zeros(len(orders))
    for v, wk in zip(grid.v, wv):
        s = dati_field_state(v, pulse, atom, coupling, dt, orders)
        if s.n_terms == 0:
            continue
        b = s.displacements
        amp = s.weights @ (b * np.exp(-0.5 * np.abs(b) ** 2))
        out += wk * np.abs(amp) ** 2
    return out


def photon_emission_probability(
    pulse: LaserPulse,
    atom: AtomModel,
    coupling: CouplingConfig,
    q: int,
    grid: ContinuumGrid | None = None,
    dt: float | None = None,
) -> float:
    """P(w_q) = int dv |<1_q|Phi(v)>|^2 for direct photoelectrons."""
    if q < 1:
        raise DomainError("mode order must be positive")
    return float(_emission_ati(pulse, atom, coupling, [q], grid, dt)[0])


def emission_table(
    pulse: LaserPulse,
    atom: AtomModel,
    coupling: CouplingConfig,
    orders=None,
    grid: ContinuumGrid | None = None,
    dt: float | None = None,
    dipole_dt: float = 0.2,
) -> EmissionTable:
    """Single-photon probabilities from direct ATI next to the HHG value |chi_q|^2 exp(-|chi_q|^2).

    The HHG reference uses the same coupling and emitter count.
    """
    orders = coupling.orders if orders is None else np.asarray(orders, dtype=int)
    p_ati = _emission_ati(pulse, atom, coupling, orders, grid, dt)
    rec = dipole_expectation(pulse, atom, TimeGrid.covering(pulse, dipole_dt))
    hhg = CouplingConfig(coupling.g, int(max(orders.max(), 2)), coupling.n_emitters)
    chi = coherent_amplitudes(rec, hhg).chi[orders - 1]
    return EmissionTable(np.asarray(orders), p_ati, hhg_single_photon_probability(chi))


# ---------------------------------------------------------------------------
# electron-field entanglement


def two_branch_entropy(n_plus: float, n_minus: float, overlap: complex) -> float:
    """Electron entropy of |+v>|A> + |-v>|B> with <A|A> = n_plus, <B|B> = n_minus, <B|A> = overlap.

    The entropy depends only on the branch weights and |overlap|, so the two
    field branches are replaced by single coherent states |beta> and |0> with
    the same normalized overlap exp(-|beta|^2/2), the electron by a far-separated
    coherent pair, and the result comes from
    :func:`attoqo.phase_space.entanglement_entropy`.
    """
    if n_plus < 0 or n_minus < 0:
        raise DomainError("branch norms must be non-negative")
    total = n_plus + n_minus
    if total == 0:
        return 0.0
    if n_plus == 0 or n_minus == 0:
        return 0.0
    c = min(abs(overlap) / np.sqrt(n_plus * n_minus), 1.0)
    beta = _FAR if c == 0 else min(np.sqrt(-2 * np.log(c)), _FAR)
    state = CoherentSuperposition.build(
        [np.sqrt(n_plus / total), np.sqrt(n_minus / total)],
        [[_FAR, beta], [-_FAR, 0.0]],
    )
    return entanglement_entropy(state, [0])


def light_matter_entropy(
    pulse: LaserPulse,
    atom: AtomModel,
    coupling: CouplingConfig,
    v: float,
    dt: float | None = None,
) -> float:
    """Entanglement entropy between the electron (momentum +v or -v) and the field."""
    if not v > 0:
        raise DomainError("v must be positive")
    plus = dati_field_state(v, pulse, atom, coupling, dt)
    minus = dati_field_state(-v, pulse, atom, coupling, dt)
    if plus.n_terms == 0 or minus.n_terms == 0:
        return 0.0
    return two_branch_entropy(plus.norm_squared(), minus.norm_squared(), plus.overlap(minus))
