"""Conditioning on harmonic emission and metrology of the resulting cat states.

After the interaction the field is the product |alpha + delta_alpha> (x) |chi_q>.
Conditioning on "harmonic generation happened" (POVM element 1 - |0~><0~|)
removes the component in which neither the driver nor the harmonics changed,

    |alpha + da> (x) |chi_q>  -  xi_1 prod(xi_q) |alpha> (x) |0_q>,
    xi_1 = <alpha|alpha + da>,  xi_q = <0|chi_q>,

and projecting the harmonics onto |chi_q> leaves the driver in the generalized
cat |alpha + da> - xi_1 exp(-Omega) |alpha> with Omega = sum_q |chi_q|^2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, least_squares

from .errors import DomainError, SelectionEfficiencyError, ZeroNormError
from .phase_space import (
    CoherentSuperposition,
    GaussianModeState,
    apply_loss,
    coherent_overlap,
    log_overlap_matrix,
    purity,
    qfi_phase,
)
from .qstate import HarmonicAmplitudes
from .textio import format_csv

SHOT_BLOCK = 1 << 16
# branches cancelling below this norm^2 mean the conditioning event never happens
ZERO_NORM = 1e-300


@dataclass(frozen=True)
class ConditioningInput:
    """Driver amplitude, its shift and the harmonic amplitudes (q >= 2)."""

    alpha_in: complex
    delta_alpha: complex
    chi: np.ndarray

    def __post_init__(self):
        chi = np.atleast_1d(np.asarray(self.chi, dtype=complex))
        if not (np.isfinite(self.alpha_in) and np.isfinite(self.delta_alpha) and np.all(np.isfinite(chi))):
            raise DomainError("amplitudes must be finite")
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "alpha_in", complex(self.alpha_in))
        object.__setattr__(self, "delta_alpha", complex(self.delta_alpha))

    @classmethod
    def from_amplitudes(cls, amps: HarmonicAmplitudes) -> "ConditioningInput":
        return cls(amps.alpha_in, amps.delta_alpha, amps.chi[1:])

    @property
    def omega(self) -> float:
        return float(np.sum(np.abs(self.chi) ** 2))

    @property
    def xi1(self) -> complex:
        return coherent_overlap([self.alpha_in], [self.alpha_in + self.delta_alpha])


def _normalized(weights, amps) -> CoherentSuperposition:
    raw = CoherentSuperposition(weights, amps, normalized=False)
    if not raw.norm_squared() > ZERO_NORM:
        raise ZeroNormError("conditioned state has zero norm: the conditioning event has probability zero")
    return CoherentSuperposition.build(weights, amps)


def entangled_conditioned_state(inp: ConditioningInput) -> CoherentSuperposition:
    """Multimode state after conditioning on harmonic generation (driver first)."""
    if inp.delta_alpha == 0 and not np.any(inp.chi):
        raise ZeroNormError("no driver shift and no harmonics: the conditioning event has probability zero")
    xiq = np.exp(-0.5 * np.abs(inp.chi) ** 2)
    amps = np.vstack(
        [
            np.concatenate([[inp.alpha_in + inp.delta_alpha], inp.chi]),
            np.concatenate([[inp.alpha_in], np.zeros(inp.chi.size)]),
        ]
    )
    return _normalized([1.0, -inp.xi1 * np.prod(xiq)], amps)


def hhg_cat_state(inp: ConditioningInput) -> CoherentSuperposition:
    """Driver-mode cat |alpha + da> - <alpha|alpha + da> exp(-Omega) |alpha>, normalized."""
    if inp.delta_alpha == 0 and inp.omega == 0:
        raise ZeroNormError("no driver shift and no harmonics: the conditioning event has probability zero")
    return _normalized(
        [1.0, -inp.xi1 * np.exp(-inp.omega)],
        [[inp.alpha_in + inp.delta_alpha], [inp.alpha_in]],
    )


def xuv_cat_state(inp: ConditioningInput, q: int) -> CoherentSuperposition:
    """Superposition of |chi_q> with the vacuum in harmonic mode ``q``.

    Obtained from the entangled conditioned state by projecting the driver onto
    |alpha + da> and every other harmonic q' onto |chi_q'>:

        |chi_q> - |xi_1|^2 prod_{q' != q} |xi_q'|^2 xi_q |0>.
    """
    k = q - 2
    if not 0 <= k < inp.chi.size:
        raise DomainError(f"harmonic {q} not retained")
    chi_q = inp.chi[k]
    rest = np.delete(np.abs(inp.chi) ** 2, k)
    c2 = -abs(inp.xi1) ** 2 * np.exp(-np.sum(rest)) * np.exp(-0.5 * abs(chi_q) ** 2)
    if chi_q == 0:
        raise ZeroNormError("harmonic amplitude is zero")
    return _normalized([1.0, c2], [[chi_q], [0.0]])


def state_fidelity(a: CoherentSuperposition, b: CoherentSuperposition) -> float:
    """|<a|b>|^2 for normalized pure states."""
    ov = np.exp(log_overlap_matrix(a.amplitudes, b.amplitudes))
    return float(abs(a.weights.conj() @ ov @ b.weights) ** 2)


def _moments(state: CoherentSuperposition) -> tuple[complex, float]:
    """<a> and <a^+ a> of a single-mode superposition."""
    g = state.gram()
    w = state.weights
    amp = state.amplitudes[:, 0]
    norm = np.real(w.conj() @ g @ w)
    mean_a = (w.conj() @ (g * amp[None, :]) @ w) / norm
    n = np.real(w.conj() @ (g * np.outer(amp.conj(), amp)) @ w) / norm
    return complex(mean_a), float(n)


# ---------------------------------------------------------------------------
# shot sampling and post-selection


@dataclass(frozen=True)
class ShotTable:
    """Per-shot photon numbers of every mode plus a homodyne sample of the driver.

    ``counts[:, 0]`` is the driver photon number and ``counts[:, j]`` that of
    harmonic j + 1.  ``theta`` and ``quadrature`` are the local-oscillator phase
    and outcome x_theta = (a e^{-i theta} + a^+ e^{i theta}) / sqrt(2) of a
    homodyne measurement on a tap of the driver.
    """

    counts: np.ndarray
    theta: np.ndarray
    quadrature: np.ndarray
    seed: int

    @property
    def shots(self) -> int:
        return self.counts.shape[0]

    @property
    def modes(self) -> int:
        return self.counts.shape[1]

    def upconverted_energy(self) -> np.ndarray:
        """sum_{q >= 2} q n_q in units of driver photons."""
        q = np.arange(2, self.modes + 1)
        return self.counts[:, 1:] @ q

    def to_csv(self) -> str:
        ids = np.arange(self.shots)
        names = ["shot_id"] + [f"n_{q}" for q in range(1, self.modes + 1)] + ["theta_1", "x_1"]
        cols = [ids] + [self.counts[:, j] for j in range(self.modes)] + [self.theta, self.quadrature]
        return format_csv(names, cols, comments=[f"seed = {self.seed}"])


def _product_amplitudes(state) -> np.ndarray:
    if isinstance(state, HarmonicAmplitudes):
        amps = state.chi.astype(complex).copy()
        amps[0] += state.alpha_in
        return amps
    if isinstance(state, GaussianModeState):
        if np.max(np.abs(state.covariance - 0.5 * np.eye(2 * state.modes))) > 1e-12:
            raise DomainError("shot sampling needs a product of coherent states")
        return (state.mean[0::2] + 1j * state.mean[1::2]) / np.sqrt(2)
    return np.atleast_1d(np.asarray(state, dtype=complex))


def sample_shots(state, shots: int, seed: int = 0) -> ShotTable:
    """Draw independent shots from a product of coherent states.

    Photon numbers are Poisson with mean |amplitude|^2; the driver homodyne
    outcome is normal with mean sqrt(2) Re(beta e^{-i theta}) and variance 1/2 at a
    uniformly random phase.  Shots are generated in fixed blocks of 65536, each
    with its own stream spawned from ``seed``, so the table does not depend on
    how blocks are scheduled.
    """
    if shots < 1:
        raise DomainError("need at least one shot")
    amps = _product_amplitudes(state)
    lam = np.abs(amps) ** 2
    n_blocks = -(-shots // SHOT_BLOCK)
    streams = np.random.SeedSequence(seed).spawn(n_blocks)
    counts = np.empty((shots, amps.size), dtype=np.int64)
    theta = np.empty(shots)
    quad = np.empty(shots)
    for b, ss in enumerate(streams):
        lo = b * SHOT_BLOCK
        hi = min(shots, lo + SHOT_BLOCK)
        rng = np.random.Generator(np.random.PCG64(ss))
        counts[lo:hi] = rng.poisson(lam, size=(hi - lo, amps.size))
        th = rng.uniform(0.0, 2 * np.pi, hi - lo)
        theta[lo:hi] = th
        quad[lo:hi] = np.sqrt(2) * np.real(amps[0] * np.exp(-1j * th)) + rng.normal(0.0, np.sqrt(0.5), hi - lo)
    return ShotTable(counts, theta, quad, seed)


def default_window(table: ShotTable) -> float:
    """max(1, 5 % of the mean upconverted energy), in driver-photon units."""
    return max(1.0, 0.05 * float(np.mean(table.upconverted_energy())))


def energy_mismatch(table: ShotTable, alpha_in: complex) -> np.ndarray:
    """Driver photon loss |alpha_in|^2 - n_1 minus the upconverted energy, per shot."""
    return (abs(alpha_in) ** 2 - table.counts[:, 0]) - table.upconverted_energy()


def calibrate_window(table: ShotTable, alpha_in: complex, acceptance: float = 0.01) -> float:
    """Smallest energy window that keeps at least the requested fraction of shots."""
    if not 0 < acceptance <= 1:
        raise DomainError("acceptance must lie in (0, 1]")
    mis = np.sort(np.abs(energy_mismatch(table, alpha_in)))
    k = int(np.ceil(acceptance * table.shots)) - 1
    return float(mis[k])


@dataclass(frozen=True)
class SelectionResult:
    kept: np.ndarray
    window: float
    acceptance: float
    omega_estimate: float
    reconstructed: CoherentSuperposition
    fidelity: float | None


def reconstruct_cat(alpha_in: complex, omega: float, mean_a: complex, var_quad: float) -> CoherentSuperposition:
    """Moment-match the two-branch cat ansatz to measured driver moments.

    The ansatz is |alpha_in + d> - <alpha_in|alpha_in + d> exp(-omega) |alpha_in>;
    the complex shift d is fitted so that <a> and the phase-averaged quadrature
    variance <a^+ a> - |<a>|^2 + 1/2 match the measured values.
    """

    def state(d):
        return CoherentSuperposition.build(
            [1.0, -coherent_overlap([alpha_in], [alpha_in + d]) * np.exp(-omega)],
            [[alpha_in + d], [alpha_in]],
        )

    def resid(p):
        d = p[0] + 1j * p[1]
        if abs(d) < 1e-9 and omega == 0:
            d = 1e-9
        ma, n = _moments(state(d))
        return [ma.real - mean_a.real, ma.imag - mean_a.imag, (n - abs(ma) ** 2 + 0.5) - var_quad]

    # the moment map is not convex: start from the coherent guess and from a
    # ring of shifts around it, keep the best fit
    d0 = mean_a - alpha_in
    r0 = max(abs(d0), 0.5)
    starts = [d0] + [d0 + r0 * np.exp(2j * np.pi * k / 6) for k in range(6)]
    best = None
    for s0 in starts:
        s0 = s0 if abs(s0) > 1e-6 else 1e-6
        fit = least_squares(resid, [s0.real, s0.imag], xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if best is None or fit.cost < best.cost:
            best = fit
    d = best.x[0] + 1j * best.x[1]
    if abs(d) < 1e-9 and omega == 0:
        d = 1e-9
    return state(d)


def postselect_energy_conserving(
    table: ShotTable,
    alpha_in: complex,
    window: float | None = None,
    reference: ConditioningInput | None = None,
    min_kept: int = 2,
) -> SelectionResult:
    """Keep shots whose driver photon loss matches the upconverted energy.

    A shot is kept when |(|alpha_in|^2 - n_1) - sum_q q n_q| <= window.  The
    driver state is reconstructed from the kept homodyne samples by moment
    matching onto the cat ansatz, with Omega estimated from the mean harmonic
    photon number of all shots.  If ``reference`` is given the fidelity against
    its analytic cat is reported.

    Raises
    ------
    SelectionEfficiencyError
        If fewer than ``min_kept`` shots survive.
    """
    if table.shots < 1:
        raise DomainError("empty shot table")
    w = default_window(table) if window is None else float(window)
    kept = np.abs(energy_mismatch(table, alpha_in)) <= w
    acc = float(np.mean(kept))
    if kept.sum() < min_kept:
        raise SelectionEfficiencyError("post-selected set is empty", acc)
    th = table.theta[kept]
    x = table.quadrature[kept]
    # <x_theta> = sqrt(2) (Re<a> cos theta + Im<a> sin theta): linear regression
    design = np.sqrt(2) * np.column_stack([np.cos(th), np.sin(th)])
    coef, *_ = np.linalg.lstsq(design, x, rcond=None)
    mean_a = complex(coef[0], coef[1])
    var_quad = float(np.mean((x - design @ coef) ** 2))
    omega = float(np.mean(table.counts[:, 1:].sum(axis=1)))
    rec = reconstruct_cat(complex(alpha_in), omega, mean_a, var_quad)
    fid = state_fidelity(rec, hhg_cat_state(reference)) if reference is not None else None
    return SelectionResult(kept, w, acc, omega, rec, fid)


# ---------------------------------------------------------------------------
# loss robustness and phase sensitivity


def mean_photon_number(state: CoherentSuperposition) -> float:
    return _moments(state)[1]


def matched_cat(mean_n: float, parity: int) -> CoherentSuperposition:
    """Even (+1) or odd (-1) cat |a> +- |-a> with real a and the given <N>."""
    if parity == 1:
        f = lambda a: a**2 * np.tanh(a**2) - mean_n  # noqa: E731
    else:
        f = lambda a: a**2 / np.tanh(a**2) - mean_n  # noqa: E731
        if mean_n <= 1:
            raise DomainError("odd cats have <N> > 1")
    a = brentq(f, 1e-6, np.sqrt(mean_n) + 2)
    return CoherentSuperposition.cat(a, parity)


def matched_hhg_cat(mean_n: float, delta_alpha: complex, omega: float = 0.0) -> tuple[CoherentSuperposition, float]:
    """HHG cat with real driver amplitude chosen so that <N> = mean_n; returns (state, alpha)."""
    def f(a):
        return mean_photon_number(hhg_cat_state(ConditioningInput(a, delta_alpha, [np.sqrt(omega)]))) - mean_n

    hi = np.sqrt(mean_n) + abs(delta_alpha) + 3
    a = brentq(f, 1e-3, hi, xtol=1e-13)
    return hhg_cat_state(ConditioningInput(a, delta_alpha, [np.sqrt(omega)])), a


def loss_robustness_curve(state: CoherentSuperposition, etas) -> np.ndarray:
    """Purity after the loss channel of transmissivity eta, for each eta."""
    return np.array([purity(apply_loss(state, float(e))) for e in np.atleast_1d(etas)])


def qfi_curve(state: CoherentSuperposition, etas) -> np.ndarray:
    return np.array([qfi_phase(apply_loss(state, float(e))) for e in np.atleast_1d(etas)])


def advantage_interval(etas, values, reference: float) -> tuple[float, float] | None:
    """Largest contiguous eta range (on the grid) where ``values`` exceed ``reference``."""
    etas = np.asarray(etas)
    above = np.asarray(values) > reference
    best, start = None, None
    for i, flag in enumerate(np.append(above, False)):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            if best is None or etas[i - 1] - etas[start] > best[1] - best[0]:
                best = (float(etas[start]), float(etas[i - 1]))
            start = None
    return best


@dataclass(frozen=True)
class MetrologyReport:
    etas: np.ndarray
    purity: dict
    qfi: dict
    qfi_odd_pure: float
    interval: tuple[float, float] | None

    def to_csv(self) -> str:
        names = ["eta"]
        cols = [self.etas]
        for k, v in self.purity.items():
            names.append(f"purity_{k}")
            cols.append(v)
        for k, v in self.qfi.items():
            names.append(f"qfi_{k}")
            cols.append(v)
        names.append("qfi_odd_pure")
        cols.append(np.full(self.etas.size, self.qfi_odd_pure))
        note = "no advantage interval" if self.interval is None else f"advantage interval {self.interval[0]} {self.interval[1]}"
        return format_csv(names, cols, comments=[note])


def qfi_comparison(hhg: CoherentSuperposition, etas, mean_n: float | None = None) -> MetrologyReport:
    """Purity and QFI of the HHG cat and of even/odd cats at the same <N> under loss.

    The advantage interval is the largest eta range where the lossy HHG cat has
    a larger QFI than the lossless odd cat.
    """
    etas = np.asarray(etas, dtype=float)
    n = mean_photon_number(hhg) if mean_n is None else mean_n
    states = {"hhg": hhg, "even": matched_cat(n, +1), "odd": matched_cat(n, -1)}
    pur = {k: loss_robustness_curve(s, etas) for k, s in states.items()}
    qfi = {k: qfi_curve(s, etas) for k, s in states.items()}
    ref = qfi_phase(states["odd"])
    return MetrologyReport(etas, pur, qfi, ref, advantage_interval(etas, qfi["hhg"], ref))
