"""Strong-field observables under non-classical driving light.

In the classical limit (g -> 0 at fixed field) the positive-P average over the
driver collapses to a weight over classical field realizations: every sampled
amplitude alpha drives the atom with an ordinary pulse, and observables are
incoherent averages over alpha.  A sample maps to the template pulse with its
field scaled by |alpha| / |alpha_ref| and its carrier phase shifted by
arg(alpha / alpha_ref), where alpha_ref is the template's own coherent
amplitude.

Weights
-------
coherent          point mass at alpha0
thermal           Glauber P: isotropic Gaussian, variance nbar/2 per quadrature
squeezed kinds    Wigner Gaussian, quadrature covariance (1/4) R diag(e^-2r, e^2r) R^T

The squeezed P-function is not a density, so squeezed light uses its Wigner
function; the two differ by vacuum-level widths (1/4 per quadrature), which
vanish relative to the field widths in the classical limit.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtri

from .errors import DomainError, PrecisionError
from .qstate import CouplingConfig, driver_amplitude
from .sfa import (
    AtomModel,
    LaserPulse,
    Spectrum,
    TimeGrid,
    cutoff_energy,
    dipole_expectation,
    hhg_spectrum,
    nyquist_frequency_required,
)

__all__ = [
    "MIN_NODES",
    "CUTOFF_FLOOR",
    "DriverDistribution",
    "ClassicalLimitWeight",
    "SamplerConfig",
    "classical_limit_weight",
    "sample_nodes",
    "averaged_observable",
    "pulse_for_amplitude",
    "averaged_hhg_spectrum",
    "cutoff_bin",
]

MIN_NODES = 16
CUTOFF_FLOOR = 1e-4
KINDS = ("coherent", "squeezed-vacuum", "displaced-squeezed", "thermal")


@dataclass(frozen=True)
class DriverDistribution:
    """Driver state: mean amplitude alpha0, squeezing (r, theta) and thermal nbar.

    ``theta`` orients the squeezing: the squeezed quadrature lies along the
    direction theta/2 in the complex alpha plane.
    """

    kind: str
    alpha0: complex = 0.0
    r: float = 0.0
    theta: float = 0.0
    nbar: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown driver kind {self.kind!r}")
        if not (self.r >= 0 and self.nbar >= 0):
            raise DomainError("r and nbar must be non-negative")
        if not np.isfinite(self.mean_photon_number):
            raise DomainError("mean photon number must be finite")
        object.__setattr__(self, "alpha0", complex(self.alpha0))
        if self.kind == "coherent" and (self.r or self.nbar):
            raise DomainError("a coherent driver has r = nbar = 0")
        if self.kind == "thermal" and self.r:
            raise DomainError("a thermal driver has r = 0")
        if self.kind in ("squeezed-vacuum", "displaced-squeezed") and self.nbar:
            raise DomainError("squeezed drivers are pure (nbar = 0)")
        if self.kind == "squeezed-vacuum" and self.alpha0 != 0:
            raise DomainError("squeezed vacuum has alpha0 = 0")

    @property
    def mean_photon_number(self) -> float:
        return float(abs(complex(self.alpha0)) ** 2 + np.sinh(self.r) ** 2 + self.nbar)

    @classmethod
    def matched(cls, kind: str, n_mean: float, theta: float = 0.0) -> "DriverDistribution":
        """Zero-mean squeezed vacuum or thermal light of mean photon number ``n_mean``."""
        if kind == "squeezed-vacuum":
            return cls(kind, 0.0, r=float(np.arcsinh(np.sqrt(n_mean))), theta=theta)
        if kind == "thermal":
            return cls(kind, 0.0, nbar=float(n_mean))
        raise DomainError("matched() builds squeezed-vacuum or thermal drivers")


@dataclass(frozen=True)
class ClassicalLimitWeight:
    """Gaussian density over alpha (mean, 2x2 covariance of Re/Im) or a point mass."""

    mean: complex
    cov: np.ndarray | None = None

    @property
    def is_point_mass(self) -> bool:
        return self.cov is None

    def mean_intensity(self) -> float:
        """<|alpha|^2> under the weight."""
        extra = 0.0 if self.cov is None else float(np.trace(self.cov))
        return abs(self.mean) ** 2 + extra


def classical_limit_weight(dist: DriverDistribution) -> ClassicalLimitWeight:
    if dist.kind == "coherent":
        return ClassicalLimitWeight(dist.alpha0)
    if dist.kind == "thermal":
        return ClassicalLimitWeight(dist.alpha0, 0.5 * dist.nbar * np.eye(2))
    phi = 0.5 * dist.theta
    rot = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
    cov = 0.25 * rot @ np.diag([np.exp(-2 * dist.r), np.exp(2 * dist.r)]) @ rot.T
    return ClassicalLimitWeight(dist.alpha0, cov)


@dataclass(frozen=True)
class SamplerConfig:
    """``method`` is ``"mc"`` (Latin-hypercube Monte Carlo) or ``"gh"`` (tensor Gauss-Hermite).

    Gauss-Hermite needs a square node count.  ``dt`` is the dipole time step
    used by :func:`averaged_hhg_spectrum` (refined automatically when a node's
    field needs a finer grid).
    """

    method: str = "mc"
    nodes: int = 64
    seed: int | None = 0
    dt: float = 0.2

    def __post_init__(self):
        if self.method not in ("mc", "gh"):
            raise DomainError(f"unknown sampler {self.method!r}")
        if self.nodes < 1:
            raise DomainError("need at least one node")
        if self.method == "gh" and int(round(np.sqrt(self.nodes))) ** 2 != self.nodes:
            raise DomainError("Gauss-Hermite needs a square node count")
        if not self.dt > 0:
            raise DomainError("dt must be positive")


def sample_nodes(weight: ClassicalLimitWeight, sampler: SamplerConfig) -> tuple[np.ndarray, np.ndarray]:
    """Complex nodes and normalized weights for the classical-limit average.

    Raises
    ------
    PrecisionError
        If a non-point-mass weight gets fewer than MIN_NODES nodes.
    """
    if weight.is_point_mass:
        return np.array([weight.mean]), np.array([1.0])
    if sampler.nodes < MIN_NODES:
        raise PrecisionError(f"{sampler.nodes} nodes cannot resolve a Gaussian weight (need >= {MIN_NODES})")
    lam, vec = np.linalg.eigh(weight.cov)
    root = vec * np.sqrt(np.clip(lam, 0.0, None))[None, :]
    if sampler.method == "gh":
        k = int(round(np.sqrt(sampler.nodes)))
        x, w = np.polynomial.hermite_e.hermegauss(k)
        w = w / w.sum()
        z = np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1).reshape(-1, 2)
        wts = np.outer(w, w).ravel()
    else:
        rng = np.random.default_rng(sampler.seed)
        n = sampler.nodes
        u = np.empty((n, 2))
        for d in range(2):
            u[:, d] = (rng.permutation(n) + rng.random(n)) / n
        z = ndtri(u)
        wts = np.full(n, 1.0 / n)
    xy = z @ root.T
    return weight.mean + xy[:, 0] + 1j * xy[:, 1], wts


def averaged_observable(
    weight: ClassicalLimitWeight,
    evaluator: Callable[[complex], float | np.ndarray],
    sampler: SamplerConfig = SamplerConfig(),
    workers: int = 1,
) -> tuple[np.ndarray | float, np.ndarray | float]:
    """Weighted average of ``evaluator(alpha)`` and its standard error.

    With ``workers > 1`` nodes are evaluated on a thread pool; results are
    collected and reduced in node order, so they do not depend on the worker
    count.  The standard error is the weighted spread over nodes divided by
    sqrt(nodes); it is zero for a point mass.
    """
    nodes, wts = sample_nodes(weight, sampler)
    if workers > 1 and nodes.size > 1:
        with ThreadPoolExecutor(workers) as pool:
            vals = np.array([np.asarray(v, dtype=float) for v in pool.map(evaluator, nodes)])
    else:
        vals = np.array([np.asarray(evaluator(a), dtype=float) for a in nodes])
    mean = np.tensordot(wts, vals, axes=1)
    if nodes.size == 1:
        err = np.zeros_like(mean)
    else:
        var = np.tensordot(wts, (vals - mean) ** 2, axes=1)
        err = np.sqrt(var / nodes.size)
    if np.ndim(mean) == 0:
        return float(mean), float(err)
    return mean, err


def pulse_for_amplitude(template: LaserPulse, alpha: complex, alpha_ref: complex) -> LaserPulse:
    """Template pulse rescaled to amplitude alpha (template returned unchanged at alpha_ref)."""
    if alpha == alpha_ref:
        return template
    if alpha_ref == 0:
        raise DomainError("reference amplitude must be nonzero")
    ratio = alpha / alpha_ref
    return template.with_amplitude(template.E0 * abs(ratio), template.cep + float(np.angle(ratio)))


def averaged_hhg_spectrum(
    weight: ClassicalLimitWeight,
    template: LaserPulse,
    atom: AtomModel,
    coupling: CouplingConfig,
    sampler: SamplerConfig = SamplerConfig(),
    workers: int = 1,
) -> Spectrum:
    """Classical-limit average of HHG spectra over driver amplitudes.

    Every node is run through :func:`attoqo.sfa.hhg_spectrum` on a common grid;
    a point-mass weight at the template amplitude is a single run on the
    template pulse.  The standard error per bin is in ``extra["stderr"]``.
    """
    alpha_ref = driver_amplitude(template, coupling)
    nodes, _ = sample_nodes(weight, sampler)
    dt = sampler.dt
    strongest = pulse_for_amplitude(template, nodes[np.argmax(np.abs(nodes))], alpha_ref)
    w_req = nyquist_frequency_required(strongest, atom)
    if dt * w_req > np.pi:
        dt = 0.95 * np.pi / w_req
    grid = TimeGrid.covering(template, dt)

    def spectrum(alpha):
        return hhg_spectrum(dipole_expectation(pulse_for_amplitude(template, alpha, alpha_ref), atom, grid)).intensity

    mean, err = averaged_observable(weight, spectrum, sampler, workers)
    omega = 2 * np.pi * np.fft.rfftfreq(grid.n, grid.dt)
    s = Spectrum(omega, np.asarray(mean), "hann", template.omega, extra={"stderr": np.asarray(err)})
    k = cutoff_bin(s, template, atom)
    return Spectrum(omega, s.intensity, "hann", template.omega, float(omega[k] / template.omega), s.extra)


def cutoff_bin(spec: Spectrum, template: LaserPulse, atom: AtomModel) -> int:
    """Index of the last bin above CUTOFF_FLOOR times the plateau median.

    The plateau is the band of harmonic orders from 5 to the classical cutoff
    of the template pulse.
    """
    h = spec.omega / template.omega
    qc = cutoff_energy(template, atom) / template.omega
    band = (h >= 5) & (h <= qc)
    if not np.any(band):
        raise DomainError("spectrum does not cover the plateau band")
    level = CUTOFF_FLOOR * np.median(spec.intensity[band])
    above = np.nonzero(spec.intensity > level)[0]
    return int(above[-1]) if above.size else -1
