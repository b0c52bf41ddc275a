"""Multimode bosonic states built from coherent states and Gaussian states.

Conventions: hbar = 1, x = (a + a^dag)/sqrt(2), p = (a - a^dag)/(i sqrt(2)).
The vacuum has quadrature variance 1/2 and a coherent-state Wigner peak of
height 1/pi.  Phase-space mean vectors are ordered (x1, p1, x2, p2, ...).

Everything here is closed form in terms of coherent-state overlaps, which is
what lets lossy cat states with hundreds of photons be handled without a Fock
basis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .errors import (
    DimensionError,
    DomainError,
    PhysicalityError,
    ResolutionError,
    StructureError,
    TruncationError,
)

__all__ = [
    "CoherentSuperposition",
    "CoherentOperatorMix",
    "GaussianModeState",
    "GridAxis",
    "WignerGrid",
    "PhotonStatistics",
    "coherent_overlap",
    "log_overlap_matrix",
    "wigner",
    "photon_statistics",
    "apply_loss",
    "trace",
    "purity",
    "qfi_phase",
    "squeezing_parameters",
    "log_negativity",
    "entanglement_entropy",
    "symplectic_eigenvalues",
    "symplectic_form",
]

GRAM_CUTOFF = 1e-12
NORM_TOL = 1e-10


def _as_amplitudes(a, modes: int | None = None) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(a, dtype=complex))
    if arr.ndim == 1:
        arr = arr[None, :]
    if modes is not None and arr.shape[1] != modes:
        raise DimensionError(f"expected {modes} modes, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite coherent amplitude")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def log_overlap_matrix(bras: np.ndarray, kets: np.ndarray) -> np.ndarray:
    """Matrix of log <bra_k|ket_l> for rows of two amplitude arrays."""
    bras = np.asarray(bras, dtype=complex)
    kets = np.asarray(kets, dtype=complex)
    nb = 0.5 * np.sum(np.abs(bras) ** 2, axis=1)
    nk = 0.5 * np.sum(np.abs(kets) ** 2, axis=1)
    return bras.conj() @ kets.T - nb[:, None] - nk[None, :]


def coherent_overlap(alpha, beta) -> complex:
    """Return <beta|alpha> for multimode coherent states.

    Raises
    ------
    DimensionError
        If the two amplitude vectors have different lengths.
    """
    a = np.atleast_1d(np.asarray(alpha, dtype=complex))
    b = np.atleast_1d(np.asarray(beta, dtype=complex))
    if a.shape != b.shape:
        raise DimensionError(f"amplitude lengths differ: {a.shape} vs {b.shape}")
    lg = np.vdot(b, a) - 0.5 * np.vdot(a, a).real - 0.5 * np.vdot(b, b).real
    return complex(np.exp(lg))


# ---------------------------------------------------------------------------
# state containers


@dataclass(frozen=True)
class CoherentSuperposition:
    """Pure state sum_k c_k |alpha_k>, amplitudes stored as a (terms, modes) array."""

    weights: np.ndarray
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=complex))
        amps = _as_amplitudes(self.amplitudes)
        if w.ndim != 1 or w.size != amps.shape[0]:
            raise DimensionError("one weight per term is required")
        if w.size < 1:
            raise StructureError("a superposition needs at least one term")
        if not np.all(np.isfinite(w)):
            raise DomainError("non-finite weight")
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "amplitudes", _frozen(amps))
        if self.normalized:
            n = self.norm_squared()
            # near-cancelling branches (e.g. |d> - <0|d>|0> for small d) lose
            # digits in the Gram sum; allow for that rounding floor
            w_abs = np.abs(w)
            floor = 64 * np.finfo(float).eps * float(w_abs @ np.abs(self.gram()) @ w_abs)
            if abs(n - 1.0) > max(NORM_TOL, floor):
                raise StructureError(f"state flagged normalized but <psi|psi> = {n!r}")

    @classmethod
    def build(cls, weights, amplitudes, normalize: bool = True) -> "CoherentSuperposition":
        """Construct a state, rescaling the weights to unit norm if asked."""
        raw = cls(weights, amplitudes, normalized=False)
        if not normalize:
            return raw
        n = raw.norm_squared()
        if n <= 0:
            raise StructureError("state has zero norm")
        return cls(raw.weights / np.sqrt(n), raw.amplitudes, normalized=True)

    @classmethod
    def coherent(cls, alpha) -> "CoherentSuperposition":
        return cls([1.0], _as_amplitudes(alpha))

    @classmethod
    def cat(cls, alpha: complex, parity: int = +1) -> "CoherentSuperposition":
        """Single-mode cat |alpha> + parity |-alpha>, normalized."""
        return cls.build([1.0, float(parity)], [[alpha], [-alpha]])

    @property
    def modes(self) -> int:
        return self.amplitudes.shape[1]

    @property
    def n_terms(self) -> int:
        return self.amplitudes.shape[0]

    def gram(self) -> np.ndarray:
        return np.exp(log_overlap_matrix(self.amplitudes, self.amplitudes))

    def norm_squared(self) -> float:
        w = self.weights
        return float(np.real(w.conj() @ self.gram() @ w))

    def to_operator(self) -> "CoherentOperatorMix":
        """Dyadic expansion |psi><psi| = sum_kl c_k c_l^* |alpha_k><alpha_l|."""
        k, l = np.meshgrid(np.arange(self.n_terms), np.arange(self.n_terms), indexing="ij")
        k, l = k.ravel(), l.ravel()
        coeffs = self.weights[k] * self.weights[l].conj()
        return CoherentOperatorMix(coeffs, self.amplitudes[k], self.amplitudes[l])

    def to_text(self) -> str:
        lines = [f"# modes {self.modes} terms {self.n_terms}"]
        for c, amp in zip(self.weights, self.amplitudes):
            vals = [c.real, c.imag] + [v for a in amp for v in (a.real, a.imag)]
            lines.append(" ".join(repr(float(v)) for v in vals))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CoherentSuperposition":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        data = np.array(rows, dtype=float)
        w = data[:, 0] + 1j * data[:, 1]
        amps = data[:, 2::2] + 1j * data[:, 3::2]
        return cls.build(w, amps, normalize=True)


@dataclass(frozen=True)
class CoherentOperatorMix:
    """Operator sum_t c_t |alpha_t><beta_t| on M modes."""

    coeffs: np.ndarray
    kets: np.ndarray
    bras: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        kets = _as_amplitudes(self.kets)
        bras = _as_amplitudes(self.bras)
        if kets.shape != bras.shape or c.size != kets.shape[0]:
            raise DimensionError("coefficient, ket and bra counts must agree")
        object.__setattr__(self, "coeffs", _frozen(c))
        object.__setattr__(self, "kets", _frozen(kets))
        object.__setattr__(self, "bras", _frozen(bras))

    @property
    def modes(self) -> int:
        return self.kets.shape[1]

    def term_overlaps(self) -> np.ndarray:
        """<beta_t|alpha_t> for every term."""
        lg = (
            np.sum(self.bras.conj() * self.kets, axis=1)
            - 0.5 * np.sum(np.abs(self.kets) ** 2, axis=1)
            - 0.5 * np.sum(np.abs(self.bras) ** 2, axis=1)
        )
        return np.exp(lg)

    def hermiticity_defect(self) -> float:
        """Hilbert-Schmidt norm of rho - rho^dag relative to that of rho."""
        c = self.coeffs
        kk = np.exp(log_overlap_matrix(self.kets, self.kets))
        bb = np.exp(log_overlap_matrix(self.bras, self.bras))
        # Tr(rho^dag rho) and Tr(rho rho)
        t1 = np.outer(c.conj(), c) * kk * bb.T
        hs = np.real(np.sum(t1))
        bk = np.exp(log_overlap_matrix(self.bras, self.kets))
        t2 = np.outer(c, c) * bk * bk.T
        rr = np.sum(t2)
        # the difference of two nearly equal sums: discount its rounding error
        noise = 16 * np.finfo(float).eps * (np.sum(np.abs(t1)) + np.sum(np.abs(t2)))
        diff = max(2.0 * hs - 2.0 * rr.real - noise, 0.0)
        return float(np.sqrt(diff) / max(np.sqrt(abs(hs)), 1e-300))

    def to_text(self) -> str:
        lines = [f"# modes {self.modes} terms {self.coeffs.size}"]
        for c, a, b in zip(self.coeffs, self.kets, self.bras):
            vals = [c.real, c.imag] + [v for z in a for v in (z.real, z.imag)]
            vals += [v for z in b for v in (z.real, z.imag)]
            lines.append(" ".join(repr(float(v)) for v in vals))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class GaussianModeState:
    """Gaussian state given by its mean and symmetrized covariance."""

    mean: np.ndarray
    covariance: np.ndarray
    check: bool = field(default=True, compare=False)

    def __post_init__(self):
        mu = np.asarray(self.mean, dtype=float).ravel()
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (mu.size, mu.size) or mu.size % 2:
            raise DimensionError("mean of length 2M and covariance 2M x 2M required")
        if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-12:
            raise StructureError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        object.__setattr__(self, "mean", _frozen(mu))
        object.__setattr__(self, "covariance", _frozen(cov))
        if self.check:
            nu = symplectic_eigenvalues(cov)
            if nu.size and nu.min() < 0.5 - 1e-9:
                raise PhysicalityError(
                    f"covariance violates uncertainty: smallest symplectic eigenvalue {nu.min():.3e}"
                )

    @classmethod
    def vacuum(cls, modes: int) -> "GaussianModeState":
        return cls(np.zeros(2 * modes), 0.5 * np.eye(2 * modes))

    @property
    def modes(self) -> int:
        return self.mean.size // 2

    def mode_block(self, mode: int) -> tuple[np.ndarray, np.ndarray]:
        if not 0 <= mode < self.modes:
            raise DimensionError(f"mode {mode} out of range")
        sl = slice(2 * mode, 2 * mode + 2)
        return self.mean[sl], self.covariance[sl, sl]

    def reduced(self, modes: Sequence[int]) -> "GaussianModeState":
        idx = np.array([[2 * m, 2 * m + 1] for m in modes]).ravel()
        return GaussianModeState(self.mean[idx], self.covariance[np.ix_(idx, idx)])

    def mean_photon_number(self, mode: int) -> float:
        mu, v = self.mode_block(mode)
        return float(0.5 * (v[0, 0] + v[1, 1] - 1.0) + 0.5 * (mu @ mu))

    def to_text(self) -> str:
        lines = ["# mean", " ".join(repr(float(v)) for v in self.mean), "# covariance"]
        lines += [" ".join(repr(float(v)) for v in row) for row in self.covariance]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GaussianModeState":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        mean = np.array(rows[0], dtype=float)
        cov = np.array(rows[1:], dtype=float)
        return cls(mean, cov)


@dataclass(frozen=True)
class GridAxis:
    min: float
    step: float
    count: int

    @classmethod
    def symmetric(cls, half_width: float, step: float) -> "GridAxis":
        n = int(round(2 * half_width / step)) + 1
        return cls(-half_width, step, n)

    @property
    def points(self) -> np.ndarray:
        return self.min + self.step * np.arange(self.count)


@dataclass(frozen=True)
class WignerGrid:
    x_axis: GridAxis
    p_axis: GridAxis
    values: np.ndarray  # shape (p count, x count): row index runs over p

    def integral(self) -> float:
        return float(self.values.sum() * self.x_axis.step * self.p_axis.step)

    def at(self, x: float, p: float) -> float:
        i = int(round((p - self.p_axis.min) / self.p_axis.step))
        j = int(round((x - self.x_axis.min) / self.x_axis.step))
        return float(self.values[i, j])

    def to_text(self) -> str:
        xa, pa = self.x_axis, self.p_axis
        out = [f"# x: {xa.min!r} {xa.step!r} {xa.count}", f"# p: {pa.min!r} {pa.step!r} {pa.count}"]
        out += [" ".join(f"{v:.12e}" for v in row) for row in self.values]
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "WignerGrid":
        lines = text.splitlines()
        ax = []
        for ln in lines[:2]:
            _, rest = ln.split(":", 1)
            mn, st, ct = rest.split()
            ax.append(GridAxis(float(mn), float(st), int(ct)))
        vals = np.array([ln.split() for ln in lines[2:] if ln.strip()], dtype=float)
        return cls(ax[0], ax[1], vals)


@dataclass(frozen=True)
class PhotonStatistics:
    pmf: np.ndarray
    mean: float
    variance: float
    mandel_q: float


# ---------------------------------------------------------------------------
# helpers


def _as_operator(state) -> CoherentOperatorMix:
    if isinstance(state, CoherentOperatorMix):
        return state
    if isinstance(state, CoherentSuperposition):
        return state.to_operator()
    raise TypeError(f"unsupported state type {type(state).__name__}")


def trace(op: CoherentOperatorMix) -> complex:
    return complex(np.sum(op.coeffs * op.term_overlaps()))


def _partial_overlaps(op: CoherentOperatorMix, keep: Sequence[int]) -> np.ndarray:
    """Product over traced-out modes of <beta_t|alpha_t> (log form)."""
    drop = [m for m in range(op.modes) if m not in set(keep)]
    if not drop:
        return np.zeros(op.coeffs.size, dtype=complex)
    a, b = op.kets[:, drop], op.bras[:, drop]
    return np.sum(b.conj() * a - 0.5 * np.abs(a) ** 2 - 0.5 * np.abs(b) ** 2, axis=1)


def _unique_rows(*arrays: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Stack amplitude arrays, deduplicate rows, and return index maps."""
    stacked = np.concatenate(arrays, axis=0)
    key = np.round(np.concatenate([stacked.real, stacked.imag], axis=1), 14)
    _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    uniq = stacked[first]
    maps, start = [], 0
    for arr in arrays:
        maps.append(inverse[start:start + arr.shape[0]])
        start += arr.shape[0]
    return uniq, maps


def _orthonormal_frame(gram: np.ndarray, cutoff: float = GRAM_CUTOFF) -> np.ndarray:
    """Columns W with W^dag G W = 1 on the numerically resolved span."""
    lam, u = np.linalg.eigh(0.5 * (gram + gram.conj().T))
    keep = lam > cutoff * max(lam.max(), 1e-300)
    return u[:, keep] / np.sqrt(lam[keep])


def _span_representation(op: CoherentOperatorMix, modes: Sequence[int] | None = None):
    """Express op (optionally reduced to `modes`) on the orthonormalized span of its amplitudes.

    Returns the density matrix in that frame, the frame W, the unique
    amplitude vectors and their Gram matrix.
    """
    keep = list(range(op.modes)) if modes is None else list(modes)
    coeff = op.coeffs * np.exp(_partial_overlaps(op, keep))
    kets, bras = op.kets[:, keep], op.bras[:, keep]
    vecs, (ik, ib) = _unique_rows(kets, bras)
    n = vecs.shape[0]
    r = np.zeros((n, n), dtype=complex)
    np.add.at(r, (ik, ib), coeff)
    g = np.exp(log_overlap_matrix(vecs, vecs))
    w = _orthonormal_frame(g)
    rho = w.conj().T @ g @ r @ g @ w
    return 0.5 * (rho + rho.conj().T), w, vecs, g


def _require_hermitian(op: CoherentOperatorMix, tol: float = 1e-8):
    d = op.hermiticity_defect()
    if d > tol:
        raise StructureError(f"operator is not Hermitian (relative defect {d:.2e})")


# ---------------------------------------------------------------------------
# Wigner function


def wigner(state, mode: int = 0, x_axis: GridAxis | None = None, p_axis: GridAxis | None = None) -> WignerGrid:
    """Wigner function of one mode, with all other modes traced out.

    Parameters
    ----------
    state : CoherentSuperposition or CoherentOperatorMix
    mode : int
        Mode to keep.
    x_axis, p_axis : GridAxis
        Uniform grids.  Default is +-6 with step 0.05.

    Raises
    ------
    ResolutionError
        If either step exceeds 0.5.
    """
    op = _as_operator(state)
    if not 0 <= mode < op.modes:
        raise DimensionError(f"mode {mode} out of range for {op.modes} modes")
    x_axis = x_axis or GridAxis.symmetric(6.0, 0.05)
    p_axis = p_axis or x_axis
    for ax in (x_axis, p_axis):
        if ax.step > 0.5:
            raise ResolutionError(f"grid step {ax.step} exceeds 0.5")
    x = x_axis.points
    p = p_axis.points
    gam = (x[None, :] + 1j * p[:, None]) / np.sqrt(2.0)
    with np.errstate(divide="ignore"):
        base = _partial_overlaps(op, [mode]) + np.log(op.coeffs.astype(complex))
    a = op.kets[:, mode]
    b = op.bras[:, mode]
    base = base + b.conj() * a - 0.5 * np.abs(a) ** 2 - 0.5 * np.abs(b) ** 2
    vals = np.zeros(gam.shape)
    # rows are independent; fixed term order keeps the sum reproducible
    for t in range(a.size):
        if op.coeffs[t] == 0:
            continue
        ex = base[t] - 2.0 * (gam.conj() - b[t].conj()) * (gam - a[t])
        vals += np.exp(ex).real
    return WignerGrid(x_axis, p_axis, vals / np.pi)


# ---------------------------------------------------------------------------
# photon statistics


def _fock_amplitudes(alpha: np.ndarray, n_max: int) -> np.ndarray:
    """<n|alpha> for n = 0..n_max, one row per amplitude."""
    alpha = np.asarray(alpha, dtype=complex).ravel()
    n = np.arange(n_max + 1)
    out = np.zeros((alpha.size, n_max + 1), dtype=complex)
    for i, a in enumerate(alpha):
        if a == 0:
            out[i, 0] = 1.0
            continue
        logmag = -0.5 * abs(a) ** 2 + n * np.log(abs(a)) - 0.5 * gammaln(n + 1)
        out[i] = np.exp(logmag + 1j * n * np.angle(a))
    return out


def _gaussian_fock_diagonal(mu: np.ndarray, v: np.ndarray, n_max: int) -> np.ndarray:
    """Photon-number distribution of a single-mode Gaussian state.

    Uses the generating function G(z) = Tr[rho z^N], a Gaussian integral of the
    Wigner function against the Weyl symbol of z^N:

        G(z) = 2/(1+z) det(I + 2kV)^(-1/2) exp(-k mu^T (I + 2kV)^(-1) mu),
        k = (1 - z)/(1 + z),

    sampled on a circle of radius rho < 1 and inverted by FFT.  The radius keeps
    the rescaling rho^-n below 1e3 while aliasing from n + M is damped by 1e-12.
    """
    nn = n_max + 1
    m = 4 * nn
    rho = np.exp(-np.log(1e3) / max(n_max, 1))
    z = rho * np.exp(2j * np.pi * np.arange(m) / m)
    k = (1 - z) / (1 + z)
    # diagonal frame of V: each factor 1 + 2k lam has positive real part, so the
    # principal square root is the continuous branch
    lam, u = np.linalg.eigh(v)
    mr = u.T @ mu
    f1 = 1 + 2 * k * lam[0]
    f2 = 1 + 2 * k * lam[1]
    quad = mr[0] ** 2 / f1 + mr[1] ** 2 / f2
    sq = np.sqrt(f1) * np.sqrt(f2)
    gen = 2 / (1 + z) / sq * np.exp(-k * quad)
    coeff = np.fft.fft(gen)[:nn] / m
    pmf = np.real(coeff) * rho ** (-np.arange(nn, dtype=float))
    return np.clip(pmf, 0.0, None)


def _stats_from_pmf(pmf: np.ndarray) -> PhotonStatistics:
    n = np.arange(pmf.size)
    mean = float(pmf @ n)
    var = float(pmf @ n**2 - mean**2)
    q = (var - mean) / mean if mean > 0 else 0.0
    return PhotonStatistics(_frozen(pmf), mean, var, q)


def photon_statistics(state, mode: int = 0, n_max: int | None = None) -> PhotonStatistics:
    """Photon-number distribution of one mode.

    Raises
    ------
    TruncationError
        If ``n_max`` is below ten times the mean photon number.
    """
    if isinstance(state, GaussianModeState):
        mu, v = state.mode_block(mode)
        mean = state.mean_photon_number(mode)
        if n_max is None:
            n_max = int(np.ceil(10 * mean)) + 50
        if n_max < 10 * mean:
            raise TruncationError(f"n_max={n_max} below 10 x mean photon number {mean:.3g}")
        return _stats_from_pmf(_gaussian_fock_diagonal(mu, v, n_max))

    op = _as_operator(state)
    if not 0 <= mode < op.modes:
        raise DimensionError(f"mode {mode} out of range")
    ov = np.exp(_partial_overlaps(op, [mode]))
    tr = op.term_overlaps()
    a = op.kets[:, mode]
    b = op.bras[:, mode]
    mean = float(np.real(np.sum(op.coeffs * tr * b.conj() * a)))
    if n_max is None:
        n_max = int(np.ceil(10 * mean)) + 50
    if n_max < 10 * mean:
        raise TruncationError(f"n_max={n_max} below 10 x mean photon number {mean:.3g}")
    fa = _fock_amplitudes(a, n_max)
    fb = _fock_amplitudes(b, n_max)
    pmf = np.real(np.sum((op.coeffs * ov)[:, None] * fa * fb.conj(), axis=0))
    return _stats_from_pmf(np.clip(pmf, 0.0, None))


# ---------------------------------------------------------------------------
# loss, purity, QFI


def apply_loss(state, eta: float) -> CoherentOperatorMix:
    """Pure-loss (beam splitter) channel with transmissivity eta on every mode.

    Each dyad |a><b| maps to exp[(1-eta)(a.b* - |a|^2/2 - |b|^2/2)] |sqrt(eta) a><sqrt(eta) b|.
    """
    if not (0.0 <= eta <= 1.0) or not np.isfinite(eta):
        raise DomainError(f"transmissivity {eta} outside [0, 1]")
    op = _as_operator(state)
    if eta == 1.0:
        return op
    a, b = op.kets, op.bras
    lg = (1.0 - eta) * np.sum(b.conj() * a - 0.5 * np.abs(a) ** 2 - 0.5 * np.abs(b) ** 2, axis=1)
    s = np.sqrt(eta)
    return CoherentOperatorMix(op.coeffs * np.exp(lg), s * a, s * b)


def purity(op) -> float:
    """Tr(rho^2) from pairwise coherent overlaps.

    Raises
    ------
    StructureError
        If the operator is not Hermitian.
    """
    op = _as_operator(op)
    _require_hermitian(op)
    c = op.coeffs
    bk = np.exp(log_overlap_matrix(op.bras, op.kets))
    val = np.sum(np.outer(c, c) * bk * bk.T)
    tr = trace(op).real
    return float(val.real / tr**2)


def _number_elements(vecs: np.ndarray, g: np.ndarray, mode: int | None):
    """Matrix elements <v_i|N|v_j> and <v_i|N^2|v_j> for N total or single-mode number."""
    sel = vecs if mode is None else vecs[:, [mode]]
    x = sel.conj()[:, None, :] * sel[None, :, :]
    s1 = x.sum(axis=2)
    n1 = g * s1
    n2 = g * (s1**2 + s1)
    return n1, n2


def qfi_phase(state, mode: int | None = None) -> float:
    """Quantum Fisher information for a phase imprinted by exp(-i theta N).

    ``N`` is the total photon number, or that of ``mode`` if given.  Pure
    states give 4 Var(N).  Mixed states are diagonalized on the orthonormalized
    span of their coherent components (eigenvalues of the Gram matrix below
    1e-12 of the largest are discarded) and the usual eigen-decomposition formula
    is applied, including the leakage of N out of that span.
    """
    if isinstance(state, CoherentSuperposition):
        g = state.gram()
        n1, n2 = _number_elements(state.amplitudes, g, mode)
        w = state.weights
        norm = float(np.real(w.conj() @ g @ w))
        m1 = np.real(w.conj() @ n1 @ w) / norm
        m2 = np.real(w.conj() @ n2 @ w) / norm
        return float(4.0 * (m2 - m1**2))
    op = _as_operator(state)
    _require_hermitian(op)
    rho, w, vecs, g = _span_representation(op)
    rho = rho / np.trace(rho).real
    lam, u = np.linalg.eigh(rho)
    lam = np.clip(lam, 0.0, None)
    n1, n2 = _number_elements(vecs, g, mode)
    basis = w @ u  # eigenvectors of rho in the amplitude basis
    nab = basis.conj().T @ n1 @ basis
    n2aa = np.real(np.einsum("ia,ij,ja->a", basis.conj(), n2, basis))
    lsum = lam[:, None] + lam[None, :]
    ldiff = lam[:, None] - lam[None, :]
    mask = lsum > 1e-14
    fin = np.zeros_like(lsum)
    fin[mask] = ldiff[mask] ** 2 / lsum[mask]
    inside = 2.0 * np.sum(fin * np.abs(nab) ** 2)
    leak = n2aa - np.sum(np.abs(nab) ** 2, axis=1)
    outside = 4.0 * np.sum(lam * np.clip(leak, 0.0, None))
    return float(inside + outside)


# ---------------------------------------------------------------------------
# Gaussian measures


def symplectic_form(modes: int) -> np.ndarray:
    return np.kron(np.eye(modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    m = cov.shape[0] // 2
    if m == 0:
        return np.zeros(0)
    ev = np.linalg.eigvals(1j * symplectic_form(m) @ cov)
    return np.sort(np.abs(ev.real))[::2]


def squeezing_parameters(state: GaussianModeState, mode: int = 0) -> tuple[float, float]:
    """Squeezing r = -ln(2 lambda_min)/2 of one mode and the minor-axis angle in [0, pi)."""
    _, v = state.mode_block(mode)
    lam, vec = np.linalg.eigh(v)
    r = max(0.0, -0.5 * np.log(2.0 * lam[0]))
    ang = float(np.arctan2(vec[1, 0], vec[0, 0]) % np.pi)
    if np.isclose(ang, np.pi, atol=1e-12):
        ang = 0.0
    return float(r), ang


def log_negativity(state: GaussianModeState, partition: Sequence[int]) -> float:
    """Gaussian logarithmic negativity between ``partition`` and the remaining modes."""
    part = sorted(set(int(m) for m in partition))
    if not part or len(part) >= state.modes:
        raise DimensionError("both sides of the bipartition must be nonempty")
    flip = np.ones(2 * state.modes)
    for m in part:
        flip[2 * m + 1] = -1.0
    cov_pt = flip[:, None] * state.covariance * flip[None, :]
    nu = symplectic_eigenvalues(cov_pt)
    return float(np.sum(np.clip(-np.log(2.0 * nu), 0.0, None)))


def entanglement_entropy(state: CoherentSuperposition, partition: Sequence[int]) -> float:
    """Von Neumann entropy (natural log) of the reduced state on ``partition``."""
    part = sorted(set(int(m) for m in partition))
    if any(not 0 <= m < state.modes for m in part):
        raise DimensionError("partition mode out of range")
    if not part or len(part) == state.modes:
        return 0.0
    rho, *_ = _span_representation(state.to_operator(), part)
    lam = np.linalg.eigvalsh(rho)
    lam = lam / lam.sum()
    lam = lam[lam > 1e-15]
    return float(max(0.0, -np.sum(lam * np.log(lam))))
