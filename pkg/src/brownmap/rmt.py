"""Random-matrix checks: eigenvalues of X B with X diagonal and B a discretized
free multiplicative Brownian motion b_{s,tau}.

Two discretizations of B are available.  ``product`` multiplies ``k`` factors
``I + sqrt(s/k) Z_j`` with Ginibre ``Z_j`` (only for ``tau = s``).  ``euler``
steps ``B <- B (I + i dW - (s - tau)/2 dr)`` where ``dW`` is a rotated elliptic
increment ``sqrt(dr) e^{i theta} (a X + i b Y)`` with X, Y independent GUE.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError
from .mapping import _cached_boundary, check_params, in_D_many
from .measure import Law, sample

ZERO_TOL = 1e-10
RESIDUAL_TOL = 1e-8


def rotated_elliptic_params(s: float, tau) -> tuple[float, float, float]:
    """``(a, b, theta)`` with ``a^2 + b^2 = s`` and ``e^{2i theta}(a^2 - b^2) = s - tau``."""
    check_params(s, tau)
    tau = complex(tau)
    d = min(abs(tau - s), s)
    a = math.sqrt(0.5 * (s + d))
    b = math.sqrt(max(0.5 * (s - d), 0.0))
    theta = 0.0 if tau == s else 0.5 * cmath.phase(s - tau)
    return a, b, theta


def _dtypes(precision: str):
    if precision == "double":
        return np.float64, np.complex128
    if precision == "single":
        return np.float32, np.complex64
    raise DomainError(f"precision must be 'double' or 'single', got {precision!r}")


def gue(N: int, rng, precision: str = "double") -> np.ndarray:
    """Hermitian matrix with off-diagonal complex variance 1/N and real diagonal variance 1/N."""
    rdt, cdt = _dtypes(precision)
    g = rng.standard_normal((N, N), dtype=rdt)
    upper = np.triu(g, 1) + 1j * np.triu(g.T, 1)
    X = (upper + upper.conj().T) / math.sqrt(2 * N)
    X[np.diag_indices(N)] = np.diag(g) / math.sqrt(N)
    return X.astype(cdt, copy=False)


def ginibre(N: int, rng, precision: str = "double") -> np.ndarray:
    """Matrix with iid complex Gaussian entries of variance 1/N."""
    rdt, cdt = _dtypes(precision)
    g = rng.standard_normal((2, N, N), dtype=rdt)
    Z = np.empty((N, N), dtype=cdt)
    Z.real = g[0]
    Z.imag = g[1]
    Z *= 1.0 / math.sqrt(2 * N)
    return Z


def sample_increment(s: float, tau, dt: float, N: int, rng, precision: str = "double") -> np.ndarray:
    """``sqrt(dt) e^{i theta} (a X + i b Y)`` with independent GUE ``X``, ``Y``."""
    if not dt > 0:
        raise DomainError("dt must be positive")
    a, b, theta = rotated_elliptic_params(s, tau)
    W = a * gue(N, rng, precision)
    if b > 0:
        W = W + 1j * b * gue(N, rng, precision)
    return (math.sqrt(dt) * cmath.exp(1j * theta)) * W


def elliptic_increment(s: float, tau, dt: float, N: int, rng, precision: str = "double") -> np.ndarray:
    """Same law as :func:`sample_increment`, drawn from a single Ginibre matrix.

    ``a X + i b Y`` is a centred complex Gaussian matrix determined by
    ``E|W_ij|^2 = s/N``, ``E[W_ij W_ji] = (a^2 - b^2)/N`` and ``E[W_ij conj(W_ji)] = 0``;
    ``((a + b) G + (a - b) G^H) / sqrt(2)`` with Ginibre ``G`` has exactly these
    moments and needs half the Gaussian draws.
    """
    if not dt > 0:
        raise DomainError("dt must be positive")
    a, b, theta = rotated_elliptic_params(s, tau)
    G = ginibre(N, rng, precision)
    W = (a + b) * G
    W += (a - b) * G.conj().T
    W *= math.sqrt(0.5 * dt) * cmath.exp(1j * theta)
    return W


@dataclass(frozen=True)
class SimConfig:
    N: int
    steps: int
    s: float
    tau: complex
    scheme: str = "euler"
    seed: int = 0
    x_mode: str = "quantile"
    precision: str = "double"

    def __post_init__(self):
        object.__setattr__(self, "tau", complex(self.tau))
        check_params(self.s, self.tau)
        if self.N < 2:
            raise DomainError("N must be >= 2")
        if self.steps < 1:
            raise DomainError("steps must be >= 1")
        if self.scheme not in ("product", "euler"):
            raise DomainError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "product" and self.tau != self.s:
            raise DomainError("the product scheme needs tau = s")
        if self.x_mode not in ("iid", "quantile"):
            raise DomainError(f"unknown x_mode {self.x_mode!r}")
        _dtypes(self.precision)


def _streams(seed):
    """Independent generators for X and for B."""
    sx, sb = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(sx), np.random.default_rng(sb)


def simulate_b(config: SimConfig) -> np.ndarray:
    """One sample of the discretized ``b_{s,tau}`` at time 1."""
    _, rng = _streams(config.seed)
    N, k = config.N, config.steps
    _, cdt = _dtypes(config.precision)
    B = np.eye(N, dtype=cdt)
    if config.scheme == "product":
        c = math.sqrt(config.s / k)
        for _ in range(k):
            B += c * (B @ ginibre(N, rng, config.precision))
        return B
    dr = 1.0 / k
    keep = 1.0 - 0.5 * (config.s - config.tau) * dr
    for _ in range(k):
        # B <- B (I + i dW - (s - tau)/2 dr I)
        dW = elliptic_increment(config.s, config.tau, dr, N, rng, config.precision)
        dW *= 1j
        BdW = B @ dW
        B *= keep
        B += BdW
    return B


def sample_x(law: Law, config: SimConfig) -> np.ndarray:
    rng, _ = _streams(config.seed)
    return sample(law, config.N, mode=config.x_mode, seed=rng)


def _check_residuals(A: np.ndarray, eigs: np.ndarray, n_check: int = 3) -> None:
    n = A.shape[0]
    norm = np.linalg.norm(A, 2) if n <= 200 else np.linalg.norm(A, "fro")
    rng = np.random.default_rng(n)
    for lam in eigs[np.linspace(0, len(eigs) - 1, min(n_check, len(eigs))).astype(int)]:
        shift = lam + 1e-10 * max(norm, 1.0)
        v = rng.standard_normal(n) + 0j
        try:
            for _ in range(3):
                v = np.linalg.solve(A - shift * np.eye(n), v)
                v /= np.linalg.norm(v)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"inverse iteration failed at {lam}: {exc}") from exc
        resid = np.linalg.norm(A @ v - lam * v)
        if not resid <= RESIDUAL_TOL * max(norm, 1e-300):
            raise ConvergenceError(f"eigenpair residual {resid:.3e} exceeds {RESIDUAL_TOL:g} ||A|| at {lam}")


def spectrum(x: np.ndarray, B: np.ndarray, check: bool = True) -> np.ndarray:
    """Eigenvalues of ``diag(x) B`` in complex128.

    Rows of ``diag(x) B`` with ``x_i = 0`` vanish; permuting them last exposes a
    block-triangular form, so those eigenvalues are exactly 0 and the rest come from
    the block on the nonzero indices.
    """
    x = np.asarray(x, dtype=float)
    B = np.asarray(B)
    if B.ndim != 2 or B.shape[0] != B.shape[1] or B.shape[0] != x.shape[0]:
        raise DomainError("x and B must describe square matrices of the same size")
    nz = np.nonzero(x != 0.0)[0]
    n_zero = x.shape[0] - nz.shape[0]
    A = x[nz, None] * B[np.ix_(nz, nz)].astype(np.complex128)
    if nz.shape[0] == 0:
        return np.zeros(n_zero, dtype=complex)
    try:
        eigs = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue iteration did not converge: {exc}") from exc
    if not np.all(np.isfinite(eigs)):
        raise ConvergenceError("non-finite eigenvalues")
    if check:
        _check_residuals(A, eigs)
    return np.concatenate([eigs, np.zeros(n_zero, dtype=complex)])


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    inside_fraction: float
    zero_count: int
    dilation: float
    s: float = 0.0
    tau: complex = 0j
    inside: np.ndarray = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "N": int(len(self.eigenvalues)),
            "s": self.s,
            "tau": [self.tau.real, self.tau.imag],
            "dilation": self.dilation,
            "inside_fraction": self.inside_fraction,
            "zero_count": self.zero_count,
        }


def containment(eigenvalues, law: Law, s: float, tau, dilation: float = 0.05,
                n_radii: int = 512) -> SpectrumReport:
    """Fraction of eigenvalues in D_{s,tau} dilated by ``dilation`` (0 always admitted)."""
    if dilation < 0:
        raise DomainError("dilation must be >= 0")
    eigs = np.asarray(eigenvalues, dtype=complex)
    tau = complex(tau)
    trace = _cached_boundary(law, float(s), tau, n_radii)
    ok = np.abs(eigs) <= dilation
    if trace.components:
        ok |= trace.distance(eigs) <= dilation
    rest = ~ok
    if np.any(rest):
        ok[rest] = in_D_many(law, s, tau, eigs[rest], n_radii)
    zero_count = int(np.count_nonzero(np.abs(eigs) <= ZERO_TOL))
    frac = float(np.count_nonzero(ok)) / max(len(eigs), 1)
    return SpectrumReport(eigs, frac, zero_count, dilation, float(s), tau, ok)


def run(law: Law, config: SimConfig, dilation: float = 0.05, n_radii: int = 512):
    """Simulate, diagonalize and score one configuration."""
    x = sample_x(law, config)
    B = simulate_b(config)
    eigs = spectrum(x, B)
    return containment(eigs, law, config.s, config.tau, dilation, n_radii)
