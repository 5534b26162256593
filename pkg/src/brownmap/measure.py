"""Laws of the non-negative initial condition and the integrals taken against them.

A :class:`Law` is a probability measure on ``[0, inf)`` made of point masses and
polynomial density pieces.  Every quantity the rest of the package needs from the
law (moment integrals, the Herglotz and Cauchy transforms, the log potential) is
computed here: atoms are summed exactly, density pieces go through adaptive
Gauss-Kronrod quadrature (QUADPACK via :func:`scipy.integrate.quad`).

Infinite values are returned as IEEE ``inf``/``-inf`` floats.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate, optimize

from .errors import DomainError, LawError

MASS_TOL = 1e-12
LOAD_MASS_TOL = 1e-9
QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-10
QUAD_LIMIT = 200
QUAD_WARN_REL = 1e-7
# relative size below which a polynomial remainder counts as zero
_REMAINDER_TOL = 1e-10


@dataclass(frozen=True)
class DensityPiece:
    """Polynomial density ``sum(coeffs[j] * x**j)`` on ``[a, b]``."""

    a: float
    b: float
    coeffs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not (self.a >= 0.0 and self.b > self.a and math.isfinite(self.b)):
            raise LawError(f"density interval must satisfy 0 <= a < b < inf, got [{self.a}, {self.b}]")
        if not self.coeffs:
            raise LawError("density piece needs at least one coefficient")
        if self.min_value() < -1e-12 * max(1.0, max(abs(c) for c in self.coeffs)):
            raise LawError(f"density on [{self.a}, {self.b}] takes negative values")

    def __call__(self, x):
        return P.polyval(x, self.coeffs)

    def min_value(self) -> float:
        candidates = [self.a, self.b]
        if len(self.coeffs) > 2:
            for root in P.polyroots(P.polyder(self.coeffs)):
                if abs(root.imag) < 1e-12 and self.a < root.real < self.b:
                    candidates.append(root.real)
        return float(min(self(np.array(candidates))))

    def integral(self, lo: float | None = None, hi: float | None = None) -> float:
        lo = self.a if lo is None else min(max(lo, self.a), self.b)
        hi = self.b if hi is None else min(max(hi, self.a), self.b)
        anti = P.polyint(self.coeffs)
        return float(P.polyval(hi, anti) - P.polyval(lo, anti))

    def scaled(self, factor: float) -> "DensityPiece":
        return DensityPiece(self.a, self.b, tuple(c * factor for c in self.coeffs))


@dataclass(frozen=True)
class Law:
    """Probability measure on [0, inf): atoms ``(x, w)`` plus polynomial density pieces."""

    atoms: tuple[tuple[float, float], ...] = ()
    densities: tuple[DensityPiece, ...] = ()

    def __post_init__(self):
        merged: dict[float, float] = {}
        for x, w in self.atoms:
            x, w = float(x), float(w)
            if not (x >= 0.0 and math.isfinite(x)):
                raise LawError(f"atom location must be finite and >= 0, got {x}")
            if not w > 0.0:
                raise LawError(f"atom weight must be > 0, got {w}")
            merged[x] = merged.get(x, 0.0) + w
        object.__setattr__(self, "atoms", tuple(sorted(merged.items())))
        pieces = tuple(p if isinstance(p, DensityPiece) else DensityPiece(*p) for p in self.densities)
        object.__setattr__(self, "densities", tuple(sorted(pieces, key=lambda p: (p.a, p.b))))
        if not self.atoms and not self.densities:
            raise LawError("law has no mass")
        mass = self.total_mass()
        if abs(mass - 1.0) > MASS_TOL:
            raise LawError(f"total mass is {mass!r}, expected 1")
        if not self.densities and all(x == 0.0 for x, _ in self.atoms):
            raise LawError("the law must not be the point mass at 0")

    # -- constructors -----------------------------------------------------

    @classmethod
    def delta(cls, x: float = 1.0) -> "Law":
        return cls(atoms=((x, 1.0),))

    @classmethod
    def point_masses(cls, pairs) -> "Law":
        """Law from ``[(x, w), ...]`` or a ``{x: w}`` mapping."""
        if isinstance(pairs, dict):
            pairs = pairs.items()
        return cls(atoms=tuple(pairs))

    @classmethod
    def uniform(cls, a: float, b: float) -> "Law":
        return cls(densities=(DensityPiece(a, b, (1.0 / (b - a),)),))

    @classmethod
    def from_dict(cls, data: dict) -> "Law":
        """Build from the JSON layout, rescaling if the mass is within 1e-9 of 1."""
        try:
            atoms = [(float(a["x"]), float(a["w"])) for a in data.get("atoms", [])]
            pieces = [DensityPiece(d["a"], d["b"], tuple(d["coeffs"])) for d in data.get("densities", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise LawError(f"malformed law description: {exc}") from exc
        mass = sum(w for _, w in atoms) + sum(p.integral() for p in pieces)
        if not math.isfinite(mass) or abs(mass - 1.0) > LOAD_MASS_TOL:
            raise LawError(f"total mass is {mass!r}, expected 1 within {LOAD_MASS_TOL}")
        return cls(atoms=tuple((x, w / mass) for x, w in atoms),
                   densities=tuple(p.scaled(1.0 / mass) for p in pieces))

    @classmethod
    def from_json(cls, path) -> "Law":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise LawError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "atoms": [{"x": x, "w": w} for x, w in self.atoms],
            "densities": [{"a": p.a, "b": p.b, "coeffs": list(p.coeffs)} for p in self.densities],
        }

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    # -- basic structure --------------------------------------------------

    def total_mass(self) -> float:
        return math.fsum([w for _, w in self.atoms] + [p.integral() for p in self.densities])

    @cached_property
    def atom_x(self) -> np.ndarray:
        return np.array([x for x, _ in self.atoms], dtype=float)

    @cached_property
    def atom_w(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms], dtype=float)

    @property
    def is_atomic(self) -> bool:
        return not self.densities

    def mass_at(self, x: float) -> float:
        return dict(self.atoms).get(float(x), 0.0)

    @property
    def support_max(self) -> float:
        return max([x for x, _ in self.atoms] + [p.b for p in self.densities])

    @property
    def support_min_positive(self) -> float:
        """Smallest positive point of the support (0 if a density piece starts at 0)."""
        if any(p.a == 0.0 for p in self.densities):
            return 0.0
        return min([x for x, _ in self.atoms if x > 0] + [p.a for p in self.densities])

    def zero_in_support(self) -> bool:
        return self.mass_at(0.0) > 0 or any(p.a == 0.0 for p in self.densities)

    def zero_is_isolated_atom(self) -> bool:
        return self.mass_at(0.0) > 0 and not any(p.a == 0.0 for p in self.densities)

    def breakpoints(self) -> list[float]:
        pts = {x for x, _ in self.atoms}
        for p in self.densities:
            pts.update((p.a, p.b))
        return sorted(pts)


# -- integration helpers -------------------------------------------------------

def _quad(func, a, b, points=None, complex_func=False):
    pts = sorted(p for p in set(points or ()) if a < p < b) or None
    limit = max(QUAD_LIMIT, 4 * len(pts)) if pts else QUAD_LIMIT
    # Near-singular integrands (lambda just off the support) often trip QUADPACK's
    # roundoff heuristics while the returned error estimate is still small; only
    # warn when the estimate itself is poor.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(func, a, b, points=pts, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL,
                                  limit=limit, complex_func=complex_func)
    if abs(err) > QUAD_WARN_REL * max(abs(val), 1.0):
        warnings.warn(f"quadrature error estimate {abs(err):.2e} on [{a}, {b}]", integrate.IntegrationWarning,
                      stacklevel=3)
    return val


def _split_points(x: float, width: float, a: float, b: float) -> list[float]:
    """``x`` plus a geometric ladder ``x +- width 10^j`` inside ``[a, b]``.

    A kernel of width ``width`` centred at ``x`` then occupies a bounded number of
    subintervals at every scale, which QUADPACK handles reliably.
    """
    pts = [x]
    if width > 0 and math.isfinite(width):
        step = width
        span = b - a
        while step < span:
            pts += [x - step, x + step]
            step *= 10.0
    return pts


def _density_integral(law: Law, func, x_proj: float | None = None, complex_func=False, width: float = 0.0):
    """Sum over density pieces of the integral of ``func(xi) * g(xi)``.

    ``x_proj`` is the projection of a nearby singularity and ``width`` its distance
    from the real axis; both only guide where the interval is split.
    """
    total = 0j if complex_func else 0.0
    for piece in law.densities:
        pts = None if x_proj is None else _split_points(x_proj, width, piece.a, piece.b)
        total += _quad(lambda xi, piece=piece: func(xi) * piece(xi), piece.a, piece.b,
                       points=pts, complex_func=complex_func)
    return total


def _inverse_square_integral(ua: float, ub: float, c2: float) -> float:
    """``int_ua^ub du / (u^2 + c2)``; with ``c2 = 0`` the interval must avoid 0."""
    if c2 == 0.0:
        return (ub - ua) / (ua * ub)
    c = math.sqrt(c2)
    # difference of arctangents written as one atan2, exact also for tiny c
    return math.atan2(c * (ub - ua), c2 + ua * ub) / c


def _taylor_shift(coeffs, x: float) -> np.ndarray:
    """Coefficients of ``h(u + x)`` in ``u``, computed in exact rational arithmetic.

    Near a root of ``h`` (a density vanishing at a cusp) the float Taylor shift
    loses every digit of the constant term; exact arithmetic keeps it correctly rounded.
    """
    xf = Fraction(x)
    cs = [Fraction(float(c)) for c in coeffs]
    n = len(cs)
    out = []
    for k in range(n):
        out.append(float(sum(cs[m] * math.comb(m, k) * xf ** (m - k) for m in range(k, n))))
    return np.array(out)


def _kernel_piece(piece: DensityPiece, num, x: float, c2: float) -> float:
    """``int num(xi) g(xi) / ((xi - x)^2 + c2) dxi`` over one density piece.

    When the kernel's peak sits on or near the piece, the first two Taylor terms of
    ``h = num * g`` at ``x`` are integrated in closed form and quadrature only sees
    the bounded remainder ``u^2 r(u) / (u^2 + c2)``.
    """
    a, b = piece.a, piece.b
    h = P.polymul(piece.coeffs, num)
    span = b - a
    d = max(a - x, x - b, 0.0)
    if math.hypot(d, math.sqrt(c2)) >= span:
        return _quad(lambda xi: P.polyval(xi, h) / ((xi - x) ** 2 + c2), a, b)
    g = np.append(_taylor_shift(h, x), [0.0, 0.0])
    ua, ub = a - x, b - x
    total = g[0] * _inverse_square_integral(ua, ub, c2)
    if g[1] != 0.0:
        total += 0.5 * g[1] * math.log((ub * ub + c2) / (ua * ua + c2))
    rest = np.trim_zeros(g[2:], "b")
    if rest.size:
        pts = _split_points(0.0, math.sqrt(c2), ua, ub)
        total += _quad(lambda u: u * u / (u * u + c2) * P.polyval(u, rest), ua, ub, points=pts)
    return total


def _kernel_integral(law: Law, num, x: float, c2: float) -> float:
    """Sum over density pieces of ``int num(xi) g(xi) / ((xi - x)^2 + c2)``; ``num`` holds
    polynomial coefficients in increasing powers."""
    return math.fsum(_kernel_piece(piece, num, x, c2) for piece in law.densities)


def support_distance(law: Law, lam) -> float:
    """Euclidean distance from ``lam`` to the closed support of ``law``."""
    lam = complex(lam)
    x, y = lam.real, abs(lam.imag)
    best = math.inf
    if law.atoms:
        best = float(np.min(np.hypot(law.atom_x - x, y)))
    for p in law.densities:
        dx = max(p.a - x, 0.0, x - p.b)
        best = min(best, math.hypot(dx, y))
    return best


def _check_k(k):
    if k not in (0, 2):
        raise DomainError(f"k must be 0 or 2, got {k}")


def _moment_on_support(law: Law, x: float, k: int) -> float:
    """``int xi^k / (xi - x)^2 dmu`` for real ``x`` on the support; may be ``inf``."""
    total = 0.0
    for xa, w in law.atoms:
        num = xa ** k
        if xa == x:
            if num == 0.0:
                continue
            return math.inf
        total += w * num / (xa - x) ** 2
    for piece in law.densities:
        if piece.a <= x <= piece.b:
            h = P.polymul(piece.coeffs, [0.0] * k + [1.0])
            q, rem = P.polydiv(h, [x * x, -2.0 * x, 1.0])
            rem = np.append(rem, [0.0, 0.0])[:2]
            scale = max(float(np.max(np.abs(h))), 1e-300) * max(1.0, piece.b) ** (len(h) - 1)
            # h(xi) = q(xi) (xi - x)^2 + rem0 + rem1 xi; finite iff the remainder vanishes
            if abs(rem[0] + rem[1] * x) > _REMAINDER_TOL * scale or abs(rem[1]) > _REMAINDER_TOL * scale:
                return math.inf
            anti = P.polyint(q)
            total += float(P.polyval(piece.b, anti) - P.polyval(piece.a, anti))
        else:
            total += _quad(lambda xi, piece=piece: xi ** k * piece(xi) / (xi - x) ** 2, piece.a, piece.b)
    return total


def moment_pk(law: Law, lambda0, eps0: float, k: int) -> float:
    """``p_k = int xi^k / (|xi - lambda0|^2 + eps0) dmu(xi)`` for k in {0, 2}.

    ``xi^0`` is read as 1, also at ``xi = 0``.  With ``eps0 = 0`` and ``lambda0`` on the
    support the integral may diverge, and ``inf`` is returned.
    """
    _check_k(k)
    lam = complex(lambda0)
    d = support_distance(law, lam)
    if eps0 < 0 and eps0 <= -d * d:
        raise DomainError(f"eps0={eps0} must exceed -dist(lambda0, supp)^2 = {-d * d}")
    if eps0 == 0 and d == 0:
        return _moment_on_support(law, lam.real, k)
    x, y2e = lam.real, lam.imag ** 2 + eps0
    total = 0.0
    if law.atoms:
        xs = law.atom_x
        total = float(np.sum(law.atom_w * xs ** k / ((xs - x) ** 2 + y2e)))
    if law.densities:
        total += _kernel_integral(law, [0.0] * k + [1.0], x, y2e)
    return total


@dataclass(frozen=True)
class MomentPair:
    p0: float
    p2: float
    lambda0: complex
    eps0: float


def moment_pair(law: Law, lambda0, eps0: float = 0.0) -> MomentPair:
    """Both moment integrals ``p_0`` and ``p_2`` at one point."""
    lam = complex(lambda0)
    if law.is_atomic:
        d = support_distance(law, lam)
        if eps0 < 0 and eps0 <= -d * d:
            raise DomainError(f"eps0={eps0} must exceed -dist(lambda0, supp)^2 = {-d * d}")
        if not (eps0 == 0 and d == 0):
            xs, ws = law.atom_x, law.atom_w
            inv = ws / ((xs - lam.real) ** 2 + (lam.imag ** 2 + eps0))
            return MomentPair(float(np.sum(inv)), float(np.sum(inv * xs * xs)), lam, eps0)
    return MomentPair(moment_pk(law, lam, eps0, 0), moment_pk(law, lam, eps0, 2), lam, eps0)


def initial_momenta(law: Law, lambda0, eps0: float) -> tuple[float, float, float]:
    """Initial ``(p_rho, p_theta, p_eps)``: the log-polar derivatives of the initial log potential."""
    lam = complex(lambda0)
    if lam == 0:
        raise DomainError("initial momenta need lambda0 != 0 (log-polar coordinates)")
    d = support_distance(law, lam)
    if not eps0 + d * d > 0:
        raise DomainError(f"eps0={eps0} must exceed -dist(lambda0, supp)^2 = {-d * d}")
    x, y = lam.real, lam.imag
    r2 = x * x + y * y
    y2e = y * y + eps0

    def parts(xi):
        den = (xi - x) ** 2 + y2e
        return (2.0 * r2 - 2.0 * xi * x) / den, 2.0 * xi * y / den, 1.0 / den

    p_rho = p_theta = p_eps = 0.0
    if law.atoms:
        a, b, c = parts(law.atom_x)
        w = law.atom_w
        p_rho, p_theta, p_eps = float(w @ a), float(w @ b), float(w @ c)
    if law.densities:
        p_rho += _kernel_integral(law, [2.0 * r2, -2.0 * x], x, y2e)
        p_theta += _kernel_integral(law, [0.0, 2.0 * y], x, y2e)
        p_eps += _kernel_integral(law, [1.0], x, y2e)
    return p_rho, p_theta, p_eps


def herglotz_integral(law: Law, lam) -> complex:
    """``int (xi + lam) / (xi - lam) dmu(xi)``.

    At ``lam = 0`` with 0 an isolated atom, the atom contributes ``-mu({0})``.
    """
    lam = complex(lam)
    if support_distance(law, lam) == 0:
        if lam == 0 and law.zero_is_isolated_atom():
            return complex(1.0 - 2.0 * law.mass_at(0.0))
        raise DomainError(f"Herglotz integral undefined on the support (lam={lam})")
    total = 0j
    if law.atoms:
        xs = law.atom_x
        total = complex(np.sum(law.atom_w * (xs + lam) / (xs - lam)))
    if law.densities:
        # (xi + lam) / (xi - lam) = (xi^2 - |lam|^2 + 2i y xi) / |xi - lam|^2
        x, y = lam.real, lam.imag
        r2 = x * x + y * y
        total += complex(_kernel_integral(law, [-r2, 0.0, 1.0], x, y * y),
                         _kernel_integral(law, [0.0, 2.0 * y], x, y * y))
    return total


def herglotz_derivative(law: Law, lam) -> complex:
    """``int 2 xi / (xi - lam)^2 dmu(xi)``, the derivative of :func:`herglotz_integral`."""
    lam = complex(lam)
    if support_distance(law, lam) == 0 and not (lam == 0 and law.zero_is_isolated_atom()):
        raise DomainError(f"Herglotz integral undefined on the support (lam={lam})")
    total = 0j
    if law.atoms:
        xs = law.atom_x
        nz = xs != 0.0
        total = complex(np.sum(law.atom_w[nz] * 2.0 * xs[nz] / (xs[nz] - lam) ** 2))
    if law.densities:
        total += _density_integral(law, lambda xi: 2.0 * xi / (xi - lam) ** 2, x_proj=lam.real, complex_func=True,
                                   width=abs(lam.imag))
    return total


def cauchy_kernel(law: Law, lam) -> complex:
    """``int 1 / (lam - xi) dmu(xi)`` for ``lam`` off the support."""
    lam = complex(lam)
    if support_distance(law, lam) == 0:
        raise DomainError(f"Cauchy transform undefined on the support (lam={lam})")
    total = 0j
    if law.atoms:
        total = complex(np.sum(law.atom_w / (lam - law.atom_x)))
    if law.densities:
        # 1 / (lam - xi) = (x - xi - i y) / |xi - lam|^2
        x, y = lam.real, lam.imag
        total += complex(_kernel_integral(law, [x, -1.0], x, y * y), _kernel_integral(law, [-y], x, y * y))
    return total


def log_potential(law: Law, lam, eps: float = 0.0) -> float:
    """``int log(|xi - lam|^2 + eps) dmu(xi)``; ``-inf`` when eps = 0 and lam is an atom."""
    if eps < 0:
        raise DomainError(f"eps must be >= 0, got {eps}")
    lam = complex(lam)
    x, y2e = lam.real, lam.imag ** 2 + eps
    total = 0.0
    if law.atoms:
        vals = (law.atom_x - x) ** 2 + y2e
        if np.any(vals == 0.0):
            return -math.inf
        total = float(law.atom_w @ np.log(vals))
    if law.densities:
        total += _density_integral(law, lambda xi: np.log((xi - x) ** 2 + y2e), x_proj=x,
                                   width=math.sqrt(y2e))
    return total


# -- sampling ----------------------------------------------------------------

def _cdf_left(law: Law, x: float) -> float:
    """``mu([0, x))``."""
    return (sum(w for xa, w in law.atoms if xa < x)
            + sum(p.integral(p.a, x) for p in law.densities if x > p.a))


def quantile(law: Law, u: float) -> float:
    """Generalized inverse CDF ``inf{x : mu([0, x]) >= u}`` for ``u`` in (0, 1)."""
    slack = 1e-14
    bps = law.breakpoints()
    prev = None
    for bp in bps:
        left = _cdf_left(law, bp)
        if left >= u - slack and prev is not None:
            # F(prev) < u <= F(bp-): the quantile sits inside a density stretch
            if left - u <= slack:
                return bp
            return optimize.brentq(lambda z: _cdf_left(law, z) - u, prev, bp, xtol=1e-15, rtol=1e-15)
        if left + law.mass_at(bp) >= u - slack:
            return bp
        prev = bp
    return bps[-1]


def sample(law: Law, n: int, mode: str = "quantile", seed=None) -> np.ndarray:
    """``n`` values distributed according to ``law``.

    ``quantile`` mode is deterministic: the points ``F^-1((j - 1/2) / n)``.
    ``iid`` mode draws pseudo-random values with ``numpy.random.default_rng(seed)``.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if mode == "quantile":
        us = (np.arange(n) + 0.5) / n
    elif mode == "iid":
        us = np.random.default_rng(seed).random(n)
    else:
        raise DomainError(f"unknown sampling mode {mode!r}")
    if law.is_atomic:
        cum = np.cumsum(law.atom_w)
        idx = np.searchsorted(cum, us - 1e-14, side="left")
        return law.atom_x[np.minimum(idx, len(cum) - 1)]
    return np.array([quantile(law, u) for u in us])
