"""The map f_alpha, the domains D_{s,tau} and quantities outside them.

``f_alpha(lam) = lam exp((alpha/2) int (xi + lam)/(xi - lam) dmu(xi))``.  With
``alpha = s - tau`` it carries the complement of the closure of Sigma_s one-to-one
onto the complement of D_{s,tau}.  D is traced as the image of the boundary of
Sigma_s; membership uses an even-odd test against that trace, with Newton
inversion of f deciding points too close to the trace to call.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .domain import BoundaryTrace, boundary_sigma, lifetime_T
from .errors import ConsistencyError, DomainError
from .measure import (Law, _kernel_integral, cauchy_kernel, herglotz_derivative, herglotz_integral,
                      support_distance)

NEWTON_MAXITER = 80
# acceptance margin for "outside the closure of Sigma_s": T(z) > s (1 + margin)
CLOSURE_MARGIN = 1e-9


@dataclass(frozen=True)
class DomainParams:
    s: float
    tau: complex

    def __post_init__(self):
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "tau", complex(self.tau))
        check_params(self.s, self.tau)

    @property
    def alpha(self) -> complex:
        return self.s - self.tau


def check_params(s: float, tau) -> None:
    if not s > 0:
        raise DomainError(f"s must be > 0, got {s}")
    if abs(complex(tau) - s) > s * (1 + 1e-12):
        raise DomainError(f"need |tau - s| <= s, got s={s}, tau={tau}")


def _zero_extends(law: Law) -> bool:
    return not law.zero_in_support() or law.zero_is_isolated_atom()


def f_alpha(law: Law, alpha, lam) -> complex:
    """``lam exp((alpha/2) H(lam))``, extended by ``f(0) = 0`` when 0 is not in the support or is an isolated atom."""
    alpha, lam = complex(alpha), complex(lam)
    if lam == 0:
        if _zero_extends(law):
            return 0j
        raise DomainError("f_alpha is undefined at 0 when 0 lies in a density piece")
    return lam * cmath.exp(0.5 * alpha * herglotz_integral(law, lam))


def f_alpha_prime(law: Law, alpha, lam) -> complex:
    """``f'(lam) = f(lam) (1/lam + alpha int xi/(xi - lam)^2 dmu)``."""
    alpha, lam = complex(alpha), complex(lam)
    if lam == 0:
        if not _zero_extends(law):
            raise DomainError("f_alpha is undefined at 0 when 0 lies in a density piece")
        return cmath.exp(0.5 * alpha * herglotz_integral(law, 0j))
    return f_alpha(law, alpha, lam) * (1.0 / lam + 0.5 * alpha * herglotz_derivative(law, lam))


def _f_and_prime(law: Law, alpha: complex, z: complex):
    """``(f(z), f'(z))`` with a loop over atoms for small atomic laws."""
    if law.is_atomic and len(law.atoms) <= 32:
        h = 0j
        dh = 0j
        for x, w in law.atoms:
            if x == z:
                if z != 0:
                    raise DomainError("z on the support")
                h -= w  # isolated atom at 0 contributes -mu({0})
                continue
            q = 1.0 / (x - z)
            h += w * (x + z) * q
            dh += w * 2.0 * x * q * q
        if z == 0:
            return 0j, cmath.exp(0.5 * alpha * h)
        f = z * cmath.exp(0.5 * alpha * h)
        return f, f * (1.0 / z + 0.5 * alpha * dh)
    return f_alpha(law, alpha, z), f_alpha_prime(law, alpha, z)


def outside_closure(law: Law, z, s: float) -> bool:
    """True if ``z`` lies outside the closure of Sigma_s (with a relative margin on T)."""
    z = complex(z)
    if z == 0:
        if not _zero_extends(law):
            return False
        if not law.zero_in_support():
            return True
        # isolated atom at 0: T has a finite limit along the positive axis near 0
        return lifetime_T(law, 1e-9 * law.support_min_positive) > s * (1 + CLOSURE_MARGIN)
    if support_distance(law, z) == 0:
        return False
    return lifetime_T(law, z) > s * (1 + CLOSURE_MARGIN)


def _newton(law, alpha, target, z, tol):
    try:
        f, fp = _f_and_prime(law, alpha, z)
    except (DomainError, ZeroDivisionError, OverflowError):
        return None
    res = abs(f - target)
    for _ in range(NEWTON_MAXITER):
        if res < tol:
            return z
        if fp == 0 or not cmath.isfinite(fp):
            return None
        step = (f - target) / fp
        lam = 1.0
        for _ in range(30):
            z_new = z - lam * step
            try:
                f_new, fp_new = _f_and_prime(law, alpha, z_new)
            except (DomainError, ZeroDivisionError, OverflowError):
                f_new = complex(math.inf)
            if cmath.isfinite(f_new) and abs(f_new - target) < res:
                break
            lam *= 0.5
        else:
            return None
        z, f, fp, res = z_new, f_new, fp_new, abs(f_new - target)
    return z if res < tol else None


def invert_f(law: Law, s: float, tau, target, seeds=()) -> complex | None:
    """The unique ``z`` outside the closure of Sigma_s with ``f_{s-tau}(z) = target``.

    Returns None when Newton finds no admissible root from any seed (the target is
    then presumed to lie in D_{s,tau}).  Two distinct admissible roots raise
    ConsistencyError, since f is injective on that set.
    """
    check_params(s, tau)
    alpha = s - complex(tau)
    target = complex(target)
    tol = 1e-12 * (1.0 + abs(target))
    if alpha == 0:
        return target if outside_closure(law, target, s) else None
    # far field: f(z) ~ z e^{-alpha/2}; near 0 (when f extends there): f(z) ~ z e^{alpha H(0)/2}
    bases = [target * cmath.exp(0.5 * alpha)]
    if _zero_extends(law):
        bases.append(target * cmath.exp(-0.5 * alpha * herglotz_integral(law, 0j)))
    ring = [1.0] + [1.0 + 0.25 * cmath.exp(2j * math.pi * k / 8) for k in range(8)]
    starts = list(seeds) + [b * w for b in bases for w in ring]
    roots: list[complex] = []
    for z0 in starts:
        z = _newton(law, alpha, target, complex(z0), tol)
        if z is None or any(abs(z - r) <= 1e-8 * (1.0 + abs(r)) for r in roots):
            continue
        if outside_closure(law, z, s):
            roots.append(z)
    if len(roots) > 1:
        raise ConsistencyError(f"f_(s-tau) has two preimages {roots[0]} and {roots[1]} of {target} outside Sigma_s")
    return roots[0] if roots else None


def boundary_D(law: Law, s: float, tau, n_radii: int = 512) -> BoundaryTrace:
    """Image under ``f_{s-tau}`` of the traced boundary of Sigma_s."""
    check_params(s, tau)
    alpha = s - complex(tau)
    sig = boundary_sigma(law, s, n_radii)
    if alpha == 0:
        return sig
    out = BoundaryTrace(t=s, r_range=sig.r_range, flagged=list(sig.flagged))
    for c, comp in enumerate(sig.components):
        keep, img = [], []
        for j, z in enumerate(comp):
            try:
                img.append(_f_and_prime(law, alpha, complex(z))[0])
                keep.append(j)
            except (DomainError, ZeroDivisionError):
                out.flagged.append((c, j, math.nan))
        if len(img) < 2:
            continue
        keep = np.array(keep)
        out.components.append(np.array(img))
        out.radii.append(np.asarray(sig.radii[c])[keep])
        out.thetas.append(np.asarray(sig.thetas[c])[keep])
    res = 0.0
    for comp in out.components:
        res = max(res, float(np.max(np.abs(np.diff(np.append(comp, comp[0]))))))
    out.resolution = res
    return out


@lru_cache(maxsize=32)
def _cached_boundary(law: Law, s: float, tau: complex, n_radii: int) -> BoundaryTrace:
    return boundary_D(law, s, tau, n_radii)


def in_D_many(law: Law, s: float, tau, points, n_radii: int = 512) -> np.ndarray:
    """Vectorized :func:`in_D`."""
    check_params(s, tau)
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    trace = _cached_boundary(law, float(s), complex(tau), n_radii)
    inside = trace.contains(pts)
    near = trace.distance(pts) < max(trace.resolution, 1e-12)
    for i in np.nonzero(near)[0]:
        inside[i] = invert_f(law, s, tau, pts[i]) is None
    zero = pts == 0
    if np.any(zero):
        inside[zero] = not outside_closure(law, 0j, s)
    return inside


def in_D(law: Law, s: float, tau, lam, n_radii: int = 512) -> bool:
    return bool(in_D_many(law, s, tau, [lam], n_radii)[0])


@dataclass(frozen=True)
class TauCurves:
    lambda_tau: complex
    eps_tau: float
    p_lambda_tau: complex
    p_eps_tau: float


def initial_tau_momenta(law: Law, lambda0, eps0: float) -> tuple[complex, float]:
    """``(p_lambda0, p_eps0)``: derivatives in lambda and eps of ``int log(|xi - lambda|^2 + eps^2) dmu``."""
    lam = complex(lambda0)
    if support_distance(law, lam) == 0 and eps0 == 0:
        raise DomainError("lambda0 lies in the support")
    e2 = eps0 * eps0
    if law.is_atomic:
        xs, ws = law.atom_x, law.atom_w
        den = np.abs(xs - lam) ** 2 + e2
        return complex(np.sum(ws * (lam.conjugate() - xs) / den)), float(np.sum(ws * 2.0 * eps0 / den))
    p_lam = complex(np.sum(law.atom_w * (lam.conjugate() - law.atom_x) / (np.abs(law.atom_x - lam) ** 2 + e2)))
    x, c2 = lam.real, lam.imag ** 2 + e2
    p_lam += complex(_kernel_integral(law, [x, -1.0], x, c2), _kernel_integral(law, [-lam.imag], x, c2))
    p_eps = float(np.sum(law.atom_w * 2.0 * eps0 / (np.abs(law.atom_x - lam) ** 2 + e2)))
    p_eps += _kernel_integral(law, [2.0 * eps0], x, c2)
    return p_lam, p_eps


def tau_curves(law: Law, s: float, tau, lambda0, eps0: float = 0.0) -> TauCurves:
    """The exponential characteristic curves in the tau direction, started at ``tau = s``."""
    check_params(s, tau)
    if eps0 < 0:
        raise DomainError("eps0 must be >= 0")
    lam0 = complex(lambda0)
    if support_distance(law, lam0) == 0:
        raise DomainError("lambda0 lies in the support")
    p_lam0, p_eps0 = initial_tau_momenta(law, lam0, eps0)
    E = 0.5 * (complex(tau) - s) * (eps0 * p_eps0 + 2.0 * lam0 * p_lam0 - 1.0)
    e = cmath.exp(E)
    ae = abs(e)
    return TauCurves(lam0 * e, eps0 * ae, p_lam0 / e, p_eps0 / ae)


def dS_dlambda(law: Law, s: float, tau, lam) -> complex | None:
    """``(z / lam) int 1/(z - xi) dmu`` with ``z`` the preimage of ``lam``; None if none is found."""
    lam = complex(lam)
    if lam == 0:
        raise DomainError("dS/dlambda is evaluated at lambda != 0")
    z = invert_f(law, s, tau, lam)
    if z is None:
        return None
    return z / lam * cauchy_kernel(law, z)


def mass_at_origin(law: Law, s: float, tau) -> float | None:
    """``mu({0})`` when 0 is outside D_{s,tau}; None otherwise."""
    check_params(s, tau)
    if outside_closure(law, 0j, s):
        return law.mass_at(0.0)
    return None
