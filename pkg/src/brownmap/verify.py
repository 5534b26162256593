"""Self-check suites run by ``brownmap verify``.

Each suite returns a list of check records ``{"name", "passed", "value", "threshold"}``.
"""

from __future__ import annotations

import math

import numpy as np

from .domain import lifetime_T
from .hamilton import blowup, constants, flow, hamiltonian, numerical_blowup_time, phi
from .mapping import _cached_boundary, boundary_D, f_alpha, invert_f, outside_closure
from .measure import Law, moment_pair, support_distance
from .rmt import SimConfig, run

DELTA1 = Law.delta(1.0)
TWO_ATOMS = Law.point_masses([(1.0, 0.2), (2.0, 0.8)])
HALF_ZERO = Law.point_masses([(0.0, 0.5), (1.0, 0.5)])
DEFAULT_LAWS = (DELTA1, TWO_ATOMS, HALF_ZERO)

CONTAINMENT_T = (0.1, 0.1319, 0.2, 0.4)
CONTAINMENT_TAU = (0.2, 0.2 + 0.1j, 0.1, 0.2 - 0.19j)


def _check(name, value, threshold, passed=None):
    if passed is None:
        passed = bool(value <= threshold)
    return {"name": name, "passed": bool(passed), "value": float(value), "threshold": float(threshold)}


def random_off_support(law: Law, rng, min_dist: float = 0.1) -> complex:
    """Random ``lambda0`` in the annulus 0.3 <= |z| <= 3 at distance >= min_dist from the support."""
    while True:
        r = rng.uniform(0.3, 3.0)
        th = rng.uniform(-math.pi, math.pi)
        z = complex(r * math.cos(th), r * math.sin(th))
        if support_distance(law, z) >= min_dist:
            return z


def conservation_suite(laws=DEFAULT_LAWS, seed: int = 0, n_points: int = 2):
    rng = np.random.default_rng(seed)
    out = []
    for li, law in enumerate(laws):
        for _ in range(n_points):
            lam0 = random_off_support(law, rng)
            for eps0 in (0.01, 0.1, 1.0):
                tstar = blowup(law, lam0, eps0).t_star
                traj = flow(law, lam0, eps0, 0.9 * tstar)
                H0, C, phi0 = constants(law, lam0, eps0)
                p0 = moment_pair(law, lam0, eps0).p0
                dH = max(abs(hamiltonian(s) - H0) for s in traj)
                dphi = max(abs(phi(s) - phi0) for s in traj)
                rel = max(abs(s.eps * s.p_eps ** 2 / (eps0 * p0 ** 2 * math.exp(-C * s.t)) - 1.0) for s in traj)
                drift = max(max(abs(s.theta - traj[0].theta), abs(s.p_theta - traj[0].p_theta)) for s in traj)
                tag = f"law{li} lambda0={lam0:.4g} eps0={eps0}"
                out.append(_check(f"H conserved [{tag}]", dH, 1e-8))
                out.append(_check(f"phi conserved [{tag}]", dphi, 1e-8))
                out.append(_check(f"eps p_eps^2 decay [{tag}]", rel, 1e-6))
                out.append(_check(f"theta, p_theta constant [{tag}]", drift, 0.0))
    return out


def blowup_suite(laws=DEFAULT_LAWS, seed: int = 0, n_cases: int = 20):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_cases):
        law = laws[int(rng.integers(len(laws)))]
        lam0 = random_off_support(law, rng)
        eps0 = float(rng.choice([0.01, 0.1, 1.0]))
        tstar = blowup(law, lam0, eps0).t_star
        t_num = numerical_blowup_time(law, lam0, eps0)
        out.append(_check(f"numeric blow-up vs t* [case {i}: lambda0={lam0:.4g}, eps0={eps0}]",
                          abs(t_num / tstar - 1.0), 1e-4))
        T = lifetime_T(law, lam0)
        out.append(_check(f"t*(eps0=1e-10) vs T [case {i}]", abs(blowup(law, lam0, 1e-10).t_star / T - 1.0), 1e-6))
    return out


def sample_outside(law: Law, s: float, n: int, rng, n_radii: int = 512) -> np.ndarray:
    """Rejection sample of ``n`` points outside the closure of Sigma_s, in a box around it."""
    verts = _cached_boundary(law, float(s), complex(s), n_radii).vertices()
    lo_x, hi_x = verts.real.min(), verts.real.max()
    lo_y, hi_y = verts.imag.min(), verts.imag.max()
    pad = 0.5 * max(hi_x - lo_x, hi_y - lo_y)
    pts = []
    while len(pts) < n:
        z = complex(rng.uniform(lo_x - pad, hi_x + pad), rng.uniform(lo_y - pad, hi_y + pad))
        if outside_closure(law, z, s):
            pts.append(z)
    return np.array(pts)


def injectivity_suite(law: Law = TWO_ATOMS, settings=((0.2, 0.2), (0.2, 0.1), (0.2, 0.2 - 0.19j)),
                      n_pairs: int = 1000, seed: int = 0):
    rng = np.random.default_rng(seed)
    out = []
    for s, tau in settings:
        alpha = s - complex(tau)
        z = sample_outside(law, s, 2 * n_pairs, rng)
        w = np.array([f_alpha(law, alpha, v) for v in z])
        z1, z2, w1, w2 = z[0::2], z[1::2], w[0::2], w[1::2]
        gap = np.abs(w1 - w2) / (1e-9 * (1.0 + np.abs(w1)))
        out.append(_check(f"distinct images [s={s}, tau={tau}]", 1.0, 1.0, passed=bool(np.all(gap > 1.0))))
        err = 0.0
        for v, fv in zip(z1, w1):
            back = invert_f(law, s, tau, fv)
            err = max(err, math.inf if back is None else abs(back - v))
        out.append(_check(f"round trip invert_f(f(z)) [s={s}, tau={tau}]", err, 1e-10))
    return out


def collapse_suite():
    trace = boundary_D(DELTA1, 2.0, 0.0)
    dev = float(np.max(np.abs(np.abs(trace.vertices()) - 1.0))) if not trace.is_empty else math.inf
    return [_check("unit-circle collapse (delta_1, s=2, tau=0)", dev, 1e-8)]


def containment_suite(law: Law = TWO_ATOMS, N: int = 300, steps: int = 300, seed: int = 0,
                      dilation: float = 0.05, precision: str = "single", threshold: float = 0.97):
    out = []
    settings = [(t, t) for t in CONTAINMENT_T] + [(0.2, tau) for tau in CONTAINMENT_TAU if tau != 0.2]
    for s, tau in settings:
        scheme = "product" if complex(tau) == s else "euler"
        cfg = SimConfig(N, steps, s, tau, scheme, seed=seed, precision=precision)
        rep = run(law, cfg, dilation)
        out.append({"name": f"inside fraction [s={s}, tau={tau}]", "passed": rep.inside_fraction >= threshold,
                    "value": rep.inside_fraction, "threshold": threshold})
    return out


SUITES = {
    "conservation": conservation_suite,
    "blowup": blowup_suite,
    "injectivity": injectivity_suite,
    "containment": containment_suite,
}


def run_suite(name: str, **kwargs):
    if name == "all":
        checks = []
        for key, fn in SUITES.items():
            checks += fn(**kwargs.get(key, {}))
        return checks + collapse_suite()
    if name == "collapse":
        return collapse_suite()
    return SUITES[name](**kwargs.get(name, {}))
