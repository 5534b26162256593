"""Characteristic flow of the first Hamilton-Jacobi equation.

The state is ``(rho, theta, eps, p_rho, p_theta, p_eps)`` with ``rho = log|lambda|``
and Hamiltonian ``H = -eps p_eps (1 + (r^2 - eps) p_eps - p_rho)``, ``r = e^rho``.
``theta`` and ``p_theta`` do not appear in H and stay constant.  Besides H, the
quantity ``phi = eps p_eps + p_rho / 2`` is conserved, and ``eps p_eps^2`` decays
like ``e^{-Ct}`` with ``C = 2 phi - 1``.  These make ``p_eps(t)`` solvable in closed
form, and its first pole is the blow-up time ``t_star``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass

from .domain import lifetime_T
from .errors import BlowupError, DomainError
from .measure import Law, initial_momenta, log_potential, moment_pair, support_distance

BLOWUP_GUARD = 1e12
DEFAULT_DT_FRACTION = 1e-4
# near a pole the step is capped at this fraction of |p_eps / (dp_eps/dt)|
POLE_STEP_FRACTION = 0.05


@dataclass(frozen=True)
class CharState:
    rho: float
    theta: float
    eps: float
    p_rho: float
    p_theta: float
    p_eps: float
    t: float = 0.0

    @property
    def lam(self) -> complex:
        return math.exp(self.rho) * complex(math.cos(self.theta), math.sin(self.theta))


def hamiltonian(state: CharState) -> float:
    r2 = math.exp(2.0 * state.rho)
    return -state.eps * state.p_eps * (1.0 + (r2 - state.eps) * state.p_eps - state.p_rho)


def phi(state: CharState) -> float:
    return state.eps * state.p_eps + 0.5 * state.p_rho


def initial_state(law: Law, lambda0, eps0: float) -> CharState:
    lam = complex(lambda0)
    p_rho, p_theta, p_eps = initial_momenta(law, lam, eps0)
    return CharState(math.log(abs(lam)), math.atan2(lam.imag, lam.real), eps0, p_rho, p_theta, p_eps, 0.0)


def constants(law: Law, lambda0, eps0: float) -> tuple[float, float, float]:
    """``(H0, C, phi0)`` for the trajectory started at ``(lambda0, eps0)``."""
    lam = complex(lambda0)
    m = moment_pair(law, lam, eps0)
    H0 = -eps0 * m.p0 * m.p2
    C = m.p0 * (abs(lam) ** 2 + eps0) - m.p2
    if lam == 0:
        phi0 = 0.5 * (C + 1.0)
    else:
        phi0 = eps0 * m.p0 + 0.5 * initial_momenta(law, lam, eps0)[0]
    return H0, C, phi0


@dataclass(frozen=True)
class BlowupResult:
    t_star: float
    delta: float
    C: float
    a_squared: float
    branch: str


@dataclass(frozen=True)
class _ClosedForm:
    p0: float
    p2: float
    r: float
    eps0: float
    C: float
    a2: float
    y0: float


def _closed_form(law: Law, lambda0, eps0: float) -> _ClosedForm:
    lam = complex(lambda0)
    d = support_distance(law, lam)
    if d == 0:
        raise DomainError(f"lambda0={lam} lies in the support")
    if not eps0 + d * d > 0:
        raise DomainError(f"need eps0 > -dist(lambda0, supp)^2 = {-d * d}, got eps0={eps0}")
    m = moment_pair(law, lam, eps0)
    r = abs(lam)
    C = m.p0 * (r * r + eps0) - m.p2
    y0 = 0.5 * (m.p0 * r * r + m.p0 * eps0 + m.p2)
    if not y0 > 0:
        raise DomainError("delta must be positive (eps0 too negative)")
    # a^2 = C^2/4 - H with H = -eps0 p0 p2
    a2 = 0.25 * C * C + eps0 * m.p0 * m.p2
    return _ClosedForm(m.p0, m.p2, r, eps0, C, a2, y0)


def _atanh_over(x: float) -> float:
    """``atanh(x) / x``."""
    if abs(x) < 1e-4:
        return 1.0 + x * x / 3.0 + x ** 4 / 5.0
    return math.atanh(x) / x


def _atan_over(x: float) -> float:
    if abs(x) < 1e-4:
        return 1.0 - x * x / 3.0 + x ** 4 / 5.0
    return math.atan(x) / x


def blowup(law: Law, lambda0, eps0: float) -> BlowupResult:
    """Blow-up time of the characteristic flow, from the pole of the closed-form ``p_eps``."""
    cf = _closed_form(law, lambda0, eps0)
    branch = "hyperbolic" if cf.a2 >= 0 else "trigonometric"
    if cf.r == 0:
        return BlowupResult(math.inf, math.inf, cf.C, cf.a2, branch)
    delta = 2.0 * cf.y0 / (cf.r * math.sqrt(cf.p0 * cf.p2))
    if branch == "hyperbolic":
        x = math.sqrt(cf.a2) / cf.y0
        # a < y0 always holds for r > 0 since y0^2 - a^2 = p0 p2 r^2
        t_star = _atanh_over(x) / cf.y0
    else:
        t_star = _atan_over(math.sqrt(-cf.a2) / cf.y0) / cf.y0
    return BlowupResult(t_star, delta, cf.C, cf.a2, branch)


def _cosh_sinh_over(a2: float, t: float) -> tuple[float, float]:
    """``(cosh(a t), sinh(a t) / a)`` for ``a = sqrt(a2)``, continued to a2 < 0."""
    if a2 >= 0:
        a = math.sqrt(a2)
        z = a * t
        sa = t * (1.0 + z * z / 6.0) if z < 1e-6 else math.sinh(z) / a
        return math.cosh(z), sa
    al = math.sqrt(-a2)
    z = al * t
    sa = t * (1.0 - z * z / 6.0) if z < 1e-6 else math.sin(z) / al
    return math.cos(z), sa


def p_eps_closed(law: Law, lambda0, eps0: float, t: float) -> float:
    """Closed-form ``p_eps(t)`` for ``0 <= t < t_star``."""
    cf = _closed_form(law, lambda0, eps0)
    bu = blowup(law, lambda0, eps0)
    if not (0 <= t < bu.t_star):
        raise DomainError(f"t={t} outside [0, t_star={bu.t_star})")
    c, sa = _cosh_sinh_over(cf.a2, t)
    num = c + (0.5 * cf.C - cf.p0 * cf.eps0) * sa
    den = c - cf.y0 * sa
    if not den > 0:
        raise DomainError(f"t={t} is at the pole t_star={bu.t_star} to rounding")
    return cf.p0 * math.exp(-cf.C * t) * num / den


def eps_closed(law: Law, lambda0, eps0: float, t: float) -> float:
    """``eps(t) = eps0 p0^2 e^{-Ct} / p_eps(t)^2``."""
    cf = _closed_form(law, lambda0, eps0)
    pe = p_eps_closed(law, lambda0, eps0, t)
    if pe == 0:
        raise DomainError("p_eps vanishes")
    return eps0 * cf.p0 ** 2 * math.exp(-cf.C * t) / (pe * pe)


# -- numerical integration -------------------------------------------------------

def _rhs(y):
    rho, eps, p_rho, p_eps = y
    r2 = math.exp(2.0 * rho)
    return (
        eps * p_eps,
        -eps * (1.0 + 2.0 * (r2 - eps) * p_eps - p_rho),
        2.0 * r2 * eps * p_eps * p_eps,
        p_eps * (1.0 + (r2 - 2.0 * eps) * p_eps - p_rho),
    )


def _rk4(y, h):
    k1 = _rhs(y)
    k2 = _rhs([a + 0.5 * h * b for a, b in zip(y, k1)])
    k3 = _rhs([a + 0.5 * h * b for a, b in zip(y, k2)])
    k4 = _rhs([a + h * b for a, b in zip(y, k3)])
    return [a + h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)]


def _integrate(state: CharState, t_end: float, dt: float, guard: float):
    """RK4 from ``state`` to ``t_end``; raises BlowupError when |p_eps| passes ``guard``."""
    y = [state.rho, state.eps, state.p_rho, state.p_eps]
    t = state.t
    out = [state]
    while t < t_end:
        h = min(dt, t_end - t)
        dpe = _rhs(y)[3]
        if dpe != 0:
            h = min(h, POLE_STEP_FRACTION * abs(y[3] / dpe))
        for _ in range(80):
            y_new = _rk4(y, h)
            if all(math.isfinite(v) for v in y_new) and abs(y_new[3]) <= 10.0 * max(abs(y[3]), 1e-300):
                break
            h *= 0.5
        else:
            raise BlowupError(f"step size underflow at t={t}", t_blowup=t)
        y, t = y_new, t + h
        if t_end - t < 1e-15 * max(1.0, t_end):
            t = t_end
        out.append(CharState(y[0], state.theta, y[1], y[2], state.p_theta, y[3], t))
        if abs(y[3]) > guard:
            raise BlowupError(f"|p_eps| exceeded {guard:g} at t={t}", t_blowup=t)
    return out


def flow(law: Law, lambda0, eps0: float, t_end: float, dt: float | None = None) -> list[CharState]:
    """RK4 trajectory from ``(lambda0, eps0)`` up to ``t_end``.

    The step is ``dt`` (default ``1e-4 t_star``), reduced near a pole of ``p_eps`` and
    halved whenever ``|p_eps|`` would grow more than tenfold in one step.
    """
    lam = complex(lambda0)
    if lam == 0:
        raise DomainError("flow needs lambda0 != 0")
    if not eps0 > 0:
        raise DomainError(f"flow needs eps0 > 0, got {eps0}")
    if dt is None:
        dt = DEFAULT_DT_FRACTION * blowup(law, lam, eps0).t_star
    if not dt > 0:
        raise DomainError("dt must be positive")
    return _integrate(initial_state(law, lam, eps0), t_end, dt, BLOWUP_GUARD)


def numerical_blowup_time(law: Law, lambda0, eps0: float, dt: float | None = None,
                          guard: float = BLOWUP_GUARD) -> float:
    """Time at which the integrated ``|p_eps|`` first exceeds ``guard``."""
    bu = blowup(law, lambda0, eps0)
    if dt is None:
        dt = DEFAULT_DT_FRACTION * bu.t_star
    try:
        _integrate(initial_state(law, lambda0, eps0), 4.0 * bu.t_star, dt, guard)
    except BlowupError as exc:
        return exc.t_blowup
    return math.inf


def hj_value_outside(law: Law, lam, t: float) -> float:
    """Value of the Hamilton-Jacobi solution at eps = 0 outside the closure of Sigma_t."""
    lam = complex(lam)
    if lam == 0:
        if law.zero_in_support():
            raise DomainError("lambda = 0 lies in the support")
    elif lifetime_T(law, lam) <= t:
        raise DomainError(f"lambda={lam} is in the closure of Sigma_t (T <= t)")
    return log_potential(law, lam, 0.0)


TRAJECTORY_HEADER = ["t", "rho", "theta", "eps", "p_rho", "p_theta", "p_eps", "H", "phi"]


def write_trajectory_csv(states, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        for s in states:
            rho, theta, eps, p_rho, p_theta, p_eps, t = astuple(s)
            w.writerow([repr(v) for v in (t, rho, theta, eps, p_rho, p_theta, p_eps, hamiltonian(s), phi(s))])
