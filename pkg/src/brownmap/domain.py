"""The lifetime function T, the domains Sigma_t and their boundary traces.

``T(lambda0)`` is the small-eps limit of the blow-up time of the characteristic
flow started at ``lambda0``; ``Sigma_t = {lambda0 != 0 : T(lambda0) < t}``.  In
polar form ``lambda0 = r e^{i theta}`` the function T increases with ``|theta|``,
so for each radius Sigma_t is an arc ``|theta| < theta_t(r)``.  Boundaries are
traced by sweeping ``r`` over a log-spaced grid and bisecting for ``theta_t(r)``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .measure import Law, moment_pair

# theta_t marker meaning "the whole circle of radius r lies in Sigma_t".  It is
# larger than every angle, so ``abs(arg) < theta`` stays the membership test.
PI_PLUS = math.inf

SERIES_CUTOFF = 1e-4
THETA_TOL = 1e-10
BOUNDARY_TOL = 1e-8


def lifetime_from_moments(p0: float, p2: float, r: float) -> float:
    """``log(R) / (p2 (R - 1))`` with ``R = p0 r^2 / p2``; 0 when ``p0`` is infinite."""
    if math.isinf(p0):
        return 0.0
    u = p0 * r * r / p2 - 1.0
    if u <= -1.0:
        return math.inf  # R underflowed to 0: r is far inside the no-escape region
    if abs(u) < SERIES_CUTOFF:
        ratio = 1.0 - u / 2.0 + u * u / 3.0
    else:
        ratio = math.log1p(u) / u
    return ratio / p2


def lifetime_T(law: Law, lambda0) -> float:
    """The lifetime ``T(lambda0)`` for ``lambda0 != 0``.

    Off the support this is the closed formula in the eps=0 moments.  On the positive
    real support it is the ``theta -> 0+`` limit, which is the same formula evaluated
    with the (possibly infinite) on-support moments.
    """
    lam = complex(lambda0)
    if lam == 0:
        raise DomainError("T is evaluated at lambda0 != 0; use lifetime_at_origin for 0")
    m = moment_pair(law, lam, 0.0)
    return lifetime_from_moments(m.p0, m.p2, abs(lam))


def lifetime_at_origin(law: Law) -> float:
    """``T(0) = inf`` when 0 is outside the support."""
    if law.zero_in_support():
        raise DomainError("0 lies in the support; T(0) is not defined")
    return math.inf


def in_sigma(law: Law, lam, t: float) -> bool:
    lam = complex(lam)
    if lam == 0:
        return False
    return lifetime_T(law, lam) < t


@dataclass(frozen=True)
class ThetaT:
    """``theta_t(r)``: an angle in [0, pi] or :data:`PI_PLUS`."""

    r: float
    t: float
    theta: float

    @property
    def is_pi_plus(self) -> bool:
        return self.theta == PI_PLUS

    @property
    def kind(self) -> str:
        if self.is_pi_plus:
            return "pi+"
        return "zero" if self.theta == 0.0 else "arc"

    def contains_angle(self, angle: float) -> bool:
        return abs(angle) < self.theta


def theta_t(law: Law, r: float, t: float, tol: float = THETA_TOL) -> ThetaT:
    """Half-opening ``theta_t(r)`` of the arc of Sigma_t on the circle of radius ``r``."""
    if not (r > 0 and t > 0):
        raise DomainError(f"theta_t needs r > 0 and t > 0, got r={r}, t={t}")
    if lifetime_T(law, -r) < t:
        return ThetaT(r, t, PI_PLUS)
    if lifetime_T(law, r) >= t:
        return ThetaT(r, t, 0.0)
    lo, hi = 0.0, math.pi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if lifetime_T(law, r * complex(math.cos(mid), math.sin(mid))) >= t:
            hi = mid
        else:
            lo = mid
    return ThetaT(r, t, hi)


@dataclass
class BoundaryTrace:
    """Closed polylines approximating a domain boundary.

    ``components[c]`` is a complex vertex array; ``radii[c]`` and ``thetas[c]`` hold the
    radius and the angle ``theta_t(r)`` that produced each vertex.  ``flagged`` lists
    ``(component, index, residual)`` for vertices failing the level-set check.
    """

    t: float
    components: list = field(default_factory=list)
    radii: list = field(default_factory=list)
    thetas: list = field(default_factory=list)
    resolution: float = 0.0
    flagged: list = field(default_factory=list)
    r_range: tuple = (0.0, 0.0)

    @property
    def is_empty(self) -> bool:
        return not self.components

    def vertices(self) -> np.ndarray:
        if not self.components:
            return np.zeros(0, dtype=complex)
        return np.concatenate(self.components)

    def contains(self, points) -> np.ndarray:
        """Even-odd rule over all components (works for annuli and several islands)."""
        pts = np.atleast_1d(np.asarray(points, dtype=complex))
        inside = np.zeros(pts.shape, dtype=bool)
        px, py = pts.real[:, None], pts.imag[:, None]
        for comp in self.components:
            ax, ay = comp.real[None, :], comp.imag[None, :]
            nxt = np.roll(comp, -1)
            bx, by = nxt.real[None, :], nxt.imag[None, :]
            straddle = (ay > py) != (by > py)
            with np.errstate(divide="ignore", invalid="ignore"):
                xcross = ax + (py - ay) * (bx - ax) / (by - ay)
            inside ^= (np.count_nonzero(straddle & (px < xcross), axis=1) % 2).astype(bool)
        return inside

    def distance(self, points) -> np.ndarray:
        """Distance from each point to the nearest edge of any component."""
        pts = np.atleast_1d(np.asarray(points, dtype=complex))
        best = np.full(pts.shape, np.inf)
        for comp in self.components:
            a = comp[None, :]
            seg = np.roll(comp, -1)[None, :] - a
            rel = pts[:, None] - a
            len2 = np.abs(seg) ** 2
            with np.errstate(divide="ignore", invalid="ignore"):
                u = np.where(len2 > 0, (rel * seg.conj()).real / len2, 0.0)
            u = np.clip(u, 0.0, 1.0)
            best = np.minimum(best, np.min(np.abs(rel - u * seg), axis=1))
        return best

    def rows(self):
        for c, comp in enumerate(self.components):
            for z, r, th in zip(comp, self.radii[c], self.thetas[c]):
                yield c, float(z.real), float(z.imag), float(r), float(th)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["component_id", "re", "im", "r", "theta"])
            for c, re, im, r, th in self.rows():
                w.writerow([c, repr(re), repr(im), repr(r), repr(th)])

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "resolution": self.resolution,
            "r_range": list(self.r_range),
            "components": [
                {"re": comp.real.tolist(), "im": comp.imag.tolist(),
                 "r": np.asarray(self.radii[c]).tolist(), "theta": np.asarray(self.thetas[c]).tolist()}
                for c, comp in enumerate(self.components)
            ],
            "flagged": [list(f) for f in self.flagged],
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")


def bracket_radii(law: Law, t: float) -> tuple[float, float]:
    """Radii ``(r_min, r_max)`` outside of which no point of Sigma_t lies."""
    R = 2.0 * law.support_max
    for _ in range(200):
        if lifetime_T(law, R) > t:
            break
        R *= 2.0
    else:
        raise DomainError("could not bracket Sigma_t from above")
    if law.zero_in_support():
        # Sigma_t may reach into a punctured neighbourhood of 0; stop at a floor
        return 1e-6 * law.support_max, 2.0 * R
    rho = law.support_min_positive / 4.0
    for _ in range(200):
        if lifetime_T(law, rho) > t:
            break
        rho /= 2.0
    return rho, 2.0 * R


def _transition(law, t, r_a, st_a, r_b, st_b, tol, out, depth=0):
    """Append refined samples between two grid radii whose states differ."""
    if st_a.kind == "arc" or st_b.kind == "arc":
        # a single arc end: bisect in log r for where the arc closes
        arc_on_left = st_a.kind == "arc"
        other = st_b.kind if arc_on_left else st_a.kind
        la, lb = math.log(r_a), math.log(r_b)
        while lb - la > 1e-13:
            lm = 0.5 * (la + lb)
            st = theta_t(law, math.exp(lm), t, tol)
            if (st.kind == "arc") == arc_on_left:
                la = lm
            else:
                lb = lm
        r_end = math.exp(0.5 * (la + lb))
        out.append((r_end, 0.0 if other == "zero" else math.pi, "end"))
        return
    # zero <-> pi+ with no arc sample in between: look for one
    if depth > 40 or r_b / r_a - 1 < 1e-12:
        out.append((math.sqrt(r_a * r_b), math.nan, "break"))
        return
    r_m = math.sqrt(r_a * r_b)
    st_m = theta_t(law, r_m, t, tol)
    if st_m.kind == st_a.kind:
        _transition(law, t, r_m, st_m, r_b, st_b, tol, out, depth + 1)
    elif st_m.kind == st_b.kind:
        _transition(law, t, r_a, st_a, r_m, st_m, tol, out, depth + 1)
    else:
        _transition(law, t, r_a, st_a, r_m, st_m, tol, out, depth + 1)
        out.append((r_m, st_m.theta, "arc"))
        _transition(law, t, r_m, st_m, r_b, st_b, tol, out, depth + 1)


def _refine_run(law, t, run, max_gap, tol, depth=24):
    """Insert radii between neighbouring vertices that are more than ``max_gap`` apart."""
    out = [run[0]]
    for (r0, th0), (r1, th1) in zip(run[:-1], run[1:]):
        stack = [((r0, th0), (r1, th1), 0)]
        pending = []
        while stack:
            (ra, ta), (rb, tb), d = stack.pop()
            if d >= depth or abs(ra * np.exp(1j * ta) - rb * np.exp(1j * tb)) <= max_gap:
                pending.append((rb, tb))
                continue
            rm = math.sqrt(ra * rb)
            st = theta_t(law, rm, t, tol)
            if st.kind != "arc":
                pending.append((rb, tb))
                continue
            # process the left half first: push right half then left half
            stack.append(((rm, st.theta), (rb, tb), d + 1))
            stack.append(((ra, ta), (rm, st.theta), d + 1))
        out.extend(pending)
    return out


def _close_run(run):
    """Upper vertices r e^{i theta} followed by the conjugates in reverse order."""
    r = np.array([p[0] for p in run])
    th = np.array([p[1] for p in run])
    upper = r * np.exp(1j * th)
    keep = (th > 0) & (th < math.pi)
    lower_idx = np.nonzero(keep)[0][::-1]
    comp = np.concatenate([upper, np.conj(upper[lower_idx])])
    return comp, np.concatenate([r, r[lower_idx]]), np.concatenate([th, th[lower_idx]])


def boundary_sigma(law: Law, t: float, n_radii: int = 512, tol: float = 1e-12,
                   check_tol: float = BOUNDARY_TOL, max_gap: float | None = None) -> BoundaryTrace:
    """Trace the boundary of Sigma_t; the trace is empty when Sigma_t is.

    Vertices further apart than ``max_gap`` (default: 1% of the largest vertex
    modulus) are split by extra radii between them.
    """
    if not t > 0:
        raise DomainError(f"t must be > 0, got {t}")
    if n_radii < 2:
        raise DomainError("n_radii must be >= 2")
    r_min, r_max = bracket_radii(law, t)
    radii = np.geomspace(r_min, r_max, n_radii)
    states = [theta_t(law, float(r), t, tol) for r in radii]

    samples = []
    for i, st in enumerate(states):
        if i > 0 and st.kind != states[i - 1].kind:
            _transition(law, t, float(radii[i - 1]), states[i - 1], float(radii[i]), st, tol, samples)
        samples.append((float(radii[i]), st.theta, st.kind))

    runs, cur = [], []
    for r, th, kind in samples:
        if kind in ("arc", "end"):
            cur.append((r, th))
            if kind == "end" and len(cur) > 1:
                runs.append(cur)
                cur = []
            elif kind == "end":
                # an opening end point starts a new run
                pass
        else:
            if cur:
                runs.append(cur)
            cur = []
    if cur:
        runs.append(cur)

    trace = BoundaryTrace(t=t, r_range=(r_min, r_max))
    runs = [run for run in runs if len(run) >= 2]
    if runs and max_gap is None:
        max_gap = 0.01 * max(r for run in runs for r, _ in run)
    for run in runs:
        run = _refine_run(law, t, run, max_gap, tol)
        comp, rr, th = _close_run(run)
        trace.components.append(comp)
        trace.radii.append(rr)
        trace.thetas.append(th)

    res = 0.0
    for c, comp in enumerate(trace.components):
        if len(comp) > 1:
            res = max(res, float(np.max(np.abs(np.diff(np.append(comp, comp[0]))))))
        for j, z in enumerate(comp):
            # vertices where T jumps (density end points) are flagged, not dropped
            try:
                resid = abs(lifetime_T(law, z) - t)
            except DomainError:
                resid = math.nan
            if not resid <= check_tol * max(1.0, t):
                trace.flagged.append((c, j, resid))
    trace.resolution = res
    return trace
