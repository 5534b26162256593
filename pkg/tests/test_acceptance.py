"""Acceptance criteria, one test each, at the stated tolerances and time budgets.

Every test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line to the terminal,
also when pytest captures output.
"""

import math
import time

import numpy as np
import pytest

from brownmap.domain import boundary_sigma, lifetime_T, theta_t
from brownmap.hamilton import hj_value_outside
from brownmap.mapping import boundary_D, mass_at_origin, outside_closure
from brownmap.measure import Law
from brownmap.rmt import SimConfig, sample_x, simulate_b, spectrum
from brownmap.verify import CONTAINMENT_T, CONTAINMENT_TAU, blowup_suite, conservation_suite, injectivity_suite

DELTA1 = Law.delta(1.0)
TWO_ATOMS = Law.point_masses([(1.0, 0.2), (2.0, 0.8)])
HALF_ZERO = Law.point_masses([(0.0, 0.5), (1.0, 0.5)])


@pytest.fixture
def report(capsys):
    def emit(n, title, passed, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n} {'PASS' if passed else 'FAIL'}: {title} ({detail})")
    return emit


def delta1_T(lam):
    r2 = abs(lam) ** 2
    if r2 == 1.0:
        return abs(1 - lam) ** 2
    return abs(1 - lam) ** 2 * math.log(1 / r2) / (1 - r2)


def test_01_delta1_closed_form(report):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    r = rng.uniform(0.2, 3.0, 100)
    th = rng.uniform(0.05, math.pi, 100) * rng.choice([-1, 1], 100)
    grid = list(r * np.exp(1j * th))
    grid[:8] = [np.exp(1j * a) for a in np.linspace(0.3, math.pi, 8)]  # points on r = 1
    err = max(abs(lifetime_T(DELTA1, z) - delta1_T(z)) for z in grid)
    err_m1 = abs(lifetime_T(DELTA1, -1) - 4.0)
    below = theta_t(DELTA1, 1.0, 4.0)
    above = theta_t(DELTA1, 1.0, 4.0 + 1e-9)
    annulus = boundary_sigma(DELTA1, 4.02, 128)
    elapsed = time.perf_counter() - start
    ok = (err <= 1e-10 and err_m1 <= 1e-10 and not below.is_pi_plus and above.is_pi_plus
          and len(annulus.components) == 2 and elapsed < 1.0)
    report(1, "delta_1 closed form for T", ok,
           f"max err {err:.2e}, |T(-1)-4| {err_m1:.2e}, circle inside only for t>4: "
           f"{above.is_pi_plus and not below.is_pi_plus}, t=4.02 components {len(annulus.components)}, {elapsed:.2f} s")
    assert err <= 1e-10 and err_m1 <= 1e-10
    assert not below.is_pi_plus and above.is_pi_plus
    assert len(annulus.components) == 2
    assert elapsed < 1.0


def test_02_blowup_agreement(report):
    start = time.perf_counter()
    checks = blowup_suite(n_cases=20)
    elapsed = time.perf_counter() - start
    numeric = [c for c in checks if c["name"].startswith("numeric")]
    limit = [c for c in checks if c["name"].startswith("t*(eps0=1e-10)")]
    ok = len(numeric) == 20 and all(c["passed"] for c in checks) and elapsed < 30
    report(2, "numeric blow-up time vs closed-form t*", ok,
           f"{sum(c['passed'] for c in numeric)}/20 within 1e-4 (worst {max(c['value'] for c in numeric):.1e}), "
           f"eps0=1e-10 vs T worst {max(c['value'] for c in limit):.1e}, {elapsed:.1f} s")
    assert all(c["passed"] for c in checks), [c for c in checks if not c["passed"]]
    assert elapsed < 30


def test_03_conservation(report):
    start = time.perf_counter()
    checks = conservation_suite()
    elapsed = time.perf_counter() - start
    worst = {}
    for c in checks:
        key = c["name"].split(" [")[0]
        worst[key] = max(worst.get(key, 0.0), c["value"])
    ok = all(c["passed"] for c in checks) and elapsed < 10
    report(3, "conserved quantities along trajectories", ok,
           ", ".join(f"{k} worst {v:.1e}" for k, v in worst.items()) + f", {elapsed:.1f} s")
    assert all(c["passed"] for c in checks), [c for c in checks if not c["passed"]]
    assert elapsed < 10


def test_04_unit_circle_collapse(report):
    start = time.perf_counter()
    trace = boundary_D(DELTA1, 2.0, 0.0)
    dev = float(np.max(np.abs(np.abs(trace.vertices()) - 1.0)))
    elapsed = time.perf_counter() - start
    ok = dev <= 1e-8 and elapsed < 5
    report(4, "boundary of D collapses onto the unit circle", ok,
           f"{len(trace.vertices())} vertices, max ||w|-1| {dev:.1e}, {elapsed:.2f} s")
    assert dev <= 1e-8
    assert elapsed < 5


def test_05_injectivity(report):
    start = time.perf_counter()
    checks = injectivity_suite(TWO_ATOMS, ((0.2, 0.2), (0.2, 0.1), (0.2, 0.2 - 0.19j)), n_pairs=1000)
    elapsed = time.perf_counter() - start
    trips = [c["value"] for c in checks if c["name"].startswith("round trip")]
    ok = all(c["passed"] for c in checks) and elapsed < 10
    report(5, "injectivity of f outside the closure of Sigma_s", ok,
           f"{sum(c['passed'] for c in checks)}/{len(checks)} checks, worst round trip {max(trips):.1e}, {elapsed:.1f} s")
    assert all(c["passed"] for c in checks), [c for c in checks if not c["passed"]]
    assert elapsed < 10


def test_06_eigenvalue_containment(report, large_run, capsys):
    start = time.perf_counter()
    settings = [(0.2, complex(tau)) for tau in CONTAINMENT_TAU] + [(t, complex(t)) for t in CONTAINMENT_T]
    fractions = {}
    for s, tau in settings:
        rep = large_run(s, tau)
        fractions[(s, tau)] = rep.inside_fraction
        with capsys.disabled():
            print(f"\n  s={s} tau={tau}: inside fraction {rep.inside_fraction:.4f}")
    elapsed = time.perf_counter() - start
    frac_ok = all(f >= 0.97 for f in fractions.values())
    ok = frac_ok and elapsed < 300
    report(6, "eigenvalues of X B inside the dilated D (N=1000, k=1000)", ok,
           f"min fraction {min(fractions.values()):.4f} over {len(settings)} settings, "
           f"fractions {'ok' if frac_ok else 'below 0.97'}, {elapsed:.0f} s against a 300 s budget")
    assert frac_ok, fractions
    assert elapsed < 300, f"containment runs took {elapsed:.0f} s"


def test_07_mass_at_origin(report):
    start = time.perf_counter()
    counts = []
    for N, steps, tau, seed in [(1000, 20, 0.2 - 0.19j, 0), (400, 200, 0.1, 1), (401, 100, 0.0, 2), (300, 300, 1.0, 3)]:
        s = 1.0 if tau == 1.0 else 0.2
        scheme = "product" if tau == s else "euler"
        cfg = SimConfig(N, steps, s, tau, scheme, seed=seed)
        x = sample_x(HALF_ZERO, cfg)
        eigs = spectrum(x, simulate_b(cfg))
        expected = sum(1 for j in range(N) if (j + 0.5) / N <= 0.5)
        counts.append((int(np.count_nonzero(np.abs(eigs) <= 1e-10)), expected))
    zero_ok = all(a == b for a, b in counts)
    mass_ok = True
    n_out = 0
    for s in (0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 3.0, 5.0):
        for tau in (s, 0.0, s + 0.5j * s, s - s * 1j):
            m = mass_at_origin(HALF_ZERO, s, tau)
            outside = outside_closure(HALF_ZERO, 0j, s)
            n_out += outside
            mass_ok &= (m == 0.5) if outside else (m is None)
    elapsed = time.perf_counter() - start
    ok = zero_ok and mass_ok and n_out > 0 and elapsed < 60
    report(7, "mass at the origin", ok,
           f"zero counts {counts}, mass_at_origin = 0.5 in all {n_out} settings with 0 outside D: {mass_ok}, "
           f"{elapsed:.1f} s")
    assert zero_ok, counts
    assert mass_ok and n_out > 0
    assert elapsed < 60


def test_08_harmonicity(report):
    start = time.perf_counter()
    t = 0.2
    points = [3 + 1j, -1 + 0.5j, 0.5 + 2j, 1.5 - 1.2j, -0.3 - 0.1j]
    hs = (1e-2, 5e-3, 2.5e-3)
    slopes = []
    laps = []
    for z in points:
        assert lifetime_T(TWO_ATOMS, z) > t
        s = lambda w: hj_value_outside(TWO_ATOMS, w, t)
        row = []
        for h in hs:
            row.append(abs(s(z + h) + s(z - h) + s(z + 1j * h) + s(z - 1j * h) - 4 * s(z)) / h ** 2)
        laps.append(row)
        slopes.append(math.log(row[0] / row[2]) / math.log(hs[0] / hs[2]))
    elapsed = time.perf_counter() - start
    ok = all(1.8 <= p <= 2.2 for p in slopes) and elapsed < 10
    report(8, "discrete Laplacian of the outside HJ value decays like h^2", ok,
           f"observed orders {', '.join(f'{p:.3f}' for p in slopes)}, {elapsed:.2f} s")
    assert all(1.8 <= p <= 2.2 for p in slopes), slopes
    assert elapsed < 10


def test_09_monotone_and_symmetric(report):
    start = time.perf_counter()
    rng = np.random.default_rng(9)
    laws = [DELTA1, TWO_ATOMS, HALF_ZERO, Law.uniform(1.0, 2.0)]
    bad_sign = 0
    bad_conj = 0
    n = 1000
    for i in range(n):
        law = laws[i % len(laws)]
        r = rng.uniform(0.2, 3.0)
        th = rng.uniform(0.02, math.pi - 0.02) * (1 if i % 2 else -1)
        h = 1e-3
        up = lifetime_T(law, r * np.exp(1j * (th + h)))
        down = lifetime_T(law, r * np.exp(1j * (th - h)))
        # T increases with |theta|: the centred difference has the sign of theta
        if np.sign(up - down) != np.sign(th) and abs(up - down) > 1e-13:
            bad_sign += 1
        lam = r * np.exp(1j * th)
        if lifetime_T(law, lam) != lifetime_T(law, np.conj(lam)):
            bad_conj += 1
    elapsed = time.perf_counter() - start
    ok = bad_sign == 0 and bad_conj == 0 and elapsed < 5
    report(9, "sign of dT/dtheta and conjugation symmetry", ok,
           f"{n} samples, sign violations {bad_sign}, conjugation mismatches {bad_conj}, {elapsed:.2f} s")
    assert bad_sign == 0 and bad_conj == 0
    assert elapsed < 5
