"""Acceptance suite: one test per deliverable criterion.

Every test evaluates its criterion at the stated tolerance and prints a
single PASS/FAIL line (run with `pytest -s` to see them as they go;
failed criteria carry the full point-by-point table in the assertion
message).
"""

import math
import time

import numpy as np
import scipy.linalg

import spincrit as sc

PI8 = math.pi / 8
OMEGA_C = math.cos(2 * PI8)
GRID_13 = np.linspace(0.05, 0.65, 13)

_CACHE: dict = {}


def solve_cached(n, omega, theta=PI8, gamma=1.0):
    key = (n, round(float(omega), 14), round(float(theta), 14), gamma)
    if key not in _CACHE:
        params = sc.ModelParams(n, float(omega), gamma, float(theta))
        _CACHE[key] = sc.solve_steady_state(sc.build_generator(params))
    return _CACHE[key]


def normalized_sz(params):
    return np.asarray(sc.build_operators(params).sz) / params.s


def verdict(num, ok, detail):
    line = f"ACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} | {detail}"
    print(line)
    return line


def test_criterion_1_steady_magnetization_matches_mean_field():
    start = time.time()
    rows = []
    for omega in GRID_13:
        params = sc.ModelParams(100, float(omega), 1.0, PI8)
        steady = solve_cached(100, omega)
        sz = sc.expectation(normalized_sz(params), steady.rho)
        target = -math.sqrt(1.0 - (omega / OMEGA_C) ** 2)
        rows.append((float(omega), abs(sz - target)))
    elapsed = time.time() - start
    bad = [(o, d) for o, d in rows if d > 0.05]
    worst = max(d for _, d in rows)
    ok = not bad and elapsed < 60.0
    line = verdict(
        1,
        ok,
        f"N=100, 13 points in [0.05, 0.65]: max |<s_z> + M| = {worst:.4f} "
        f"(tol 0.05), runtime {elapsed:.1f}s (< 60s)",
    )
    table = ", ".join(f"omega={o:.2f}: {d:.4f}" for o, d in rows)
    assert ok, f"{line}\nper-point |<s_z> + M|: {table}"


def test_criterion_2_steady_variance_matches_mean_field():
    rows = []
    for omega in GRID_13:
        if omega > 0.8 * OMEGA_C + 1e-12:
            continue
        params = sc.ModelParams(100, float(omega), 1.0, PI8)
        steady = solve_cached(100, omega)
        exact = math.sqrt(sc.variance(normalized_sz(params), steady.rho))
        predicted = math.sqrt(
            sc.predict_signals(sc.hp_coefficients(params), 100).var_sz
        )
        rows.append((float(omega), abs(exact - predicted) / predicted))
    bad = [(o, r) for o, r in rows if r > 0.20]
    worst = max(r for _, r in rows)
    ok = not bad
    line = verdict(
        2,
        ok,
        f"N=100, {len(rows)} points with omega <= 0.8*omega_c: max relative "
        f"error of sqrt(var s_z) = {worst:.3f} (tol 0.20)",
    )
    table = ", ".join(f"omega={o:.2f}: {r:.3f}" for o, r in rows)
    assert ok, f"{line}\nper-point relative errors: {table}"


def test_criterion_3_error_propagation_tracks_bound_and_decreases():
    rows = []
    for omega in GRID_13:
        if not (0.1 * OMEGA_C - 1e-12 <= omega <= 0.8 * OMEGA_C + 1e-12):
            continue
        params = sc.ModelParams(100, float(omega), 1.0, PI8)
        step = sc.default_fd_step(params, "omega")
        numeric = sc.error_propagation(
            normalized_sz(params),
            lambda lam: solve_cached(100, lam),
            float(omega),
            step,
        )
        analytic = sc.bound_omega(params, 100)
        rows.append((float(omega), numeric, abs(numeric - analytic) / analytic))
    bad = [(o, r) for o, _, r in rows if r > 0.15]
    decreasing = all(
        later < earlier * 1.001
        for (_, earlier, _), (_, later, _) in zip(rows, rows[1:])
    )
    worst = max(r for _, _, r in rows)
    ok = not bad and decreasing
    line = verdict(
        3,
        ok,
        f"N=100, {len(rows)} points in [0.1, 0.8]*omega_c: max relative error "
        f"= {worst:.3f} (tol 0.15), decreasing towards omega_c: {decreasing}",
    )
    table = ", ".join(f"omega={o:.2f}: ep={e:.5f} rel={r:.3f}" for o, e, r in rows)
    assert ok, f"{line}\nper-point: {table}"


def test_criterion_4_critical_qfi_scaling():
    start = time.time()
    ns = (20, 40, 60, 80, 100, 120)
    qfis = []
    for n in ns:
        params = sc.ModelParams(n, OMEGA_C, 1.0, PI8)
        step = sc.default_fd_step(params, "omega")
        qfis.append(
            sc.qfi_steady(
                lambda lam, n=n: solve_cached(n, lam), OMEGA_C, step=step
            )
        )
    fit = sc.fit_power_law(ns, qfis)
    elapsed = time.time() - start
    ok = 1.15 <= fit.exponent <= 1.50 and fit.r_squared >= 0.98 and elapsed < 300.0
    line = verdict(
        4,
        ok,
        f"QFI(omega_c) over N={ns}: exponent b = {fit.exponent:.3f} "
        f"(window [1.15, 1.50]), prefactor a = {fit.prefactor:.3f}, "
        f"R^2 = {fit.r_squared:.4f} (>= 0.98), runtime {elapsed:.0f}s (< 300s)",
    )
    assert ok, f"{line}\nQFI values: {list(zip(ns, [f'{q:.2f}' for q in qfis]))}"


def test_criterion_5_theta_bound_minimum_near_optimal_angle():
    target = sc.optimal_theta(0.5, 1.0)  # pi/6
    thetas = np.arange(0.43, 0.6051, 0.0125)
    bounds = []
    for theta in thetas:
        params = sc.ModelParams(100, 0.5, 1.0, float(theta))
        step = sc.default_fd_step(params, "theta")
        bounds.append(
            sc.error_propagation(
                normalized_sz(params),
                lambda lam: solve_cached(100, 0.5, theta=lam),
                float(theta),
                step,
            )
        )
    best = float(thetas[int(np.argmin(bounds))])
    interior = 0 < int(np.argmin(bounds)) < len(thetas) - 1
    ok = abs(best - target) <= 0.05 and interior
    line = verdict(
        5,
        ok,
        f"error propagation vs theta at omega=0.5, N=100: minimum at "
        f"theta = {best:.4f}, optimal angle = {target:.4f}, "
        f"|difference| = {abs(best - target):.4f} (tol 0.05)",
    )
    assert ok, line


def test_criterion_6_perturbed_scheme_chi_squared():
    # fixed point against the closed form
    omega = 0.5 * OMEGA_C
    params = sc.ModelParams(100, omega, 1.0, PI8)
    steady = solve_cached(100, omega)
    m = math.sqrt(1.0 - 0.25)
    direction = np.array([0.0, m, math.sqrt(1.0 - m * m)])
    generator = sc.spin_direction_operator(sc.build_operators(params), direction)
    chi2 = sc.chi_squared(sc.qfi_perturbed(steady, generator), 100)
    analytic = 0.3587194676071504
    rel = abs(chi2 - analytic) / analytic

    # exponent of chi^2 at the critical coupling with G = S_z
    ns = (20, 40, 60, 80, 100, 120)
    chis = []
    for n in ns:
        par = sc.ModelParams(n, OMEGA_C, 1.0, PI8)
        sz = np.asarray(sc.build_operators(par).sz)
        chis.append(sc.chi_squared(sc.qfi_perturbed(solve_cached(n, OMEGA_C), sz), n))
    fit = sc.fit_power_law(ns, chis)
    ok = rel <= 0.20 and -0.45 <= fit.exponent <= -0.22
    line = verdict(
        6,
        ok,
        f"chi^2 at omega=0.5*omega_c, N=100: {chi2:.4f} vs analytic "
        f"{analytic:.4f} (rel {rel:.3f}, tol 0.20); critical fit exponent "
        f"{fit.exponent:.3f} (window [-0.45, -0.22])",
    )
    assert ok, f"{line}\nchi^2 values: {list(zip(ns, [f'{c:.4f}' for c in chis]))}"


def _uhlmann_fidelity(rho, sigma):
    root = scipy.linalg.sqrtm(rho)
    inner = scipy.linalg.sqrtm(root @ sigma @ root)
    return float(np.trace(inner).real) ** 2


def test_criterion_7_small_system_oracles():
    rng = np.random.default_rng(77)
    worst_fid, worst_sld = 0.0, 0.0
    for _ in range(5):
        theta = float(rng.uniform(0.05, 0.6))
        if abs(theta - math.pi / 4) < 0.05:
            theta = 0.62
        params = sc.ModelParams(2, float(rng.uniform(0.1, 0.6)), 1.0, theta)
        solver = sc.steady_solver(params, "omega")
        h = 1e-3
        qfi = sc.qfi_steady(solver, params.omega, step=h)
        fid = _uhlmann_fidelity(
            solver(params.omega - h).rho, solver(params.omega + h).rho
        )
        oracle = 8.0 * (1.0 - math.sqrt(fid)) / (2.0 * h) ** 2
        worst_fid = max(worst_fid, abs(qfi - oracle) / oracle)

        steady = solver(params.omega)
        drho = sc.steady_derivative(solver, params.omega, h)
        lmat = sc.sld(steady, drho)
        qfi_from_sld = np.trace(steady.rho @ lmat @ lmat).real
        worst_sld = max(worst_sld, abs(qfi_from_sld - qfi) / qfi)
    ok = worst_fid <= 1e-4 and worst_sld <= 1e-8
    line = verdict(
        7,
        ok,
        f"N=2 oracles over 5 random points: QFI vs Uhlmann fidelity rel "
        f"<= {worst_fid:.2e} (tol 1e-4), Tr(rho L^2) vs QFI rel "
        f"<= {worst_sld:.2e} (tol 1e-8)",
    )
    assert ok, line


def test_criterion_8_exact_identities():
    rng = np.random.default_rng(5)
    worst_det = 0.0
    for _ in range(20):
        theta = float(rng.uniform(0.0, math.pi / 4 - 0.05))
        gamma = float(rng.uniform(0.3, 2.5))
        oc = gamma * math.cos(2 * theta)
        params = sc.ModelParams(30, float(rng.uniform(0.02, 0.9)) * oc, gamma, theta)
        gauss = sc.gaussian_steady_state(sc.hp_coefficients(params))
        worst_det = max(worst_det, abs(gauss.sigma11 * gauss.sigma22 - 1.0))

    params = sc.ModelParams(20, 0.0, 1.0, 0.0)
    steady = sc.solve_steady_state(sc.build_generator(params))
    ops = sc.build_operators(params)
    chi2 = sc.chi_squared(sc.qfi_perturbed(steady, np.asarray(ops.sx)), 20)
    dev_chi = abs(chi2 - 1.0)

    mat = rng.standard_normal((21, 21)) + 1j * rng.standard_normal((21, 21))
    hermitian = mat + mat.conj().T
    worst_rank1 = 0.0
    for gen_mat in (np.asarray(ops.sx), hermitian):
        qfi = sc.qfi_perturbed(steady, gen_mat)
        ref = 4.0 * sc.variance(gen_mat, steady.rho)
        worst_rank1 = max(worst_rank1, abs(qfi - ref) / ref)

    ok = worst_det <= 1e-10 and dev_chi <= 1e-6 and worst_rank1 <= 1e-8
    line = verdict(
        8,
        ok,
        f"det Sigma deviation <= {worst_det:.2e} (tol 1e-10) over 20 random "
        f"points; |chi^2 - 1| = {dev_chi:.2e} at the dark pole (tol 1e-6); "
        f"rank-1 QFI vs 4*variance rel <= {worst_rank1:.2e} (tol 1e-8)",
    )
    assert ok, line


def test_criterion_9_structural_selftest():
    start = time.time()
    checks = sc.run_selftest(seed=0)
    elapsed = time.time() - start
    failed = [c.name for c in checks if not c.passed]
    ok = not failed and elapsed < 120.0
    line = verdict(
        9,
        ok,
        f"selftest: {sum(c.passed for c in checks)}/{len(checks)} checks "
        f"passed in {elapsed:.1f}s (< 120s)"
        + (f"; failed: {failed}" if failed else ""),
    )
    assert ok, line
