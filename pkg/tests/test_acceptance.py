"""End-to-end acceptance checks.

Ten numbered criteria, mirroring the README's acceptance-suite list.  Each
test prints one "[criterion k] PASS/FAIL ..." line with the measured
numbers (through capsys.disabled(), so the lines land in the terminal even
without -s), then asserts the criterion at its stated tolerance.

Criteria 7-9 share one module-scoped Monte-Carlo sweep at the default
configuration (4 ratios x 2 utilities x 100 drops); criterion 10 reruns
that sweep single-worker and byte-compares the CSVs.  The sweep dominates
the suite's runtime (tens of minutes); everything else finishes in
seconds.

Criterion 1 is expected to FAIL: the uplink cross factor's true zero sits
at alpha ~= 0.27762, so directly at 0.275 the first-power ratio
|C_u(0.275)| / |C_u(1)| is ~4.7e-3, above the stated 1e-3 threshold.  The
check is kept at the stated threshold instead of being widened; see
README.
"""

import time

import numpy as np
import pytest

from alphaduplex import (
    BarrierProblem,
    DecisionVector,
    ExperimentConfig,
    FadingModel,
    LinkEvaluator,
    ProblemSpec,
    SchemeKind,
    SystemParams,
    UtilityKind,
    compare_all,
    cross_factor_downlink,
    cross_factor_uplink,
    csv_text,
    multi_start_solve,
    realize,
    run_sweep,
    solve,
    utility,
    utility_gradient,
)


def _verdict(capsys, k: int, ok: bool, detail: str) -> bool:
    with capsys.disabled():
        print(f"\n[criterion {k}] {'PASS' if ok else 'FAIL'} {detail}", flush=True)
    return ok


@pytest.fixture(scope="module")
def default_sweep(profile):
    cfg = ExperimentConfig()
    t0 = time.perf_counter()
    records = run_sweep(cfg, max_workers=8, profile=profile)
    elapsed = time.perf_counter() - t0
    by = {(r.ratio, r.utility_kind, r.scheme): r for r in records}
    return cfg, records, by, elapsed


def test_criterion_01_orthogonality_point(capsys):
    t0 = time.perf_counter()
    cu_box = abs(cross_factor_uplink(0.275))
    cu_full = abs(cross_factor_uplink(1.0))
    cb_box = cross_factor_downlink(0.275)
    ratio = cu_box / cu_full
    ok = ratio <= 1e-3 and cb_box > 0
    detail = (
        f"|C_u(0.275)|/|C_u(1)| = {ratio:.3e} vs threshold 1e-3, "
        f"C_b(0.275) = {cb_box:.5f} > 0; C_u's true zero is at alpha = 0.2776157; "
        f"squared-magnitude ratio = {ratio ** 2:.3e} ({time.perf_counter() - t0:.2f}s)"
    )
    assert _verdict(capsys, 1, ok, detail), detail


def test_criterion_02_monotone_leakage(profile, capsys):
    t0 = time.perf_counter()
    grid = np.linspace(0.275, 1.0, 64)
    du = np.diff(profile.leakage_sq_uplink(grid))
    db = np.diff(profile.leakage_sq_downlink(grid))
    ok = bool(np.all(du >= 0) and np.all(db >= 0))
    detail = (
        f"min step of |C_u|^2 = {du.min():.3e}, of |C_b|^2 = {db.min():.3e} "
        f"on the 64-point grid over [0.275, 1] ({time.perf_counter() - t0:.2f}s)"
    )
    assert _verdict(capsys, 2, ok, detail), detail


def test_criterion_03_gradient_oracle(profile, capsys):
    t0 = time.perf_counter()
    params = SystemParams(N=3)
    net = realize(params, 2024)
    rng = np.random.default_rng(321)
    worst = 0.0
    for _ in range(20):
        x = DecisionVector(
            p_u=rng.uniform(0.05, 1.0, 3) * params.p_u_max,
            p_b=rng.uniform(params.p_b_min, 0.8 * params.p_b_tot / 3, 3),
            alpha=rng.uniform(0.3, 0.95, 3),
        )
        z = x.stacked()
        for kind in UtilityKind:
            g = utility_gradient(x, net, profile, kind)
            fd = np.zeros_like(z)
            for k in range(z.size):
                h = 1e-6 * (1.0 + abs(z[k]))
                zp, zm = z.copy(), z.copy()
                zp[k] += h
                zm[k] -= h
                fd[k] = (
                    utility(DecisionVector.from_stacked(zp, 3), net, profile, kind)
                    - utility(DecisionVector.from_stacked(zm, 3), net, profile, kind)
                ) / (2.0 * h)
            err = float(np.linalg.norm(fd - g) / max(1.0, np.linalg.norm(g)))
            worst = max(worst, err)
    ok = worst <= 1e-4
    detail = (
        f"worst norm-relative gradient error {worst:.3e} vs 1e-4 over 20 points, "
        f"both utilities, N=3 ({time.perf_counter() - t0:.2f}s)"
    )
    assert _verdict(capsys, 3, ok, detail), detail


def test_criterion_04_convex_sanity(profile, capsys):
    t0 = time.perf_counter()
    # Maximize x on [0, 1]: boundary optimum at x = 1.
    prob = BarrierProblem(
        dim=1,
        utility=lambda z: float(z[0]),
        gradient=lambda z: np.ones(1),
        A=[[1.0], [-1.0]],
        b=[1.0, 0.0],
    )
    res1 = solve(prob, x0=np.array([0.5]))
    err_1d = abs(float(res1.x_opt[0]) - 1.0)

    params = SystemParams(N=1)
    spec = ProblemSpec(params, UtilityKind.SUM_RATE, realize(params, 6), profile)
    res2 = solve(spec)
    x = res2.x_opt
    slacks = (
        abs(x.p_u[0] - params.p_u_max) / params.p_u_max,
        abs(x.p_b[0] - params.p_b_tot) / params.p_b_tot,
        abs(x.alpha[0] - 1.0),
    )
    ok = (
        res1.converged
        and res2.converged
        and err_1d <= 1e-4
        and max(slacks) <= 1e-4
    )
    detail = (
        f"1-D boundary gap {err_1d:.2e} vs 1e-4; single-cell bound slacks "
        f"(p_u, p_b, alpha) = ({slacks[0]:.2e}, {slacks[1]:.2e}, {slacks[2]:.2e}) "
        f"vs 1e-4 ({time.perf_counter() - t0:.2f}s)"
    )
    assert _verdict(capsys, 4, ok, detail), detail


def test_criterion_05_grid_oracle(profile, capsys):
    t0 = time.perf_counter()
    params = SystemParams(N=2, fading=FadingModel.NONE)
    net = realize(params, 1234)
    spec = ProblemSpec(params, UtilityKind.SUM_RATE, net, profile)
    ev = LinkEvaluator(net, profile)

    g = 9
    pu_vals = np.linspace(0.0, params.p_u_max, g)
    pb_vals = np.linspace(params.p_b_min, params.p_b_tot - params.p_b_min, g)
    al_vals = np.linspace(params.alpha_min, 1.0, g)
    axes = np.meshgrid(pu_vals, pu_vals, pb_vals, pb_vals, al_vals, al_vals, indexing="ij")
    cols = [a.ravel() for a in axes]
    pu = np.column_stack(cols[0:2])
    pb = np.column_stack(cols[2:4])
    al = np.column_stack(cols[4:6])
    feasible = pb.sum(axis=1) <= params.p_b_tot
    pu, pb, al = pu[feasible], pb[feasible], al[feasible]

    grid_best = -np.inf
    for lo in range(0, len(pu), 65536):
        hi = lo + 65536
        vals = ev.utility_batch(pu[lo:hi], pb[lo:hi], al[lo:hi], UtilityKind.SUM_RATE)
        grid_best = max(grid_best, float(vals.max()))

    res = multi_start_solve(spec, n_starts=5, seed=0)
    ok = res.utility >= grid_best * (1.0 - 1e-3)
    detail = (
        f"solver {res.utility:.6e} vs grid best {grid_best:.6e} over "
        f"{len(pu)} feasible grid points (relative margin "
        f"{res.utility / grid_best - 1.0:+.2e}, tolerance -1e-3) "
        f"({time.perf_counter() - t0:.1f}s)"
    )
    assert _verdict(capsys, 5, ok, detail), detail


def test_criterion_06_scheme_dominance(profile, capsys):
    t0 = time.perf_counter()
    params = SystemParams()
    failures = []
    margins = []
    for seed in range(50):
        net = realize(params, seed)
        adaptive, hd, fd, fixed = compare_all(net, profile, params, UtilityKind.SUM_RATE)
        worst = min(
            adaptive.utility - hd.utility,
            adaptive.utility - fd.utility,
            adaptive.utility - fixed.utility,
        )
        margins.append(worst / abs(adaptive.utility))
        if worst < 0:
            failures.append(seed)
    ok = not failures
    detail = (
        f"adaptive >= HD, FD, fixed on {50 - len(failures)}/50 seeds "
        f"(N=9, SumRate; min relative margin {min(margins):+.2e}"
        + (f"; failing seeds {failures}" if failures else "")
        + f") ({time.perf_counter() - t0:.0f}s)"
    )
    assert _verdict(capsys, 6, ok, detail), detail


def test_criterion_07_sum_rate_trends(default_sweep, capsys):
    cfg, _, by, elapsed = default_sweep
    kind = UtilityKind.SUM_RATE
    order_ok = True
    orders = []
    for ratio in cfg.ratio_grid:
        ad = by[(ratio, kind, SchemeKind.ALPHA_DUPLEX_OPT)].mean_total
        fd = by[(ratio, kind, SchemeKind.FULL_DUPLEX_PC)].mean_total
        hd = by[(ratio, kind, SchemeKind.HALF_DUPLEX_PC)].mean_total
        orders.append((ratio, ad, fd, hd))
        if not (ad >= fd >= hd):
            order_ok = False
    upper = cfg.ratio_grid[-2:]
    gains_hd = []
    gains_fd = []
    for ratio in upper:
        ad = by[(ratio, kind, SchemeKind.ALPHA_DUPLEX_OPT)].mean_total
        fd = by[(ratio, kind, SchemeKind.FULL_DUPLEX_PC)].mean_total
        hd = by[(ratio, kind, SchemeKind.HALF_DUPLEX_PC)].mean_total
        gains_hd.append(ad / hd - 1.0)
        gains_fd.append(ad / fd - 1.0)
    bands_ok = all(0.25 <= g <= 0.60 for g in gains_hd) and all(
        0.03 <= g <= 0.20 for g in gains_fd
    )
    ok = order_ok and bands_ok
    detail = (
        "mean total ordering adaptive >= FD >= HD "
        + ("holds" if order_ok else f"FAILS ({orders})")
        + " at all ratios; gains at upper ratios "
        + ", ".join(
            f"r={r}: +{gh * 100:.1f}% over HD (band 25-60), +{gf * 100:.1f}% over FD (band 3-20)"
            for r, gh, gf in zip(upper, gains_hd, gains_fd)
        )
        + f" (sweep {elapsed:.0f}s)"
    )
    assert _verdict(capsys, 7, ok, detail), detail


def test_criterion_08_uplink_vulnerability(default_sweep, capsys):
    cfg, _, by, _ = default_sweep
    kind = UtilityKind.SUM_RATE
    r0 = cfg.ratio_grid[0]
    hd_ul = by[(r0, kind, SchemeKind.HALF_DUPLEX_PC)].mean_ul
    fd_ul = by[(r0, kind, SchemeKind.FULL_DUPLEX_PC)].mean_ul
    ad_ul = by[(r0, kind, SchemeKind.ALPHA_DUPLEX_OPT)].mean_ul
    fd_drop = 1.0 - fd_ul / hd_ul
    ad_drop = 1.0 - ad_ul / hd_ul
    ok = fd_drop >= 0.40 and ad_drop < fd_drop
    detail = (
        f"at ratio {r0}: FD uplink deterioration {fd_drop * 100:.1f}% vs HD "
        f"(required >= 40%), adaptive deterioration {ad_drop * 100:.1f}% "
        f"(required strictly smaller)"
    )
    assert _verdict(capsys, 8, ok, detail), detail


def test_criterion_09_fairness_trends(default_sweep, capsys):
    cfg, _, by, _ = default_sweep
    kind = UtilityKind.SUM_LOG_RATE
    ul_ok = True
    ul_pairs = []
    for ratio in cfg.ratio_grid:
        ad = by[(ratio, kind, SchemeKind.ALPHA_DUPLEX_OPT)].mean_ul
        hd = by[(ratio, kind, SchemeKind.HALF_DUPLEX_PC)].mean_ul
        ul_pairs.append(f"r={ratio}: {ad:.3f} vs HD {hd:.3f}")
        if ad < hd:
            ul_ok = False
    # p_u_max in {0.1, 0.5, 1.0} W maps to ratios {0.0025, 0.0125, 0.025}.
    alpha_ratios = (0.0025, 0.0125, 0.025)
    alphas = [
        by[(r, kind, SchemeKind.ALPHA_DUPLEX_OPT)].mean_alpha for r in alpha_ratios
    ]
    alpha_ok = bool(np.all(np.diff(alphas) >= 0))
    ok = ul_ok and alpha_ok
    detail = (
        "sum-log adaptive uplink >= HD uplink "
        + ("holds at every ratio" if ul_ok else "FAILS")
        + " (" + "; ".join(ul_pairs) + "); mean selected alpha over p_u_max "
        f"{{0.1, 0.5, 1}} W = {[round(a, 4) for a in alphas]} "
        + ("non-decreasing" if alpha_ok else "NOT non-decreasing")
    )
    assert _verdict(capsys, 9, ok, detail), detail


def test_criterion_10_determinism(default_sweep, profile, tmp_path, capsys):
    cfg, records8, _, _ = default_sweep
    t0 = time.perf_counter()
    records1 = run_sweep(cfg, max_workers=1, profile=profile)
    text8 = csv_text(records8)
    text1 = csv_text(records1)
    path8 = tmp_path / "sweep_w8.csv"
    path1 = tmp_path / "sweep_w1.csv"
    path8.write_text(text8, encoding="utf-8", newline="\n")
    path1.write_text(text1, encoding="utf-8", newline="\n")
    ok = path8.read_bytes() == path1.read_bytes()
    detail = (
        f"full-sweep CSVs under 8 and 1 workers are "
        f"{'byte-identical' if ok else 'DIFFERENT'} "
        f"({len(text8.splitlines())} lines; single-worker rerun "
        f"{time.perf_counter() - t0:.0f}s)"
    )
    assert _verdict(capsys, 10, ok, detail), detail
