"""Acceptance suite: every criterion as one test, printing a PASS/FAIL line.

Budgets and tolerances are pinned in the assertions. Criteria 3 and 4 probe
the nonlinearity-matching behavior on the a=3.98 fractional Halvorsen family;
see /root/notes for the standing analysis of that parameter regime.
"""

import json
import math
import time

import numpy as np
import pytest

import mpmath

import fracrc as f
from fracrc import readout
from fracrc.harness import (EtaSweepConfig, GenerateConfig, LibraryCompareConfig,
                            LyapGridConfig, MultiExponentConfig,
                            ProbeRecipeConfig, read_table, run_eta_sweep,
                            run_generate, run_library_compare, run_lyap_grid,
                            run_probe, run_two_exponent)
from fracrc.metrics import correlation_sum

pytestmark = pytest.mark.acceptance

JOBS = 2


def _report(name: str, ok: bool, detail: str) -> bool:
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} — {detail}")
    return ok


# ---------------------------------------------------------------------------
# 1. Lorenz climate

def test_criterion_1_lorenz_climate():
    t0 = time.monotonic()
    traj = f.integrate(f.Lorenz(), [1.0, 1.0, 1.0], 20000).discard_transient(10000)
    lam = f.lyapunov_rosenstein(traj)
    cdim = f.correlation_dimension(traj)
    elapsed = time.monotonic() - t0
    ok = 0.75 <= lam <= 1.05 and 1.9 <= cdim <= 2.2 and elapsed < 30
    assert _report("1 lorenz-climate", ok,
                   f"lambda={lam:.3f} (in [0.75,1.05]), cdim={cdim:.3f} "
                   f"(in [1.9,2.2]), {elapsed:.1f}s (<30s)")


# ---------------------------------------------------------------------------
# 2. Thomas near-zero chaoticity

def test_criterion_2_thomas_lyapunov():
    t0 = time.monotonic()
    traj = f.integrate(f.Thomas(0.21), [0.1, 0.0, 0.0], 60000).discard_transient(10000)
    lam = f.lyapunov_rosenstein(traj)
    elapsed = time.monotonic() - t0
    ok = -0.02 <= lam <= 0.05 and elapsed < 60
    assert _report("2 thomas-lyapunov", ok,
                   f"lambda={lam:.4f} (in [-0.02,0.05]), {elapsed:.1f}s (<60s)")


# ---------------------------------------------------------------------------
# 3. Nonlinearity-matching peak

def test_criterion_3_matching_peak(tmp_path):
    t0 = time.monotonic()
    details = []
    ok = True
    for xi_num in (132, 160, 200):
        cfg = EtaSweepConfig(
            xi_numerators=(xi_num,),
            eta_numerators=tuple(range(xi_num - 24, xi_num + 25, 2)),
            a=3.98, seeds=5, block_size=3, spectral_radius=1e-3, ridge=1e-6,
            sync_len=1000, train_len=5000, predict_len=2000,
            offset_span=1000, transient=10000, seed=33,
        )
        run_eta_sweep(cfg, tmp_path / f"xi{xi_num}", jobs=JOBS)
        _, rows = read_table(tmp_path / f"xi{xi_num}" / "eta_sweep_normalized.csv")
        etas = np.array([int(r[4]) for r in rows]) / 50.0
        means = np.array([float(r[5]) for r in rows])
        peak = etas[int(np.argmax(means))]
        xi = xi_num / 50.0
        hit = abs(peak - xi) <= 0.08
        ok = ok and hit
        details.append(f"xi={xi:.2f}: argmax eta={peak:.2f} "
                       f"({'ok' if hit else 'off by %.2f' % abs(peak - xi)})")
    elapsed = time.monotonic() - t0
    ok = ok and elapsed < 1200
    assert _report("3 matching-peak", ok,
                   "; ".join(details) + f"; {elapsed:.0f}s (<1200s)")


# ---------------------------------------------------------------------------
# 4. Smallest-nonlinearity transition (two-exponent)

def test_criterion_4_transition(tmp_path):
    t0 = time.monotonic()
    cfg = MultiExponentConfig(
        n_trajectories=10, eta_numerators=tuple(range(54, 281, 4)),
        numerator_min=54, numerator_max=280, a=3.98, seeds=1,
        block_size=3, spectral_radius=1e-3, ridge=1e-6,
        sync_len=1000, train_len=5000, predict_len=2000, offset_span=500,
        transient=10000, lyap_threshold=0.0, seed=17,
    )
    result = run_two_exponent(cfg, tmp_path / "twoexp", jobs=JOBS)
    header, rows = read_table(tmp_path / "twoexp" / "two_exp.csv")
    idx = {h: i for i, h in enumerate(header)}
    above, below = [], []
    for row in rows:
        xi_s = min(int(row[0]), int(row[2])) / 50.0
        eta = int(row[idx["eta_num"]]) / 50.0
        cdim_pred = float(row[idx["cdim_pred"]])
        cdim_true = float(row[idx["cdim_true"]])
        err = (abs(cdim_pred - cdim_true)
               if math.isfinite(cdim_pred) else math.inf)
        if eta >= xi_s + 0.1:
            above.append(err)
        elif eta <= xi_s - 0.3:
            below.append(err)
    med_above = float(np.median(above))
    med_below = float(np.median(below))
    elapsed = time.monotonic() - t0
    ok = (result.status == "complete" and med_above < 0.15 and med_below > 0.3
          and elapsed < 1800)
    assert _report("4 transition", ok,
                   f"median err above xi_s+0.1: {med_above:.3f} (<0.15), "
                   f"below xi_s-0.3: {med_below:.3f} (>0.3), "
                   f"{len(rows)} cells, {elapsed:.0f}s (<1800s)")


# ---------------------------------------------------------------------------
# 5. Probe reconstruction of the smallest nonlinearity

def _run_probe_for(system: dict, out_dir, seed: int):
    cfg = ProbeRecipeConfig(
        source={"system": system}, n_steps=4000, transient=10000, dt=0.01,
        eta_start=52, eta_stop=280, eta_step=2, block_size=3,
        spectral_radius=0.1, ridge=1e-6, sync_len=100, train_len=1000,
        predict_len=2000, surrogate_count=20, match_tol=0.15, seed=seed,
    )
    run_probe(cfg, out_dir, jobs=JOBS)
    with open(out_dir / "probe_report.json") as fh:
        return json.load(fh)


def test_criterion_5_probe_table(tmp_path):
    t0 = time.monotonic()
    cases = [
        ("lorenz", {"name": "lorenz"}, 2.0, 0.2),
        ("halvorsen", {"name": "halvorsen", "a": 1.3,
                       "xi_numerators": [100, 100, 100]}, 2.0, 0.2),
        ("thomas", {"name": "thomas", "b": 0.21}, 3.0, 0.3),
    ]
    details = []
    ok = True
    for label, system, target, tol in cases:
        report = _run_probe_for(system, tmp_path / label, seed=11)
        if report["verdict"] != "found":
            ok = False
            details.append(f"{label}: verdict=failed")
            continue
        mu = report["mu_recon"]["value"]
        hit = abs(mu - target) <= tol
        ok = ok and hit
        details.append(f"{label}: mu={mu:.2f} (target {target}+-{tol})")
    elapsed = time.monotonic() - t0
    ok = ok and elapsed < 1800
    assert _report("5 probe-table", ok,
                   "; ".join(details) + f"; {elapsed:.0f}s (<1800s)")


# ---------------------------------------------------------------------------
# 6. Fractional-library ordering on classical reservoirs

def test_criterion_6_library_ordering(tmp_path):
    t0 = time.monotonic()
    cfg = LibraryCompareConfig(
        repetitions=100, d_small=100, d_large=1100, library_max_power=3,
        spectral_radius=0.2, ridge=1e-4, sync_len=1000, train_len=4000,
        predict_len=1500, offset_span=2000, transient=10000, seed=21,
    )
    run_library_compare(cfg, tmp_path / "lib", jobs=JOBS)
    _, rows = read_table(tmp_path / "lib" / "library_compare.csv")
    fh = {arm: [] for arm in ("plain_small", "fractional_small", "plain_large")}
    for row in rows:
        fh[row[0]].append(float(row[6]))
    stats = {}
    for arm, vals in fh.items():
        arr = np.array(vals)
        arr = arr[np.isfinite(arr)]
        stats[arm] = (arr.mean(), arr.std(ddof=1), len(arr))
    m_s, s_s, n_s = stats["plain_small"]
    m_f, s_f, n_f = stats["fractional_small"]
    m_l, _, _ = stats["plain_large"]
    pooled_se = math.sqrt(s_s ** 2 / n_s + s_f ** 2 / n_f)
    ordering = m_s < m_f < m_l
    separated = (m_f - m_s) >= pooled_se
    elapsed = time.monotonic() - t0
    ok = ordering and separated and elapsed < 1200
    assert _report("6 library-ordering", ok,
                   f"means (lyap times): small={m_s:.2f} < fractional={m_f:.2f} "
                   f"< large={m_l:.2f}; separation {(m_f - m_s):.2f} >= "
                   f"pooled SE {pooled_se:.2f}; {elapsed:.0f}s (<1200s)")


# ---------------------------------------------------------------------------
# 7. Oracle equivalences

def test_criterion_7_oracle_equivalences():
    t0 = time.monotonic()
    checks = []

    # ridge solution satisfies the regularized normal equations (1e-8 rel)
    traj = f.integrate(f.Lorenz(), [1.0, 1.0, 1.0], 11101).discard_transient(10000)
    machine = f.build(f.MinRCConfig(input_dim=3, block_size=3,
                                    spectral_radius=0.1, ridge=1e-6,
                                    exponents=(f.FracExponent(100),)))
    fitted = readout.train(machine, traj, 100)
    r = machine.zero_state()
    states = []
    for t in range(len(traj) - 1):
        r = machine.step(r, traj.data[t])
        states.append(r)
    G = machine.generalize_block(np.array(states)[100:])
    Y = traj.data[101:]
    lhs = fitted.w_out @ (G.T @ G + 1e-6 * np.eye(G.shape[1]))
    rhs = Y.T @ G
    ridge_rel = np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs))
    checks.append(("ridge", ridge_rel < 1e-8, f"{ridge_rel:.2e}"))

    # block-structured step equals the dense matrix-vector oracle (1e-14)
    rng = np.random.default_rng(0)
    m2 = f.build(f.MinRCConfig(input_dim=3, block_size=5, spectral_radius=0.4))
    rv = rng.normal(size=m2.state_dim)
    xv = rng.normal(size=3)
    dense = m2.reservoir_matrix() @ rv + m2.input_matrix() @ xv
    step_err = np.max(np.abs(m2.step(rv, xv) - dense))
    checks.append(("block-step", step_err < 1e-14, f"{step_err:.2e}"))

    # tree-based correlation sum equals the O(n^2) brute force at n=5000
    pts = traj.data[:5000]
    radii = np.geomspace(0.1, 20.0, 16)
    from scipy.spatial.distance import pdist
    pair = pdist(pts)
    brute = np.array([2 * np.count_nonzero(pair <= rad) for rad in radii])
    brute = brute / (len(pts) * (len(pts) - 1))
    tree = correlation_sum(pts, radii)
    checks.append(("corr-sum", np.array_equal(tree, brute), "exact"))

    # FT surrogate preserves the amplitude spectrum and total power (1e-10)
    x1 = traj.data[:8192, 0]
    surr = f.ft_surrogate(x1, seed=5)
    a0, a1 = np.abs(np.fft.rfft(x1)), np.abs(np.fft.rfft(surr))
    amp_rel = np.max(np.abs(a1 - a0)) / a0.max()
    pow_rel = abs(np.sum(surr ** 2) - np.sum(x1 ** 2)) / np.sum(x1 ** 2)
    checks.append(("surrogate", amp_rel < 1e-10 and pow_rel < 1e-10,
                   f"amp {amp_rel:.2e}, power {pow_rel:.2e}"))

    # frac_pow matches the arbitrary-precision oracle on 1e3 cases (1e-12)
    rng = np.random.default_rng(42)
    xs = rng.uniform(-50, 50, size=1000)
    nums = rng.integers(1, 150, size=1000) * 2
    dens = rng.integers(1, 80, size=1000)
    worst = 0.0
    with mpmath.workdps(40):
        for x, n, d in zip(xs, nums, dens):
            got = f.frac_pow(float(x), f.FracExponent(int(n), int(d)))
            want = float(mpmath.power(abs(mpmath.mpf(float(x))),
                                      mpmath.mpf(int(n)) / int(d)))
            if want != 0:
                worst = max(worst, abs(got - want) / abs(want))
    checks.append(("frac-pow", worst < 1e-12, f"{worst:.2e}"))

    elapsed = time.monotonic() - t0
    ok = all(c[1] for c in checks)
    detail = ", ".join(f"{name} {'ok' if good else 'BAD'} ({info})"
                       for name, good, info in checks)
    assert _report("7 oracle-equivalences", ok, detail + f"; {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# 8. Determinism of every recipe

def test_criterion_8_determinism(tmp_path):
    t0 = time.monotonic()
    runs = []

    def both(recipe, cfg, name):
        import os
        a, b = tmp_path / f"{name}_a", tmp_path / f"{name}_b"
        ra = recipe(cfg, a, jobs=JOBS)
        recipe(cfg, b, jobs=JOBS)
        same = all((a / os.path.basename(t)).read_bytes() ==
                   (b / os.path.basename(t)).read_bytes()
                   for t in ra.tables)
        runs.append((name, same))

    both(run_generate, GenerateConfig(system={"name": "lorenz"}, n_steps=200,
                                      transient=50, seed=3), "generate")
    both(run_lyap_grid, LyapGridConfig(a_values=(1.3,), xi_numerators=(100,),
                                       n_steps=12000, transient=2000, seed=3),
         "lyap_grid")
    both(run_eta_sweep, EtaSweepConfig(xi_numerators=(100,),
                                       eta_numerators=(96, 100, 104),
                                       a=1.3, seeds=2, sync_len=100,
                                       train_len=700, predict_len=300,
                                       offset_span=200, transient=3000,
                                       seed=3), "eta_sweep")
    both(run_two_exponent, MultiExponentConfig(
        n_trajectories=2, eta_numerators=(80, 120, 160), numerator_min=54,
        numerator_max=160, a=3.98, seeds=1, sync_len=200, train_len=1500,
        predict_len=800, offset_span=100, transient=5000,
        lyap_threshold=-1.0, seed=3), "two_exp")
    both(run_library_compare, LibraryCompareConfig(
        repetitions=3, d_small=40, d_large=120, sync_len=200, train_len=800,
        predict_len=300, offset_span=100, transient=2000, seed=3), "library")
    both(run_probe, ProbeRecipeConfig(
        source={"system": {"name": "lorenz"}}, n_steps=2500, transient=3000,
        eta_start=96, eta_stop=104, eta_step=4, surrogate_count=4,
        predict_len=800, seed=3), "probe")

    elapsed = time.monotonic() - t0
    ok = all(same for _, same in runs)
    detail = ", ".join(f"{name} {'identical' if same else 'DIFFERS'}"
                       for name, same in runs)
    assert _report("8 determinism", ok, detail + f"; {elapsed:.0f}s")
