"""Acceptance suite: one test per criterion, printing one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. The heavyweight scenario runs (criteria 4-6, 8, 9) use the pinned
configs under ``configs/``.
"""

import json
import time

import numpy as np
import pytest

from mfcbf.barriers import BarrierSpec, ClassKSpec, assemble_constraint, barrier_value, dh_ds_analytic
from mfcbf.baseline import PairwiseSpec, solve_pairwise_cbf
from mfcbf.bench import run_benchmark, write_benchmark_csv
from mfcbf.config import parse_scenario
from mfcbf.dynamics import DynamicsSpec, step
from mfcbf.kernels import KernelSpec
from mfcbf.logio import write_log
from mfcbf.measures import EmpiricalMeasure, mmd_grad_particles, mmd_sq_half
from mfcbf.qp import ControlBox, project_halfspace_box, solve_dense_qp
from mfcbf.sim import run_scenario

from conftest import CONFIG_DIR
from oracles import evolve_agents_exact
from test_qp import kkt_check, random_instance, row_of


def report(num: int, desc: str, ok: bool, detail: str = "") -> None:
    line = f"[acceptance] criterion {num} ({desc}): {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" -- {detail}"
    print(line)
    assert ok, line


def load_cfg(name: str, **overrides):
    with open(CONFIG_DIR / name, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(doc.get(key), dict):
            doc[key] = {**doc[key], **value}
        else:
            doc[key] = value
    return parse_scenario(json.dumps(doc))


@pytest.fixture(scope="module")
def avoidance_log():
    return run_scenario(load_cfg("avoidance_d3_n50.json"))


def test_criterion_1_gradient_suite():
    started = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for trial in range(100):
        dim = int(rng.choice([1, 2, 3, 6]))
        n, m = int(rng.integers(1, 21)), int(rng.integers(1, 21))
        family = "gaussian" if trial % 2 == 0 else "inverse_multiquadric"
        sigma = float(rng.uniform(0.7, 2.0))
        k = KernelSpec(family, sigma)
        rho = EmpiricalMeasure.uniform(rng.normal(scale=1.3, size=(n, dim)))
        ref = EmpiricalMeasure.uniform(rng.normal(scale=1.3, size=(m, dim)))
        ana = mmd_grad_particles(k, rho, ref)
        num = np.zeros_like(ana)
        h = 1e-5
        for i in range(n):
            for c in range(dim):
                plus, minus = rho.points.copy(), rho.points.copy()
                plus[i, c] += h
                minus[i, c] -= h
                num[i, c] = (
                    mmd_sq_half(k, EmpiricalMeasure(plus, rho.weights), ref)
                    - mmd_sq_half(k, EmpiricalMeasure(minus, rho.weights), ref)
                ) / (2 * h)
        rel = np.linalg.norm(num - ana) / max(np.linalg.norm(ana), 1e-9)
        worst = max(worst, rel)
    elapsed = time.perf_counter() - started
    report(
        1,
        "discrepancy gradient vs central differences",
        worst <= 1e-6 and elapsed < 10.0,
        f"worst rel err {worst:.2e}, {elapsed:.1f}s",
    )


def test_criterion_2_chain_rule_convergence():
    started = time.perf_counter()
    rng = np.random.default_rng(102)
    ratios = []
    for _ in range(50):
        model = str(rng.choice(["single_integrator", "double_integrator"]))
        mode = str(rng.choice(["avoidance", "tracking"]))
        d = int(rng.integers(1, 4))
        dyn = DynamicsSpec(model, d)
        n, m = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        X = rng.normal(scale=1.2, size=(n, dyn.state_dim))
        Y = rng.normal(scale=1.2, size=(m, dyn.state_dim))
        V = rng.normal(size=(m, dyn.state_dim))
        Q = rng.normal(size=(n, d))
        spec = BarrierSpec(
            mode,
            float(rng.uniform(0.2, 0.8)),
            ClassKSpec("linear", 1.0),
            KernelSpec("gaussian", float(rng.uniform(0.8, 2.0))),
        )
        row = assemble_constraint(
            spec, dyn, 0.0, EmpiricalMeasure.uniform(X), EmpiricalMeasure.uniform(Y), V
        )
        analytic = dh_ds_analytic(row, Q)

        def H(t):
            Xa = evolve_agents_exact(dyn.model, d, X, Q, t)
            return barrier_value(
                spec, t, EmpiricalMeasure.uniform(Xa), EmpiricalMeasure.uniform(Y + t * V)
            )

        err = [abs((H(dt) - H(-dt)) / (2 * dt) - analytic) for dt in (1e-3, 5e-4)]
        if err[1] > 1e-13:
            ratios.append(err[0] / err[1])
    elapsed = time.perf_counter() - started
    ratios = np.array(ratios)
    in_band = bool(np.all((ratios >= 3.0) & (ratios <= 5.0)))
    report(
        2,
        "analytic barrier rate is second-order consistent",
        in_band and len(ratios) >= 40 and elapsed < 30.0,
        f"{len(ratios)} measurable scenarios, ratio range "
        f"[{ratios.min():.3f}, {ratios.max():.3f}], {elapsed:.1f}s",
    )


def test_criterion_3_qp_exactness():
    started = time.perf_counter()
    rng = np.random.default_rng(103)
    solved = 0
    worst_gap = 0.0
    for _ in range(1000):
        w, q_nom, c, b, box = random_instance(rng)
        qa, ra = project_halfspace_box(q_nom, row_of(c, b), box, weights=w)
        qb, rb = solve_dense_qp(w, q_nom.ravel(), c.reshape(1, -1), [b], box)
        assert (ra.status == "infeasible") == (rb.status == "infeasible")
        if ra.status == "infeasible":
            continue
        kkt_check(qa, ra, w, q_nom, c, b, box)
        obj_a = float(np.sum(w[:, None] * (qa - q_nom) ** 2))
        obj_b = float(np.sum(w[:, None] * (qb - q_nom) ** 2))
        worst_gap = max(worst_gap, abs(obj_a - obj_b))
        solved += 1
    elapsed = time.perf_counter() - started
    report(
        3,
        "exact dual projection matches splitting solver",
        worst_gap <= 1e-6 and solved >= 800 and elapsed < 60.0,
        f"{solved} solved, worst objective gap {worst_gap:.2e}, {elapsed:.1f}s",
    )


def test_criterion_4_avoidance_reproduction(avoidance_log):
    started = time.perf_counter()
    log = avoidance_log
    statuses = log.statuses()
    ok_small = (
        log.min_h() >= 0.0
        and statuses.count("projected") > 0
        and statuses.count("infeasible") == 0
    )
    stretch = run_scenario(load_cfg("avoidance_d3_n50.json", initial={"count": 200}))
    st200 = stretch.statuses()
    elapsed = time.perf_counter() - started
    ok_stretch = (
        stretch.min_h() >= 0.0
        and st200.count("projected") > 0
        and st200.count("infeasible") == 0
    )
    report(
        4,
        "avoidance keeps the discrepancy barrier nonnegative",
        ok_small and ok_stretch and elapsed < 120.0,
        f"n=50 min H {log.min_h():.4f} ({statuses.count('projected')} projected), "
        f"n=200 min H {stretch.min_h():.4f}, {elapsed:.1f}s",
    )


def test_criterion_5_tracking_reproduction():
    started = time.perf_counter()
    log = run_scenario(load_cfg("tracking_d3_n50.json"))
    elapsed = time.perf_counter() - started
    statuses = log.statuses()
    speeds = np.linalg.norm(log.records[-1].agents[:, 3:], axis=1)
    adv_speed = 1.2
    speed_dev = abs(float(speeds.mean()) - adv_speed) / adv_speed
    report(
        5,
        "tracking keeps proximity and acquires the reference velocity",
        log.min_h() >= 0.0
        and statuses.count("infeasible") == 0
        and speed_dev <= 0.2
        and elapsed < 180.0,
        f"min H {log.min_h():.4f}, terminal mean speed {speeds.mean():.3f} "
        f"vs {adv_speed} ({speed_dev:.0%} off), {elapsed:.1f}s",
    )


def test_criterion_6_forward_invariance_refinement(avoidance_log):
    viol_full = max(0.0, -avoidance_log.min_h())
    half = run_scenario(load_cfg("avoidance_d3_n50.json", dt=0.005))
    viol_half = max(0.0, -half.min_h())
    report(
        6,
        "halving dt at least halves any barrier violation",
        viol_half <= viol_full / 2 + 1e-12,
        f"violation {viol_full:.2e} at dt=1e-2 vs {viol_half:.2e} at dt=5e-3",
    )


def test_criterion_7_baseline_safety():
    started = time.perf_counter()
    eps_safe = 0.5
    dt = 1e-3
    ok = True
    details = []
    for n in (2, 5, 10):
        dyn = DynamicsSpec("single_integrator", 2)
        spec = PairwiseSpec(eps_safe, ClassKSpec("linear", 1.0))
        box = ControlBox.symmetric(5.0, 2)
        nn = 1.05 * eps_safe
        radius = nn / (2 * np.sin(np.pi / n))
        ang = 2 * np.pi * np.arange(n) / n
        z = np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1)
        min_dist = np.inf
        for k in range(500):
            pull = z.mean(axis=0) - z
            norms = np.linalg.norm(pull, axis=1, keepdims=True)
            q_nom = np.where(norms > 1e-12, pull / np.maximum(norms, 1e-12), 0.0)
            q, _ = solve_pairwise_cbf(spec, dyn, k * dt, z, q_nom, box)
            z = step(dyn, z, q, dt)
            d = np.linalg.norm(z[:, None, :] - z[None, :, :], axis=-1)
            np.fill_diagonal(d, np.inf)
            min_dist = min(min_dist, float(d.min()))
        details.append(f"n={n}: {min_dist:.4f}")
        ok = ok and min_dist >= eps_safe - 1e-3
    elapsed = time.perf_counter() - started
    report(
        7,
        "pairwise baseline preserves separation under inward pressure",
        ok,
        f"min distances {', '.join(details)} vs bound {eps_safe - 1e-3}, {elapsed:.1f}s",
    )


def test_criterion_8_scaling_table(tmp_path):
    started = time.perf_counter()
    cfg = load_cfg("bench_template.json")
    sizes = [2, 10, 50, 100, 200]
    rows = run_benchmark(cfg, sizes)
    write_benchmark_csv(rows, tmp_path / "benchmark.csv")
    header = (tmp_path / "benchmark.csv").read_text().splitlines()[0]
    by_n = {r.n: r for r in rows}
    ok_struct = all(r.mf_rows == 1 for r in rows) and all(
        r.baseline_rows == r.n * (r.n - 1) // 2 for r in rows
    )
    baseline_50 = by_n[50]
    mf_200 = by_n[200]
    ok_dominance = (not baseline_50.baseline_timeout) and (
        mf_200.mf_step_ms < baseline_50.baseline_step_ms
    )
    numeric = [r.baseline_step_ms for r in rows if not r.baseline_timeout]
    ok_monotone = all(b >= a for a, b in zip(numeric, numeric[1:]))
    ok_header = header == "n,mf_rows,baseline_rows,mf_step_ms,baseline_step_ms,mf_solve_iters,baseline_solve_iters"
    elapsed = time.perf_counter() - started
    base50 = f"{baseline_50.baseline_step_ms:.2f}" if not baseline_50.baseline_timeout else "timeout"
    report(
        8,
        "one mean-field row vs n(n-1)/2 baseline rows, with faster steps",
        ok_struct and ok_dominance and ok_monotone and ok_header and elapsed < 600.0,
        f"mf@200 {mf_200.mf_step_ms:.2f} ms < baseline@50 {base50} ms, {elapsed:.0f}s",
    )


def test_criterion_9_determinism(avoidance_log, tmp_path):
    first = tmp_path / "first"
    second = tmp_path / "second"
    write_log(avoidance_log, first)
    write_log(run_scenario(load_cfg("avoidance_d3_n50.json")), second)
    same_traj = (first / "trajectory.csv").read_bytes() == (second / "trajectory.csv").read_bytes()
    same_barrier = (first / "barrier.csv").read_bytes() == (second / "barrier.csv").read_bytes()
    report(
        9,
        "repeated runs serialize byte-identically",
        same_traj and same_barrier,
        f"trajectory identical: {same_traj}, barrier identical: {same_barrier}",
    )
