"""Numbered acceptance criteria; a summary line per criterion is printed at the end of the run."""

import itertools
import time

import numpy as np
import pytest

from shadowqpt.acquire import MeasurementRecord, acquire, acquire_budget, all_pauli_settings, default_budget, setting_distribution
from shadowqpt.channels import ChannelSpec, ghz_process, identity_channel, propagator, reduced_choi
from shadowqpt.experiments import overlap_angles, overlap_table
from shadowqpt.hamlearn import (
    HamLearnTask,
    bound_hamlearn,
    default_probes,
    realization_seed,
    renormalized_coefficients,
    run_hamlearn,
    tfim_realization,
)
from shadowqpt.postprocess import cp_project, cp_project_matrix, effect_data_exact, mle_reconstruct, purify, tp_project
from shadowqpt.qmat import ChoiMatrix, partial_trace, purity, trace_distance
from shadowqpt.shadows import bound_overlap, bound_reduced, estimate_choi, reduce_data, shadow_data, snapshot, weighted_choi

from conftest import oracle_distribution, random_hermitian, random_unitary, spectraplex_oracle

X = np.array([[0, 1], [1, 0]], dtype=complex)


def brute_force_mean(spec, scheme):
    """Born-weighted snapshot sum over every Pauli setting and outcome."""
    sts = all_pauli_settings(scheme, spec.n)
    width = sts[0].width
    acc = np.zeros((4**spec.n, 4**spec.n), dtype=complex)
    for st in sts:
        p = oracle_distribution(spec, st)
        for b in np.flatnonzero(p > 1e-15):
            rec = MeasurementRecord(st, (format(int(b), f"0{width}b"),))
            acc += p[b] * snapshot(rec, 0).dense() / len(sts)
    return acc


def slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@pytest.mark.acceptance(1, "unbiasedness oracle")
def test_c1_unbiasedness(record_property):
    t0 = time.perf_counter()
    worst = 0.0
    for spec in (identity_channel(1), ChannelSpec.from_unitary(X)):
        for scheme in ("ancilla", "two_sided"):
            worst = max(worst, np.max(np.abs(brute_force_mean(spec, scheme) - spec.choi().mat)))
    elapsed = time.perf_counter() - t0
    record_property("detail", f"max entry error {worst:.1e} (< 1e-10), {elapsed:.2f} s (< 1 s)")
    assert worst < 1e-10 and elapsed < 1.0


@pytest.mark.acceptance(2, "scheme equivalence")
def test_c2_scheme_equivalence(record_property):
    t0 = time.perf_counter()
    spec = ChannelSpec.from_unitary(random_unitary(2, np.random.default_rng(21))).depolarized(0.2)
    exact_gap = np.max(np.abs(brute_force_mean(spec, "ancilla") - brute_force_mean(spec, "two_sided")))

    ghz = ghz_process(2)
    shots, boots = 20000, 50
    est, se = {}, {}
    for i, scheme in enumerate(("ancilla", "two_sided")):
        recs = acquire(ghz, scheme, n_settings=shots, reps=1, seed=700 + i)
        est[scheme] = estimate_choi(recs)
        rng = np.random.default_rng(800 + i)
        # bootstrap spread: rms trace distance of multinomial resamples from the estimate
        dev = [trace_distance(weighted_choi(recs, rng.multinomial(shots, np.full(shots, 1 / shots)) / shots), est[scheme]) for _ in range(boots)]
        se[scheme] = float(np.sqrt(np.mean(np.square(dev))))
    gap = trace_distance(est["ancilla"], est["two_sided"])
    limit = 3 * np.hypot(se["ancilla"], se["two_sided"])
    elapsed = time.perf_counter() - t0
    record_property("detail", f"n=1 brute-force gap {exact_gap:.1e}; n=2 distance {gap:.3f} < {limit:.3f}; {elapsed:.1f} s (< 30 s)")
    assert exact_gap < 1e-10 and gap < limit and elapsed < 30


@pytest.mark.acceptance(3, "convergence rate")
def test_c3_convergence_rate(record_property):
    t0 = time.perf_counter()
    spec = ghz_process(2)
    sizes = [1000, 3000, 10000, 30000, 100000]
    err = [np.mean([trace_distance(estimate_choi(acquire(spec, n_settings=N, reps=1, seed=100 * s + i)), spec.choi()) for s in range(3)]) for i, N in enumerate(sizes)]
    s = slope(sizes, err)
    elapsed = time.perf_counter() - t0
    record_property("detail", f"slope {s:.3f} (-0.5 +/- 0.1), {elapsed:.1f} s (< 120 s)")
    assert abs(s + 0.5) <= 0.1 and elapsed < 120


@pytest.mark.acceptance(4, "projection suite")
def test_c4_projections(record_property):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    cp_err = 0.0
    for _ in range(500):
        d = int(rng.choice([4, 16]))
        h = random_hermitian(d, rng)
        t = abs(np.trace(h).real) + 0.5
        x, _ = cp_project_matrix(h, t)
        x2, _ = cp_project_matrix(x, t)
        cp_err = max(cp_err, -np.linalg.eigvalsh(x).min(), abs(np.trace(x) - t), np.max(np.abs(x2 - x)))
    kkt_err = 0.0
    for _ in range(200):
        h = random_hermitian(4, rng)
        t = float(rng.uniform(0.1, 3))
        x, _ = cp_project_matrix(h, t)
        kkt_err = max(kkt_err, np.linalg.norm(x - spectraplex_oracle(h, t)[0]))
    tp_err = 0.0
    for n in (1, 2):
        for _ in range(20):
            out = tp_project(ChoiMatrix(n, random_hermitian(4**n, rng)))
            tin = partial_trace(out.mat, list(range(n)), [2] * (2 * n))
            tp_err = max(tp_err, np.max(np.abs(tin - np.eye(2**n))), np.max(np.abs(tp_project(out).mat - out.mat)))
    pur_err = max(abs(purity(purify(ChoiMatrix(2, random_hermitian(16, rng)))) - 1) for _ in range(100))
    elapsed = time.perf_counter() - t0
    record_property("detail", f"cp {cp_err:.1e}, kkt {kkt_err:.1e}, tp {tp_err:.1e}, purity {pur_err:.1e}; {elapsed:.1f} s (< 30 s)")
    assert cp_err < 1e-10 and kkt_err < 1e-6 and tp_err < 1e-10 and pur_err < 1e-12 and elapsed < 30


@pytest.mark.acceptance(5, "purification efficacy")
def test_c5_purification(record_property):
    t0 = time.perf_counter()
    parts, ok = [], True
    for n in (2, 3):
        ideal = ghz_process(n)
        noisy = ideal.depolarized(0.1)
        raw = estimate_choi(acquire_budget(noisy, "ancilla", None, default_budget("ancilla", n), seed=0))
        pur = purify(raw)
        d_raw, d_pur = trace_distance(raw, ideal.choi()), trace_distance(pur, ideal.choi())
        n_raw, n_pur = trace_distance(raw, noisy.choi()), trace_distance(pur, noisy.choi())
        clean = trace_distance(purify(estimate_choi(acquire_budget(ideal, "ancilla", None, default_budget("ancilla", n), seed=0))), ideal.choi())
        ok &= d_pur < d_raw and n_pur < n_raw and clean < 0.05
        parts.append(f"n={n} purified/raw {d_pur:.3f}/{d_raw:.3f} vs ideal, {n_pur:.3f}/{n_raw:.3f} vs noisy, noiseless purified {clean:.3f} (< 0.05)")
    elapsed = time.perf_counter() - t0
    record_property("detail", "; ".join(parts) + f"; {elapsed:.1f} s (< 300 s)")
    assert ok and elapsed < 300


@pytest.mark.acceptance(6, "MLE baseline")
def test_c6_mle(record_property):
    t0 = time.perf_counter()
    spec = ghz_process(2)
    sts = all_pauli_settings("ancilla", 2)
    data = effect_data_exact(2, sts, [setting_distribution(spec, s) for s in sts])
    fixed = mle_reconstruct(data, max_iter=500, tol=0.0)
    exact_err = float(np.max(np.abs(fixed.mat - spec.choi().mat)) / 4)
    recs = acquire_budget(spec, "ancilla", None, default_budget("ancilla", 2), seed=0)
    _, rep = mle_reconstruct(recs, return_report=True)
    monotone = bool(np.all(np.diff(rep.log_likelihood) >= -1e-10))
    elapsed = time.perf_counter() - t0
    record_property("detail", f"fixed-point error {exact_err:.1e} (< 1e-6); sampled run converged={rep.converged} in {rep.iterations} iterations, monotone={monotone}; {elapsed:.1f} s (< 120 s)")
    assert exact_err < 1e-6 and rep.converged and rep.iterations <= 500 and monotone and elapsed < 120


@pytest.mark.acceptance(7, "overlap presets")
def test_c7_overlaps(record_property):
    t0 = time.perf_counter()
    families = (("zero", "rx_phi"), ("ry", "rx"), overlap_angles(51))
    parts, ok = [], True
    for n in (2, 3):
        spec = ghz_process(n)
        raw = estimate_choi(acquire_budget(spec, "ancilla", None, default_budget("ancilla", n), seed=0))
        est = max(r[7] for r in overlap_table(raw, spec.choi(), *families, ("purified",)))
        exact = max(r[7] for r in overlap_table(spec.choi(), spec.choi(), *families, ("purified", "raw", "full")))
        ok &= est < 0.05 and exact < 1e-9
        parts.append(f"n={n} purified max error {est:.4f} (< 0.05), exact-Choi {exact:.1e}")
    elapsed = time.perf_counter() - t0
    record_property("detail", "; ".join(parts) + f"; {elapsed:.1f} s (< 300 s)")
    assert ok and elapsed < 300


@pytest.mark.acceptance(8, "reduced processes")
def test_c8_reduced(record_property):
    t0 = time.perf_counter()
    spec = ghz_process(3)
    data = shadow_data(acquire_budget(spec, "ancilla", None, default_budget("ancilla", 3), seed=0))
    dist = {}
    for k in (1, 2):
        for sub in itertools.combinations(range(3), k):
            est = cp_project(estimate_choi(reduce_data(data, sub)))
            dist[sub] = trace_distance(est, reduced_choi(spec.choi(), sub))
    elapsed = time.perf_counter() - t0
    worst = {k: max(v for s, v in dist.items() if len(s) == k) for k in (1, 2)}
    record_property("detail", f"max CP trace distance k=1 {worst[1]:.4f}, k=2 {worst[2]:.4f} (each < 0.05); {elapsed:.1f} s (< 180 s)")
    assert max(dist.values()) < 0.05 and elapsed < 180


@pytest.mark.acceptance(9, "Hamiltonian learning")
def test_c9_hamlearn(record_property):
    t0 = time.perf_counter()
    realizations = range(10)

    def runs(n, t, N, t_index=0):
        return [run_hamlearn(HamLearnTask(tfim_realization(n, 0, r), t, N), realization_seed(0, r, t_index)) for r in realizations]

    main = runs(5, 0.1, 100000)
    mean_err = float(np.mean([m.mean_error for m in main]))

    sizes = [1000, 3000, 10000, 30000]
    stat_n = [np.mean([m.statistical_error for m in runs(5, 0.1, N, 1 + i)]) for i, N in enumerate(sizes)]
    stat_n.append(np.mean([m.statistical_error for m in main]))
    s_n = slope(sizes + [100000], stat_n)

    times = [0.05, 0.1, 0.2, 0.4]
    s_t = slope(times, [np.mean([m.statistical_error for m in runs(5, t, 10000, 10 + i)]) for i, t in enumerate(times)])

    grid = np.geomspace(0.05, 0.8, 6)
    sys_err = []
    for t in grid:
        vals = []
        for r in realizations:
            ht = tfim_realization(5, 0, r)
            vals.append(np.mean(np.abs(renormalized_coefficients(propagator(ht, t).choi(), default_probes(ht), t) - ht.coefficients)))
        sys_err.append(np.mean(vals))
    s_sys = slope(grid, sys_err)

    by_n = {5: mean_err}
    for n in (3, 4, 6):
        by_n[n] = float(np.mean([m.mean_error for m in runs(n, 0.1, 100000)]))
    v = np.array(list(by_n.values()))
    spread = float((v.max() - v.min()) / v.mean())

    elapsed = time.perf_counter() - t0
    record_property(
        "detail",
        f"mean error {mean_err:.4f} (<= 0.2); N slope {s_n:.3f} (-0.5 +/- 0.1); t slope {s_t:.3f} (-1 +/- 0.2); "
        f"systematic slope {s_sys:.3f} (2 +/- 0.3); n spread {spread:.2f} (< 0.5); {elapsed:.0f} s (< 900 s)",
    )
    assert mean_err <= 0.2
    assert abs(s_n + 0.5) <= 0.1 and abs(s_t + 1) <= 0.2 and abs(s_sys - 2) <= 0.3
    assert spread < 0.5 and elapsed < 900


# hand-evaluated ceilings of the closed-form bounds
BOUND_CASES = [
    (lambda: bound_reduced(2, 1, 0.5, 0.1, "pauli6_trace"), 15430),
    (lambda: bound_reduced(3, 2, 0.1, 0.05, "global_clifford"), 342612310),
    (lambda: bound_reduced(3, 2, 0.2, 0.01, "pauli6_frobenius"), 39680806),
    (lambda: bound_reduced(3, 2, 0.1, 0.05, "pauli6_trace"), 111158214),
    (lambda: bound_reduced(1, 1, 1.0, 0.5, "global_clifford"), 18100),
    (lambda: bound_overlap(1, 1.0, 0.5), 283),
    (lambda: bound_overlap(100, 0.5, 0.1, "local_clifford", k=2), 33080),
    (lambda: bound_overlap(51, 0.3, 0.2, tr_o2=2.0), 28263),
    (lambda: bound_hamlearn(5, 2, 0.1, 0.1, 0.1), 440326827),
    (lambda: bound_hamlearn(3, 1, 0.5, 0.2, 0.05), 68549),
]


@pytest.mark.acceptance(10, "bound calculators")
def test_c10_bounds(record_property):
    got = [f() for f, _ in BOUND_CASES]
    hits = sum(g == want for g, (_, want) in zip(got, BOUND_CASES))
    record_property("detail", f"{hits}/{len(BOUND_CASES)} tuples match exactly")
    assert hits == len(BOUND_CASES)
