import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowqpt.acquire import acquire, acquire_budget, all_pauli_settings, default_budget, setting_distribution
from shadowqpt.channels import ChannelSpec, apply_channel, ghz_process, identity_channel
from shadowqpt.postprocess import (
    apply_steps,
    cp_project,
    cp_project_matrix,
    effect_data,
    effect_data_exact,
    log_likelihood,
    mle_reconstruct,
    overlap_pipeline,
    purify,
    simplex_eigenvalues,
    tp_project,
)
from shadowqpt.qmat import ChoiMatrix, partial_trace, purity, trace_distance
from shadowqpt.shadows import estimate_choi, overlap

from conftest import random_density, random_hermitian, random_unitary, spectraplex_oracle, tp_oracle


# ----------------------------------------------------------------------------
# CP


def test_cp_examples():
    out = cp_project(ChoiMatrix(1, np.diag([1.5, -0.5, 0, 0]) * 1.0, normalized=True))
    assert np.allclose(out.mat, np.diag([1.0, 0, 0, 0]))
    assert np.allclose(simplex_eigenvalues(np.array([1.5, -0.5]), 1.0), [1, 0])
    assert np.allclose(simplex_eigenvalues(np.array([2.0, 1.0, -1.0]), 2.0), [1.5, 0.5, 0])
    psd = random_density(16, np.random.default_rng(0)) * 4
    assert np.allclose(cp_project(ChoiMatrix(2, psd)).mat, psd)


def test_cp_properties_random(rng):
    for _ in range(500):
        d = int(rng.choice([4, 16]))
        h = random_hermitian(d, rng)
        t = abs(np.trace(h).real) + 0.5
        x, neg = cp_project_matrix(h, t)
        assert np.linalg.eigvalsh(x).min() >= -1e-10
        assert abs(np.trace(x) - t) < 1e-10
        x2, _ = cp_project_matrix(x, t)
        assert np.max(np.abs(x2 - x)) < 1e-10
        assert neg >= 0


def test_cp_matches_kkt_oracle(rng):
    for _ in range(200):
        h = random_hermitian(4, rng)
        t = float(rng.uniform(0.1, 3))
        x, _ = cp_project_matrix(h, t)
        want, nu = spectraplex_oracle(h, t)
        assert np.linalg.norm(x - want) < 1e-6
        # KKT: X - H = Z - nu I with Z >= 0 and tr(X Z) = 0
        z = x - (h + h.conj().T) / 2 + nu * np.eye(4)
        assert np.linalg.eigvalsh(z).min() > -1e-6
        assert abs(np.trace(x @ z)) < 1e-6


def test_cp_beats_random_feasible_points(rng):
    h = random_hermitian(4, rng)
    x, _ = cp_project_matrix(h, 1.0)
    best = np.linalg.norm(x - h)
    for _ in range(2000):
        y = random_density(4, rng, rank=int(rng.integers(1, 5)))
        assert np.linalg.norm(y - h) >= best - 1e-12


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=8), st.floats(0.1, 10))
def test_simplex_projection_is_closest(mu, total):
    mu = np.array(mu)
    lam = simplex_eigenvalues(mu, total)
    assert lam.min() >= 0 and abs(lam.sum() - total) < 1e-9
    # the sorted projection keeps the ordering of the input
    order = np.argsort(mu, kind="stable")
    assert np.all(np.diff(lam[order]) >= -1e-12)


def test_cp_rejects_nonpositive_trace():
    with pytest.raises(ValueError):
        cp_project(ChoiMatrix(1, -np.eye(4)))


def test_cp_report():
    out, rep = cp_project(ChoiMatrix(1, np.diag([2.5, -0.5, 0, 0])), return_report=True)
    assert rep.method == "cp" and abs(rep.negative_mass - 0.5) < 1e-12
    assert abs(rep.input_trace - rep.output_trace) < 1e-12
    json.dumps(rep.to_json())


# ----------------------------------------------------------------------------
# TP


def test_tp_examples():
    out = tp_project(ChoiMatrix(1, np.diag([2.0, 0, 0, 0])))
    assert np.allclose(out.mat, np.diag([1.5, -0.5, 0.5, 0.5]))
    exact = ghz_process(2).choi()
    assert np.allclose(tp_project(exact).mat, exact.mat)


@pytest.mark.parametrize("n", [1, 2])
def test_tp_properties_and_kkt(n, rng):
    for _ in range(5):
        m = random_hermitian(4**n, rng)
        out = tp_project(ChoiMatrix(n, m))
        tin = partial_trace(out.mat, list(range(n)), [2] * (2 * n))
        assert np.max(np.abs(tin - np.eye(2**n))) < 1e-10
        assert np.max(np.abs(tp_project(out).mat - out.mat)) < 1e-10
        assert np.max(np.abs(out.mat - tp_oracle(m, n))) < 1e-10


def test_tp_normalized_input():
    m = ChoiMatrix(1, random_density(4, np.random.default_rng(1)), normalized=True)
    out = tp_project(m)
    assert out.normalized
    assert np.allclose(partial_trace(out.mat * 2, [0], [2, 2]), np.eye(2))


# ----------------------------------------------------------------------------
# purification


def test_purify_examples():
    lam_i = identity_channel(1).choi()
    mix = ChoiMatrix(1, 0.9 * lam_i.mat + 0.1 * np.eye(4) / 2)
    assert np.allclose(purify(mix).mat, lam_i.mat)
    u = ChannelSpec.from_unitary(random_unitary(4, np.random.default_rng(2))).choi()
    assert np.allclose(purify(u).mat, u.mat)
    assert np.allclose(purify(purify(mix)).mat, purify(mix).mat)


def test_purify_properties(rng):
    for _ in range(50):
        h = random_hermitian(16, rng)
        out = purify(ChoiMatrix(2, h))
        assert abs(purity(out) - 1) < 1e-12
        assert abs(np.trace(out.mat) - 4) < 1e-12
        w, v = np.linalg.eigh(h)
        top = v[:, -1]
        assert abs(abs(top.conj() @ out.mat @ top) - 4) < 1e-9


def test_purify_degenerate_is_deterministic():
    out, rep = purify(ChoiMatrix(1, np.eye(4)), return_report=True)
    assert rep.degenerate
    assert np.allclose(out.mat, np.diag([0, 0, 0, 2.0]))
    perm = np.eye(4)[[3, 2, 1, 0]]
    assert np.allclose(purify(ChoiMatrix(1, perm @ np.eye(4) @ perm.T)).mat, out.mat)


# ----------------------------------------------------------------------------
# maximum likelihood


def test_mle_exact_frequencies_fixed_point():
    spec = ghz_process(2).depolarized(0.3)
    sts = all_pauli_settings("ancilla", 2)
    data = effect_data_exact(2, sts, [setting_distribution(spec, s) for s in sts])
    out, rep = mle_reconstruct(data, max_iter=20000, tol=1e-12, return_report=True)
    assert np.max(np.abs(out.mat / 4 - spec.choi().mat / 4)) < 1e-6
    assert np.all(np.diff(rep.log_likelihood) >= -1e-12)


def test_mle_single_effect():
    sts = [all_pauli_settings("ancilla", 1)[0]]
    data = effect_data_exact(1, sts, [np.array([1.0, 0, 0, 0])])
    out = mle_reconstruct(data, max_iter=300, tol=1e-9)
    assert out.mat[0, 0].real / 2 > 0.99


def test_mle_sampled_converges_and_monotone():
    recs = acquire_budget(ghz_process(2), "ancilla", None, default_budget("ancilla", 2), seed=1)
    out, rep = mle_reconstruct(recs, return_report=True)
    assert rep.converged and 100 <= rep.iterations <= 500
    ll = np.array(rep.log_likelihood)
    assert np.all(np.diff(ll) >= -1e-10)
    assert out.is_psd() and abs(np.trace(out.mat) - 4) < 1e-9
    assert trace_distance(out, ghz_process(2).choi()) < 0.2


def test_mle_two_sided_effects_resolve_identity():
    # summing w_j e_j e_j^dagger over all settings and outcomes gives I for either scheme
    for scheme, n in (("ancilla", 1), ("two_sided", 1), ("two_sided", 2)):
        sts = all_pauli_settings(scheme, n)
        width = sts[0].width
        data = effect_data_exact(n, sts, [np.ones(2**width) for _ in sts])
        tot = (data.vectors.T * data.shares) @ data.vectors.conj()
        assert np.allclose(tot, np.eye(4**n), atol=1e-10)


def test_mle_two_sided_exact_fixed_point():
    spec = ChannelSpec.from_unitary(random_unitary(2, np.random.default_rng(5))).depolarized(0.2)
    sts = all_pauli_settings("two_sided", 1)
    data = effect_data_exact(1, sts, [setting_distribution(spec, s) for s in sts])
    out = mle_reconstruct(data, max_iter=20000, tol=1e-13)
    assert np.max(np.abs(out.mat - spec.choi().mat)) < 1e-5


def test_effect_data_frequencies():
    recs = acquire(ghz_process(2), n_settings=20, reps=7, seed=2)
    data = effect_data(recs)
    assert abs(data.freqs.sum() - 1) < 1e-12
    rho = ghz_process(2).choi().mat / 4
    assert np.isfinite(log_likelihood(data, rho))


# ----------------------------------------------------------------------------
# pipelines


def test_overlap_pipeline_exact_inputs(rng):
    for spec in (ghz_process(2), ChannelSpec.from_unitary(random_unitary(4, rng))):
        l = spec.choi()
        rho, sigma = random_density(4, rng, 1), random_density(4, rng, 1)
        want = np.real(np.trace(apply_channel(l, rho) @ sigma))
        for mode in ("full", "purified", "raw"):
            assert abs(overlap_pipeline(l, rho, sigma, mode) - want) < 1e-10
    with pytest.raises(ValueError):
        overlap_pipeline(l, rho, sigma, "other")


def test_overlap_pipeline_orders_agree_on_exact():
    l = ghz_process(2).choi()
    a, _ = apply_steps(l, ["cp", "tp"])
    b, _ = apply_steps(l, ["tp", "cp"])
    assert np.allclose(a.mat, b.mat) and np.allclose(a.mat, l.mat)
    with pytest.raises(ValueError):
        apply_steps(l, ["bogus"])


def test_purified_not_worse_than_raw_on_noisy_estimate():
    spec = ghz_process(2)
    recs = acquire(spec, n_settings=300, reps=10, seed=4)
    est = estimate_choi(recs)
    rho = np.diag([1.0, 0, 0, 0])
    bell = np.zeros(4)
    bell[[0, 3]] = 1 / np.sqrt(2)
    sigma = np.outer(bell, bell)
    exact = overlap(spec.choi(), rho, sigma)
    assert abs(overlap_pipeline(est, rho, sigma, "purified") - exact) <= abs(overlap_pipeline(est, rho, sigma, "raw") - exact)
