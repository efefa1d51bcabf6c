import gzip
import json
import itertools

import numpy as np
import pytest

from shadowqpt.acquire import (
    CHUNK,
    Block,
    MeasurementRecord,
    PairingPlan,
    RecordFormatError,
    Setting,
    acquire,
    all_pauli_settings,
    born_sample,
    default_budget,
    read_records,
    setting_distribution,
    spread_reps,
    write_records,
)
from shadowqpt.channels import ghz_process, identity_channel, propagator, random_tfim
from shadowqpt.gates import prep_gate
from shadowqpt.shadows import estimate_choi

from conftest import oracle_distribution, random_density


# ----------------------------------------------------------------------------
# Born sampling


def test_born_sample_examples(rng):
    zero = np.array([1, 0], dtype=complex)
    assert born_sample(zero, np.eye(2), 100, rng) == ["0"] * 100
    h = prep_gate("H")
    out = born_sample(zero, h, 10_000, rng)
    f = out.count("0") / 10_000
    assert abs(f - 0.5) < 5 * np.sqrt(0.25 / 10_000)
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert set(born_sample(np.outer(bell, bell), np.eye(4), 1000, rng)) == {"00", "11"}


def test_born_sample_deterministic_and_errors():
    rho = random_density(4, np.random.default_rng(0))
    a = born_sample(rho, np.eye(4), 50, np.random.default_rng(5))
    b = born_sample(rho, np.eye(4), 50, np.random.default_rng(5))
    assert a == b
    with pytest.raises(ValueError):
        born_sample(2 * rho, np.eye(4), 10, np.random.default_rng(0))
    with pytest.raises(ValueError):
        born_sample(rho, np.ones((4, 4)), 10, np.random.default_rng(0))


def test_sampled_frequencies_chi_square():
    from scipy.stats import chi2

    spec = ghz_process(2).depolarized(0.2)
    st = all_pauli_settings("ancilla", 2)[37]
    p = setting_distribution(spec, st)
    rec = acquire(spec, settings=[st], reps=200_000, seed=3)[0]
    counts = np.bincount(rec.outcome_ints(), minlength=16)
    mask = p > 1e-12
    assert counts[~mask].sum() == 0
    exp = 200_000 * p[mask]
    stat = np.sum((counts[mask] - exp) ** 2 / exp)
    assert chi2.sf(stat, mask.sum() - 1) > 1e-3


# ----------------------------------------------------------------------------
# exact outcome distributions


@pytest.mark.parametrize("scheme", ["ancilla", "two_sided"])
def test_distribution_matches_oracle_pauli(scheme):
    specs = [ghz_process(2), ghz_process(2).depolarized(0.3), propagator(random_tfim(2, np.random.default_rng(1)), 0.4)]
    for spec in specs:
        sts = all_pauli_settings(scheme, 2)
        for st in sts[:: max(1, len(sts) // 25)]:
            assert np.allclose(setting_distribution(spec, st), oracle_distribution(spec, st), atol=1e-12)


@pytest.mark.parametrize("plan", [PairingPlan("non_fixed", 2), PairingPlan("fixed", 2, fixed_fraction=0.5), PairingPlan("non_fixed", 4), PairingPlan("non_fixed", 1)])
def test_distribution_matches_oracle_clifford(plan):
    spec = ghz_process(2).depolarized(0.1)
    recs = acquire(spec, "ancilla", plan, n_settings=12, reps=1, seed=4)
    for r in recs:
        assert np.allclose(setting_distribution(spec, r.setting), oracle_distribution(spec, r.setting), atol=1e-12)


def test_identity_channel_correlations():
    spec = identity_channel(2)
    st = Setting("ancilla", 2, (Block((0, 1, 2, 3), "rotation", ("I",) * 4),))
    rec = acquire(spec, settings=[st], reps=500, seed=0)[0]
    assert all(o[:2] == o[2:] for o in rec.outcomes)
    st2 = Setting("two_sided", 2, (Block((0, 1), "rotation", ("I", "I")), Block((2, 3), "rotation", ("I", "I"))))
    rec2 = acquire(spec, "two_sided", settings=[st2], reps=100, seed=0)[0]
    assert set(rec2.outcomes) == {"00"}


def test_setting_counts():
    assert len(all_pauli_settings("ancilla", 2)) == 81
    assert len(all_pauli_settings("two_sided", 2)) == 36 * 9
    assert len({json.dumps(s.to_json()) for s in all_pauli_settings("ancilla", 2)}) == 81


# ----------------------------------------------------------------------------
# streams and determinism


def test_deterministic_replay(tmp_path):
    plan = PairingPlan("fixed", 2)
    a = acquire(ghz_process(3), "ancilla", plan, n_settings=300, reps=3, seed=42)
    b = acquire(ghz_process(3), "ancilla", plan, n_settings=300, reps=3, seed=42)
    write_records(a, tmp_path / "a.jsonl")
    write_records(b, tmp_path / "b.jsonl")
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    write_records(a, tmp_path / "a.jsonl.gz")
    write_records(b, tmp_path / "b.jsonl.gz")
    assert (tmp_path / "a.jsonl.gz").read_bytes() == (tmp_path / "b.jsonl.gz").read_bytes()


def test_worker_and_prefix_invariance():
    spec = ghz_process(2)
    one = acquire(spec, "ancilla", PairingPlan("non_fixed", 2), n_settings=3 * CHUNK + 7, reps=2, seed=9)
    many = acquire(spec, "ancilla", PairingPlan("non_fixed", 2), n_settings=3 * CHUNK + 7, reps=2, seed=9, workers=4)
    assert one == many
    short = acquire(spec, "ancilla", PairingPlan("non_fixed", 2), n_settings=CHUNK + 5, reps=2, seed=9)
    assert short == one[: CHUNK + 5]
    other = acquire(spec, "ancilla", PairingPlan("non_fixed", 2), n_settings=10, reps=2, seed=10)
    assert other != one[:10]


def test_pauli_basis_frequencies_uniform():
    recs = acquire(ghz_process(2), "ancilla", PairingPlan(), n_settings=6000, reps=1, seed=1)
    labels = np.array([[r.setting.labels()[w] for w in range(4)] for r in recs])
    n = len(recs)
    sigma = np.sqrt(n * (1 / 3) * (2 / 3))
    for w in range(4):
        for lab in ("I", "H", "SH"):
            assert abs(np.sum(labels[:, w] == lab) - n / 3) < 5 * sigma


def test_two_sided_left_uses_g_right_uses_gr():
    recs = acquire(ghz_process(2), "two_sided", n_settings=3000, reps=1, seed=2)
    left = {r.setting.labels()[w] for r in recs for w in (0, 1)}
    right = {r.setting.labels()[w] for r in recs for w in (2, 3)}
    assert left == {"I", "H", "SH", "X", "HX", "SHX"}
    assert right == {"I", "H", "SH"}


def test_fixed_and_non_fixed_pairings():
    n = 3
    plan = PairingPlan("fixed", 2)
    recs = acquire(ghz_process(n), "ancilla", plan, n_settings=512, reps=1, seed=5)
    fixed = [r for r in recs if (0, 3) in r.setting.layout()]
    assert sum(plan.is_fixed(n, i) for i in range(512)) == 256
    for i, r in enumerate(recs):
        if plan.is_fixed(n, i):
            assert (0, 3) in r.setting.layout()
    assert len(fixed) >= 256
    nf = acquire(ghz_process(n), "ancilla", PairingPlan("non_fixed", 2), n_settings=2000, reps=1, seed=6)
    seen = {r.setting.layout() for r in nf}
    assert len(seen) == 15  # perfect matchings of 6 wires
    for r in nf:
        assert sorted(w for g in r.setting.layout() for w in g) == list(range(6))


def test_default_fractions():
    assert PairingPlan("fixed").fraction_for(2) == 0
    assert PairingPlan("fixed").fraction_for(3) == 0.5
    assert PairingPlan("fixed").fraction_for(4) == 0.4375


def test_default_budget_total():
    for scheme, n in itertools.product(("ancilla", "two_sided"), (2, 3, 4)):
        assert default_budget(scheme, n).total == 51200
    b = default_budget("ancilla", 2)
    assert b.n_settings == 81 and b.settings is not None
    assert default_budget("ancilla", 3).n_settings == 729
    c = default_budget("ancilla", 2, PairingPlan("non_fixed"))
    assert c.n_settings == 1024 and set(c.reps) == {50}
    assert spread_reps(51200, 81)[:2] == [633, 633] and sum(spread_reps(51200, 81)) == 51200


def test_acquire_errors():
    with pytest.raises(ValueError):
        acquire(ghz_process(5), "ancilla", n_settings=1, reps=1)
    with pytest.raises(ValueError):
        acquire(ghz_process(2), "two_sided", PairingPlan("non_fixed"), n_settings=1, reps=1)
    with pytest.raises(ValueError):
        acquire(ghz_process(2), "ancilla", PairingPlan("non_fixed", 3), n_settings=1, reps=1)
    with pytest.raises(ValueError):
        acquire(ghz_process(2), "ancilla", n_settings=2, reps=[1, 0])
    with pytest.raises(ValueError):
        PairingPlan("fixed", 2, fixed_groups=((0, 1), (1, 2))).validate(2)


# ----------------------------------------------------------------------------
# records


def test_record_roundtrip(tmp_path):
    recs = acquire(ghz_process(2), "ancilla", PairingPlan("fixed", 2, fixed_fraction=0.5), n_settings=500, reps=2, seed=3)
    recs += acquire(ghz_process(2), "ancilla", PairingPlan(), n_settings=500, reps=1, seed=3)
    assert len(recs) == 1000
    for name in ("r.jsonl", "r.jsonl.gz"):
        write_records(recs, tmp_path / name)
        assert read_records(tmp_path / name) == recs
    with gzip.open(tmp_path / "r.jsonl.gz", "rt") as fh:
        first = json.loads(fh.readline())
    assert set(first) >= {"scheme", "n", "blocks", "outcomes", "seed", "source"}


def test_unknown_label_rejected(tmp_path):
    rec = acquire(ghz_process(2), "ancilla", n_settings=2, reps=1, seed=0)
    d = rec[1].to_json()
    d["blocks"][0]["payload"][2] = "T"
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps(rec[0].to_json()) + "\n" + json.dumps(d) + "\n")
    with pytest.raises(RecordFormatError) as err:
        read_records(path)
    assert "'T'" in str(err.value) and err.value.line == 2


def test_malformed_lines(tmp_path):
    rec = acquire(ghz_process(2), "ancilla", n_settings=1, reps=1, seed=0)[0].to_json()
    cases = [
        "{not json",
        json.dumps({**rec, "outcomes": ["010"]}),
        json.dumps({**rec, "outcomes": []}),
        json.dumps({k: v for k, v in rec.items() if k != "blocks"}),
        json.dumps({**rec, "blocks": [{"wires": [0, 1], "kind": "rotation", "payload": ["I", "I"]}]}),
        json.dumps({**rec, "source": "elsewhere"}),
    ]
    for text in cases:
        path = tmp_path / "m.jsonl"
        path.write_text(json.dumps(rec) + "\n\n" + text + "\n")
        with pytest.raises(RecordFormatError) as err:
            read_records(path)
        assert err.value.line == 3


def test_ingested_records_flow_identically():
    recs = acquire(ghz_process(2), "ancilla", n_settings=200, reps=5, seed=8)
    ingested = [MeasurementRecord.from_json({**r.to_json(), "source": "ingested", "timestamp": "2024-01-01T00:00:00Z"}) for r in recs]
    assert all(r.source == "ingested" for r in ingested)
    assert np.array_equal(estimate_choi(recs).mat, estimate_choi(ingested).mat)


def test_setting_validation():
    with pytest.raises(RecordFormatError):
        Setting("ancilla", 1, (Block((0,), "rotation", ("I",)),))
    with pytest.raises(RecordFormatError):
        Setting("ancilla", 1, (Block((0, 1), "rotation", ("X", "I")),))
    with pytest.raises(RecordFormatError):
        Setting("sideways", 1, (Block((0, 1), "rotation", ("I", "I")),))
    Setting("two_sided", 1, (Block((0,), "rotation", ("X",)), Block((1,), "rotation", ("I",))))
