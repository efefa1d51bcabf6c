"""Shadow estimators of Choi matrices.

A snapshot is ``2**n`` times a tensor product of inverted block projectors
``M_k^{-1}(U^dagger |b><b| U) = (2**k + 1) U^dagger |b><b| U - I``. In the
two-sided scheme the input-side blocks use the transposed preparation state.
Snapshots stay block-factorized until aggregation, where sums of Kronecker
products are formed as one matrix product per wire layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _backend
from .acquire import MeasurementRecord
from .gates import LABEL_STATE, PAULI6_STATES, PAULI_1Q, ROTATIONS_G, PauliString
from .qmat import ChoiMatrix, kron

# 3|s><s| - I for the six Pauli-6 states
INV_PAULI6 = np.array([3 * np.outer(v, v.conj()) - np.eye(2) for v in PAULI6_STATES])
# state code of the transposed (complex-conjugated) state
TRANSPOSE_CODE = np.array([0, 1, 2, 3, 5, 4])
_ACC_CHUNK = 8192


def inverse_channel(x: np.ndarray, k: int) -> np.ndarray:
    """``(2**k + 1) x - tr(x) I``, the inverse of the k-qubit Clifford twirl."""
    x = np.asarray(x, dtype=complex)
    d = 1 << k
    if x.shape != (d, d):
        raise ValueError(f"inverse channel on k={k} needs a {d}x{d} matrix, got {x.shape}")
    return (d + 1) * x - np.trace(x) * np.eye(d)


# ----------------------------------------------------------------------------
# snapshots


def _permute_to_natural(m: np.ndarray, order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of ``m`` currently laid out as qubits ``order``."""
    nq = len(order)
    if list(order) == list(range(nq)):
        return m
    pos = [list(order).index(q) for q in range(nq)]
    t = m.reshape((2,) * (2 * nq))
    return t.transpose(pos + [p + nq for p in pos]).reshape(m.shape)


@dataclass(frozen=True, eq=False)
class ShadowSnapshot:
    """``2**n * kron(block mats)`` with block wires partitioning the 2n-qubit register."""

    n: int
    blocks: tuple[tuple[tuple[int, ...], np.ndarray], ...]

    def trace(self) -> complex:
        return 2**self.n * math.prod(complex(np.trace(m)) for _, m in self.blocks)

    def dense(self) -> np.ndarray:
        order = [w for wires, _ in self.blocks for w in wires]
        m = 2**self.n * kron(*(b for _, b in self.blocks))
        return _permute_to_natural(m, order)


def _block_bits(value: int, width: int, wires: Sequence[int], offset: int) -> int:
    out = 0
    for w in wires:
        out = (out << 1) | ((value >> (width - 1 - (w - offset))) & 1)
    return out


def _blocks_for(record: MeasurementRecord, outcome: int) -> list[tuple[tuple[int, ...], np.ndarray]]:
    st = record.setting
    n, width, off = st.n, st.width, st.measured_offset
    labels = st.labels()
    out = []
    for b in st.blocks:
        if b.kind == "rotation":
            for w in b.wires:
                if st.scheme == "two_sided" and w < n:
                    code = TRANSPOSE_CODE[LABEL_STATE[labels[w], 0]]
                else:
                    code = LABEL_STATE[labels[w], _block_bits(outcome, width, (w,), off)]
                out.append(((w,), INV_PAULI6[code]))
        else:
            u = b.payload.unitary
            v = u[_block_bits(outcome, width, b.wires, off), :].conj()
            out.append((b.wires, inverse_channel(np.outer(v, v.conj()), b.payload.k)))
    return sorted(out, key=lambda t: t[0])


def snapshot(record: MeasurementRecord, rep_index: int) -> ShadowSnapshot:
    """Classical shadow of the Choi matrix from one repetition of ``record``."""
    if not 0 <= rep_index < record.reps:
        raise IndexError(f"repetition {rep_index} out of range for {record.reps} outcomes")
    return ShadowSnapshot(record.n, tuple(_blocks_for(record, int(record.outcome_ints()[rep_index]))))


# ----------------------------------------------------------------------------
# batched snapshot data


class _RankOneBlocks:
    """Lazily built ``(d + 1) v v^dagger - I`` for a stack of vectors ``v``."""

    def __init__(self, vecs: np.ndarray):
        self.vecs = vecs

    def __len__(self) -> int:
        return len(self.vecs)

    def __getitem__(self, idx) -> np.ndarray:
        v = self.vecs[idx]
        d = v.shape[-1]
        return (d + 1) * v[:, :, None] * v[:, None, :].conj() - np.eye(d)


def _take(m, idx):
    return _RankOneBlocks(m.vecs[idx]) if isinstance(m, _RankOneBlocks) else m[idx]


@dataclass(eq=False)
class _Group:
    layout: tuple[tuple[int, ...], ...]
    mats: list  # per layout entry, (S, d, d)
    rec: np.ndarray  # record index of each snapshot
    pos: np.ndarray  # global snapshot index
    codes: np.ndarray | None  # (S, 2n) Pauli-6 codes when every block is a rotation


@dataclass(eq=False)
class ShadowData:
    """All snapshots of a record set, grouped by wire layout."""

    n: int
    scheme: str
    groups: list
    reps: np.ndarray  # repetitions per record

    @property
    def n_snapshots(self) -> int:
        return int(self.reps.sum())

    @property
    def n_records(self) -> int:
        return len(self.reps)

    @property
    def all_pauli(self) -> bool:
        return all(g.codes is not None for g in self.groups)


def shadow_data(records: Sequence[MeasurementRecord]) -> ShadowData:
    if isinstance(records, ShadowData):
        return records
    records = list(records)
    if not records:
        raise ValueError("no records to estimate from")
    n, scheme = records[0].n, records[0].scheme
    for r in records:
        if r.n != n or r.scheme != scheme:
            raise ValueError("all records must share scheme and n")
    reps = np.array([r.reps for r in records])
    starts = np.concatenate([[0], np.cumsum(reps)[:-1]])
    buckets: dict = {}
    for i, r in enumerate(records):
        rot = all(b.kind == "rotation" for b in r.setting.blocks)
        buckets.setdefault((r.setting.layout(), rot), []).append(i)
    groups = []
    width, off = records[0].setting.width, records[0].setting.measured_offset
    nw = 2 * n
    for (layout, rot), idx in buckets.items():
        rec = np.repeat(np.array(idx), reps[idx])
        pos = np.concatenate([np.arange(starts[i], starts[i] + reps[i]) for i in idx])
        outs = np.concatenate([records[i].outcome_ints() for i in idx])
        if rot:
            lab = np.array([records[i].setting.rotation_codes() for i in idx], dtype=np.int64)
            lab = np.repeat(lab, reps[idx], axis=0)
            codes = np.empty((len(rec), nw), dtype=np.int64)
            for w in range(nw):
                if scheme == "two_sided" and w < n:
                    codes[:, w] = TRANSPOSE_CODE[_STATE_TABLE[lab[:, w], 0]]
                else:
                    bit = (outs >> (width - 1 - (w - off))) & 1
                    codes[:, w] = _STATE_TABLE[lab[:, w], bit]
            mats = [INV_PAULI6[codes[:, w]] for w in range(nw)]
            groups.append(_Group(layout, mats, rec, pos, codes))
            continue
        bsel = {g: np.zeros(len(rec), dtype=np.int64) for g in layout}
        for g in layout:
            for w in g:
                bsel[g] = (bsel[g] << 1) | ((outs >> (width - 1 - (w - off))) & 1)
        vecs = {g: np.empty((len(rec), 1 << len(g)), dtype=complex) for g in layout}
        row = 0
        for i in idx:
            units = records[i].setting.wire_unitaries()
            sl = slice(row, row + reps[i])
            for g in layout:
                # U^dagger |b> is the conjugated row b of U
                vecs[g][sl] = units[g][bsel[g][sl], :].conj()
            row += reps[i]
        groups.append(_Group(layout, [_RankOneBlocks(vecs[g]) for g in layout], rec, pos, None))
    return ShadowData(n, scheme, groups, reps)


# rows follow ROTATIONS_G, the order used by Setting.rotation_codes
_STATE_TABLE = np.array([[LABEL_STATE[l, b] for b in (0, 1)] for l in ROTATIONS_G])


def _batched_kron(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        s, a, b = out.shape[0], out.shape[1], m.shape[1]
        out = np.einsum("sij,skl->sikjl", out, m).reshape(s, a * b, a * b)
    return out


def _accumulate(group: _Group, weights: np.ndarray, nq: int) -> np.ndarray:
    """``sum_s w_s kron(blocks_s)`` in natural qubit order (without the 2**n factor)."""
    layout = group.layout
    sizes = [len(g) for g in layout]
    cut, acc_q = 0, 0
    while cut < len(layout) - 1 and acc_q + sizes[cut] <= nq // 2:
        acc_q += sizes[cut]
        cut += 1
    cut = max(cut, 1)
    dl = 1 << sum(sizes[:cut])
    dr = 1 << sum(sizes[cut:])
    total = np.zeros((dl * dl, dr * dr), dtype=complex)
    s_all = len(weights)
    for lo in range(0, s_all, _ACC_CHUNK):
        sl = slice(lo, lo + _ACC_CHUNK)
        left = _batched_kron([m[sl] for m in group.mats[:cut]]).reshape(-1, dl * dl)
        w = weights[sl]
        if cut < len(layout):
            right = _batched_kron([m[sl] for m in group.mats[cut:]]).reshape(-1, dr * dr)
            total += (left.T * w) @ right
        else:
            total += (left.T @ w)[:, None]
    m = total.reshape(dl, dl, dr, dr).transpose(0, 2, 1, 3).reshape(dl * dr, dl * dr)
    return _permute_to_natural(m, [w for g in layout for w in g])


def _weighted_sum(data: ShadowData, weight_of) -> np.ndarray:
    nq = 2 * data.n
    out = np.zeros((1 << nq, 1 << nq), dtype=complex)
    for g in data.groups:
        w = weight_of(g)
        keep = np.flatnonzero(w != 0)
        if keep.size == 0:
            continue
        if keep.size < len(w):
            g = _Group(g.layout, [_take(m, keep) for m in g.mats], g.rec[keep], g.pos[keep], None)
            w = w[keep]
        out += _accumulate(g, w.astype(complex), nq)
    return out * 2**data.n


# ----------------------------------------------------------------------------
# aggregation

AGGREGATIONS = ("mean", "median_of_means")
MOM_LEVELS = ("shadow", "unitary")


@dataclass(frozen=True)
class EstimatorConfig:
    """``mean`` or ``median_of_means`` over ``K`` batches at the shadow or unitary level."""

    aggregation: str = "mean"
    K: int = 23
    level: str = "shadow"

    def __post_init__(self):
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"unknown aggregation {self.aggregation!r}")
        if self.level not in MOM_LEVELS:
            raise ValueError(f"unknown median-of-means level {self.level!r}")
        if self.K < 1:
            raise ValueError("K must be >= 1")


def operator_median(mats: Sequence[np.ndarray]) -> tuple[int, np.ndarray]:
    """Candidate minimizing the summed Frobenius distance to all others (lowest index on ties)."""
    flat = np.array([np.asarray(m).reshape(-1) for m in mats])
    gram = flat @ flat.conj().T
    sq = np.real(np.diag(gram))
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2 * np.real(gram), 0.0)
    cost = np.sqrt(d2).sum(axis=1)
    best = int(np.argmin(cost))
    return best, np.asarray(mats[best])


def batch_ids(data: ShadowData, cfg: EstimatorConfig) -> tuple[list[np.ndarray], int]:
    """Per-group batch index of every snapshot, and the number of batches."""
    units = data.n_snapshots if cfg.level == "shadow" else data.n_records
    if cfg.K > units:
        raise ValueError(f"K={cfg.K} batches exceed the {units} available {cfg.level}-level units")
    # round-robin by index: deterministic, balanced, and every batch sees every
    # setting when the settings are enumerated rather than sampled
    of_unit = np.arange(units, dtype=np.int64) % cfg.K
    key = "pos" if cfg.level == "shadow" else "rec"
    return [of_unit[getattr(g, key)] for g in data.groups], cfg.K


def _batch_means(data: ShadowData, cfg: EstimatorConfig) -> list[np.ndarray]:
    ids, k = batch_ids(data, cfg)
    means = []
    for b in range(k):
        if cfg.level == "shadow":
            count = sum(int(np.sum(i == b)) for i in ids)
            weights = [np.where(i == b, 1.0 / count, 0.0) for i in ids]
        else:
            nrec = sum(len(np.unique(g.rec[i == b])) for g, i in zip(data.groups, ids))
            weights = [np.where(i == b, 1.0 / (nrec * data.reps[g.rec]), 0.0) for g, i in zip(data.groups, ids)]
        lookup = {id(g): w for g, w in zip(data.groups, weights)}
        means.append(_weighted_sum(data, lambda g: lookup[id(g)]))
    return means


def estimate_choi(records, cfg: EstimatorConfig | None = None) -> ChoiMatrix:
    """Unnormalized Choi estimate from records (or prepared :class:`ShadowData`)."""
    cfg = cfg or EstimatorConfig()
    data = shadow_data(records)
    if cfg.aggregation == "mean":
        total = data.n_snapshots
        m = _weighted_sum(data, lambda g: np.full(len(g.rec), 1.0 / total))
        return ChoiMatrix(data.n, m)
    _, m = operator_median(_batch_means(data, cfg))
    return ChoiMatrix(data.n, m)


def weighted_choi(records, weights: np.ndarray) -> ChoiMatrix:
    """``sum_s weights[s] * snapshot_s`` over snapshots in record order.

    Multinomial bootstrap counts divided by their total give a resampled mean.
    """
    data = shadow_data(records)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (data.n_snapshots,):
        raise ValueError(f"need one weight per snapshot ({data.n_snapshots}), got shape {weights.shape}")
    return ChoiMatrix(data.n, _weighted_sum(data, lambda g: weights[g.pos]))


def reduce_data(data: ShadowData, subsystem: Sequence[int]) -> ShadowData:
    """Snapshot data of the reduced process on ``subsystem``."""
    n = data.n
    sub = sorted(set(int(q) for q in subsystem))
    if not sub or sub[0] < 0 or sub[-1] >= n:
        raise ValueError(f"subsystem {sub} must be a non-empty subset of 0..{n - 1}")
    kept = sub + [n + q for q in sub]
    remap = {w: i for i, w in enumerate(kept)}
    groups = []
    for g in data.groups:
        layout, mats = [], []
        for wires, m in zip(g.layout, g.mats):
            inside = [w in remap for w in wires]
            if all(inside):
                layout.append(tuple(remap[w] for w in wires))
                mats.append(m)
            elif any(inside):
                raise ValueError(f"Clifford block on wires {list(wires)} straddles the subsystem boundary")
        codes = g.codes[:, kept] if g.codes is not None else None
        order = sorted(range(len(layout)), key=lambda i: layout[i])
        groups.append(_Group(tuple(layout[i] for i in order), [mats[i] for i in order], g.rec, g.pos, codes))
    return ShadowData(len(sub), data.scheme, groups, data.reps)


def estimate_reduced(records, subsystem: Sequence[int], cfg: EstimatorConfig | None = None) -> ChoiMatrix:
    """Choi estimate of the reduced process; dropped blocks contribute their unit trace."""
    return estimate_choi(reduce_data(shadow_data(records), subsystem), cfg)


def overlap(l: ChoiMatrix, rho_in: np.ndarray, sigma: np.ndarray) -> float:
    """``tr[(rho^T (x) sigma) Lambda]`` for the unnormalized Choi matrix."""
    d = 1 << l.n
    rho_in = np.asarray(rho_in, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho_in.shape != (d, d) or sigma.shape != (d, d):
        raise ValueError(f"overlap states must be {d}x{d}")
    t = l.unnormalized().mat.reshape(d, d, d, d)
    # tr[(rho^T (x) sigma) L] = sum rho^T[j,i] sigma[b,a] L[i,a,j,b]
    return float(np.real(np.einsum("ij,ba,iajb->", rho_in, sigma, t)))


def estimate_overlap(records_or_choi, rho_in: np.ndarray, sigma: np.ndarray, cfg: EstimatorConfig | None = None) -> float:
    """Predicted ``tr[E(rho) sigma]`` from a Choi estimate or directly from records."""
    if isinstance(records_or_choi, ChoiMatrix):
        return overlap(records_or_choi, rho_in, sigma)
    return overlap(estimate_choi(records_or_choi, cfg), rho_in, sigma)


def estimate_purity(l: ChoiMatrix) -> float:
    from .qmat import purity

    return purity(l)


# ----------------------------------------------------------------------------
# Pauli functionals evaluated snapshot by snapshot


def _pauli_table(p: PauliString) -> np.ndarray:
    """``T[w, s] = tr(P_w (3|s><s| - I))`` per wire and Pauli-6 code."""
    t = np.empty((p.n, 6))
    for w, c in enumerate(p.letters):
        t[w] = np.real(np.einsum("ij,sji->s", PAULI_1Q[c], INV_PAULI6))
    return t


def pauli_snapshot_values(data: ShadowData, p: PauliString) -> np.ndarray:
    """``tr(P snapshot)`` for every snapshot, ordered by global snapshot index."""
    if p.n != 2 * data.n:
        raise ValueError(f"Pauli must act on the {2 * data.n}-qubit Choi register")
    out = np.empty(data.n_snapshots, dtype=complex)
    for g in data.groups:
        if g.codes is not None:
            vals = _backend.kernels.product_table_values(g.codes, _pauli_table(p)).astype(complex)
        else:
            vals = np.ones(len(g.rec), dtype=complex)
            for wires, m in zip(g.layout, g.mats):
                sub = kron(*(PAULI_1Q[p.letters[w]] for w in wires))
                if isinstance(m, _RankOneBlocks):
                    d = sub.shape[0]
                    vals *= (d + 1) * np.einsum("si,ij,sj->s", m.vecs.conj(), sub, m.vecs) - np.trace(sub)
                else:
                    vals *= np.einsum("ij,sji->s", sub, m)
        out[g.pos] = vals * p.phase * 2**data.n
    return out


def estimate_pauli_expectation(records, p: PauliString) -> complex:
    """Mean of ``tr(P snapshot)``, an unbiased estimate of ``tr(P Lambda)``."""
    return complex(np.mean(pauli_snapshot_values(shadow_data(records), p)))


# ----------------------------------------------------------------------------
# sample-complexity calculators

BOUND_SCHEMES = ("global_clifford", "pauli6_frobenius", "pauli6_trace")
OVERLAP_SCHEMES = ("global_clifford", "local_clifford")


def _check_eps_delta(eps: float, delta: float) -> None:
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def bound_reduced_value(n: int, k: int, eps: float, delta: float, scheme: str = "pauli6_trace", obs_norm: float = 1.0) -> float:
    """Unrounded measurement count for learning all reduced k-qubit processes."""
    _check_eps_delta(eps, delta)
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if scheme == "global_clifford":
        return 204 / eps**2 * 4 ** (n + k) * math.log(2 * (8 * n) ** (2 * k) / delta)
    if scheme == "pauli6_frobenius":
        return 68 / eps**2 * 36**k * math.log(2 * (8 * n) ** (2 * k) / delta) * obs_norm**2
    if scheme == "pauli6_trace":
        return 8 / 3 * 144**k / eps**2 * math.log((24 * n) ** (2 * k) / delta)
    raise ValueError(f"unknown bound scheme {scheme!r}")


def bound_reduced(n: int, k: int, eps: float, delta: float, scheme: str = "pauli6_trace", obs_norm: float = 1.0) -> int:
    return math.ceil(bound_reduced_value(n, k, eps, delta, scheme, obs_norm))


def bound_overlap_value(M: int, eps: float, delta: float, scheme: str = "global_clifford", k: int = 1, tr_o2: float = 1.0, o_inf: float = 1.0) -> float:
    """Unrounded measurement count for predicting ``M`` overlaps.

    The scheme constant is ``3 tr(O^2)`` for global Cliffords and
    ``4**k ||O||_inf^2`` for single-qubit Cliffords on k-local observables.
    """
    _check_eps_delta(eps, delta)
    if M < 1:
        raise ValueError("M must be >= 1")
    if scheme == "global_clifford":
        const = 3 * tr_o2
    elif scheme == "local_clifford":
        const = 4**k * o_inf**2
    else:
        raise ValueError(f"unknown overlap scheme {scheme!r}")
    return 68 / eps**2 * math.log(2 * M / delta) * const


def bound_overlap(M: int, eps: float, delta: float, scheme: str = "global_clifford", k: int = 1, tr_o2: float = 1.0, o_inf: float = 1.0) -> int:
    return math.ceil(bound_overlap_value(M, eps, delta, scheme, k, tr_o2, o_inf))
