"""Physicality repair of Choi estimates and an iterative maximum-likelihood baseline."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .acquire import MeasurementRecord
from .channels import apply_channel
from .qmat import ChoiMatrix, hermitize, partial_trace
from .shadows import overlap

TIE_TOL = 1e-9
P_FLOOR = 1e-12


@dataclass
class ProjectionReport:
    method: str
    input_trace: float
    output_trace: float
    negative_mass: float = 0.0
    iterations: int = 0
    converged: bool = True
    degenerate: bool = False
    regularized: int = 0
    log_likelihood: list | None = None

    def to_json(self) -> dict:
        d = asdict(self)
        if d["log_likelihood"] is None:
            del d["log_likelihood"]
        return d


# ----------------------------------------------------------------------------
# CP projection


def simplex_eigenvalues(mu: np.ndarray, total: float) -> np.ndarray:
    """Closest non-negative vector with the given sum (input in any order).

    Scans from the smallest value, zeroing each one whose share of the
    accumulated negative mass would leave it negative.
    """
    mu = np.asarray(mu, dtype=float)
    order = np.argsort(mu)[::-1]
    lam = mu[order] + (total - mu.sum()) / len(mu)
    i = len(lam)
    acc = 0.0
    while i > 0 and lam[i - 1] + acc / i < 0:
        acc += lam[i - 1]
        lam[i - 1] = 0.0
        i -= 1
    lam[:i] += acc / i
    out = np.empty_like(lam)
    out[order] = lam
    return out


def cp_project_matrix(m: np.ndarray, trace: float | None = None) -> tuple[np.ndarray, float]:
    """Closest PSD matrix (Frobenius) with the given trace; also returns the clipped negative mass."""
    h = hermitize(m)
    w, v = np.linalg.eigh(h)
    total = float(np.sum(w)) if trace is None else float(trace)
    if total <= 0:
        raise ValueError(f"CP projection needs a positive target trace, got {total}")
    lam = simplex_eigenvalues(w, total)
    neg = float(-np.sum(w[w < 0]))
    return (v * lam) @ v.conj().T, neg


def cp_project(l: ChoiMatrix, return_report: bool = False):
    """Hermitize, then map to the closest PSD matrix of equal trace."""
    tr = float(np.real(l.trace()))
    m, neg = cp_project_matrix(l.mat)
    out = ChoiMatrix(l.n, m, l.normalized)
    if return_report:
        return out, ProjectionReport("cp", tr, float(np.real(out.trace())), neg)
    return out


# ----------------------------------------------------------------------------
# TP projection


def tp_project(l: ChoiMatrix, return_report: bool = False):
    """Affine projection onto ``tr_out Lambda = I``: ``Lambda - (tr_out Lambda - I) (x) I / 2**n``."""
    lu = l.unnormalized()
    n = l.n
    d = 1 << n
    tin = partial_trace(lu.mat, list(range(n)), [2] * (2 * n))
    m = lu.mat - np.kron(tin - np.eye(d), np.eye(d) / d)
    out = ChoiMatrix(n, m)
    if l.normalized:
        out = out.as_normalized()
    if return_report:
        return out, ProjectionReport("tp", float(np.real(l.trace())), float(np.real(out.trace())))
    return out


# ----------------------------------------------------------------------------
# purification


def _canonical_vector(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-9)
    return v * (abs(v[nz[0]]) / v[nz[0]])


def purify(l: ChoiMatrix, return_report: bool = False):
    """Keep the dominant eigenvector: ``nominal_trace * v v^dagger``.

    When the top eigenvalue is degenerate (within 1e-9) the eigenvector whose
    phase-canonicalized entries are lexicographically smallest is chosen.
    """
    w, v = np.linalg.eigh(hermitize(l.mat))
    w, v = w[::-1], v[:, ::-1]
    top = np.flatnonzero(w >= w[0] - TIE_TOL)
    cands = [_canonical_vector(v[:, i]) for i in top]
    if len(cands) > 1:
        keys = [tuple(np.round(np.column_stack([c.real, c.imag]).reshape(-1), 9)) for c in cands]
        vec = cands[int(min(range(len(cands)), key=lambda i: keys[i]))]
    else:
        vec = cands[0]
    out = ChoiMatrix(l.n, l.nominal_trace() * np.outer(vec, vec.conj()), l.normalized)
    if return_report:
        rep = ProjectionReport("purify", float(np.real(l.trace())), float(np.real(out.trace())), degenerate=len(cands) > 1)
        return out, rep
    return out


# ----------------------------------------------------------------------------
# maximum likelihood


@dataclass(eq=False)
class EffectData:
    """Observed rank-one effects ``e_j`` with frequencies ``f_j`` and setting shares ``w_j``.

    Probabilities are ``w_j <e_j|rho|e_j>`` for the trace-one process state
    ``rho``; the full effect set (observed or not) resolves the identity.
    """

    n: int
    vectors: np.ndarray  # (J, 4**n)
    freqs: np.ndarray  # (J,)
    shares: np.ndarray  # (J,)


def _effect_vector(st, outcome: int) -> np.ndarray:
    n = st.n
    units = st.wire_unitaries()
    width, off = st.width, st.measured_offset
    parts = []
    for g in sorted(units):
        u = units[g]
        if st.scheme == "two_sided" and g[0] < n:
            # prepared state U^dagger |0>, entering transposed
            parts.append((g, u[0, :].copy()))
            continue
        b = 0
        for w in g:
            b = (b << 1) | ((outcome >> (width - 1 - (w - off))) & 1)
        parts.append((g, u[b, :].conj()))
    vec = np.ones(1, dtype=complex)
    order = []
    for g, p in parts:
        vec = np.kron(vec, p)
        order.extend(g)
    nq = 2 * n
    t = vec.reshape((2,) * nq).transpose([order.index(q) for q in range(nq)]).reshape(-1)
    if st.scheme == "two_sided":
        t = t * 2 ** (n / 2)
    return t


def effect_data(records: Sequence[MeasurementRecord]) -> EffectData:
    records = list(records)
    if not records:
        raise ValueError("no records for maximum likelihood")
    n = records[0].n
    total = sum(r.reps for r in records)
    counts: dict = {}
    shares: dict = {}
    vecs: dict = {}
    setting_reps: dict = {}
    for r in records:
        key = repr(r.setting.to_json())
        setting_reps[key] = setting_reps.get(key, 0) + r.reps
    for r in records:
        key = repr(r.setting.to_json())
        for b in np.unique(r.outcome_ints()):
            ek = (key, int(b))
            if ek not in vecs:
                vecs[ek] = _effect_vector(r.setting, int(b))
                shares[ek] = setting_reps[key] / total
        for b in r.outcome_ints():
            ek = (key, int(b))
            counts[ek] = counts.get(ek, 0) + 1
    keys = list(vecs)
    return EffectData(
        n,
        np.array([vecs[k] for k in keys]),
        np.array([counts[k] / total for k in keys]),
        np.array([shares[k] for k in keys]),
    )


def effect_data_exact(n: int, settings, probabilities, shares=None) -> EffectData:
    """Effect data with frequencies equal to exact outcome probabilities."""
    vecs, freqs, sh = [], [], []
    shares = np.full(len(settings), 1.0 / len(settings)) if shares is None else np.asarray(shares)
    for st, p, s in zip(settings, probabilities, shares):
        for b, pb in enumerate(p):
            if pb > 0:
                vecs.append(_effect_vector(st, b))
                freqs.append(s * pb)
                sh.append(s)
    return EffectData(n, np.array(vecs), np.array(freqs), np.array(sh))


def log_likelihood(data: EffectData, rho: np.ndarray) -> float:
    q = np.real(np.einsum("ji,ik,jk->j", data.vectors.conj(), rho, data.vectors))
    return float(np.sum(data.freqs * np.log(np.maximum(q * data.shares, P_FLOOR))))


def mle_reconstruct(
    records,
    init: np.ndarray | str | None = None,
    max_iter: int = 500,
    tol: float = 1e-3,
    min_iter: int = 100,
    rng: np.random.Generator | None = None,
    return_report: bool = False,
):
    """Iterative ``R rho R`` maximum likelihood over the observed effects.

    ``records`` may be measurement records or prepared :class:`EffectData`.
    Iteration stops once at least ``min_iter`` steps are done and the
    Frobenius change of the trace-one iterate is at most ``tol``, or at
    ``max_iter``. ``init`` is a trace-one matrix, ``"mixed"`` (default) or
    ``"random"``.
    """
    data = records if isinstance(records, EffectData) else effect_data(records)
    n = data.n
    d = 4**n
    if init is None or (isinstance(init, str) and init == "mixed"):
        rho = np.eye(d, dtype=complex) / d
    elif isinstance(init, str) and init == "random":
        rng = rng or np.random.default_rng(0)
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho = g @ g.conj().T
        rho /= np.trace(rho)
    else:
        rho = np.asarray(init, dtype=complex)
        rho = rho / np.trace(rho)
    e = data.vectors
    regularized = 0
    history = [log_likelihood(data, rho)]
    converged = False
    k = 0
    while k < max_iter:
        q = np.real(np.einsum("ji,ik,jk->j", e.conj(), rho, e))
        low = q < P_FLOOR
        regularized += int(np.sum(low))
        q = np.maximum(q, P_FLOOR)
        r = (e.T * (data.freqs / q)) @ e.conj()
        new = r @ rho @ r
        new = hermitize(new / np.trace(new))
        k += 1
        delta = np.linalg.norm(new - rho)
        rho = new
        history.append(log_likelihood(data, rho))
        if k >= min_iter and delta <= tol:
            converged = True
            break
    out = ChoiMatrix(n, rho * 2**n)
    if return_report:
        rep = ProjectionReport("mle", 1.0, float(np.real(out.trace())), iterations=k, converged=converged, regularized=regularized, log_likelihood=history)
        return out, rep
    return out


# ----------------------------------------------------------------------------
# composed pipelines

STEPS = ("cp", "tp", "purify")


def apply_steps(l: ChoiMatrix, steps: Sequence[str]) -> tuple[ChoiMatrix, list[ProjectionReport]]:
    """Apply ``cp``, ``tp`` and ``purify`` in the given order."""
    fns = {"cp": cp_project, "tp": tp_project, "purify": purify}
    reports = []
    for s in steps:
        if s not in fns:
            raise ValueError(f"unknown post-processing step {s!r}")
        l, rep = fns[s](l, return_report=True)
        reports.append(rep)
    return l, reports


OVERLAP_MODES = ("full", "purified", "raw")


def overlap_pipeline(l_raw: ChoiMatrix, rho_in: np.ndarray, sigma: np.ndarray, mode: str = "full") -> float:
    """Predicted ``tr[E(rho_in) sigma]`` from a raw Choi estimate.

    ``full``: CP then TP on the Choi matrix, apply it to ``rho_in``, CP-project
    the output to a unit-trace state, overlap with ``sigma``. ``purified``:
    overlap with the purified Choi matrix. ``raw``: no repair.
    """
    if mode == "full":
        lam = tp_project(cp_project(l_raw))
        out = apply_channel(lam, rho_in)
        out, _ = cp_project_matrix(out, 1.0)
        return float(np.real(np.trace(out @ np.asarray(sigma))))
    if mode == "purified":
        return overlap(purify(l_raw), rho_in, sigma)
    if mode == "raw":
        return overlap(l_raw, rho_in, sigma)
    raise ValueError(f"unknown overlap mode {mode!r}")
