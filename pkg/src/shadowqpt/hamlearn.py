"""Hamiltonian learning from shadow estimates of a short-time propagator.

For ``U = exp(-iHt)`` and a probe ``p`` with ``[h_i, p] = kappa q``,
``tr(E(p) q) = -i t c_i kappa 2**n + O(t**2)`` for the channel ``E(x) = U x U^dagger``.
The estimate ``c_i = Re[i tr(E(p) q) / (t kappa 2**n)]`` therefore has an
``O(t**2)`` systematic offset (odd orders vanish for real Hamiltonians).
``tr(E(p) q)`` equals ``tr[(p^T (x) q) Lambda]`` on the Choi register.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .acquire import acquire
from .channels import HamiltonianTerms, propagator, random_tfim
from .gates import PauliString, commutator, pauli_matrix, pauli_trace
from .qmat import ChoiMatrix
from .shadows import pauli_snapshot_values, shadow_data


@dataclass(frozen=True)
class Probe:
    """Probe ``p`` for term ``h`` with ``[h, p] = kappa * q``."""

    h: PauliString
    p: PauliString
    q: PauliString
    kappa: complex

    def choi_pauli(self) -> PauliString:
        """``p^T (x) q`` as a Pauli string on the Choi register."""
        pt = self.p.transpose()
        return PauliString(pt.letters + self.q.letters, pt.phase * self.q.phase)

    def verify(self) -> bool:
        h, p, q = (pauli_matrix(x) for x in (self.h, self.p, self.q))
        return bool(np.allclose(h @ p - p @ h, self.kappa * q, atol=1e-12))


def make_probe(h: PauliString, p: PauliString) -> Probe:
    kappa, q = commutator(h, p)
    if kappa == 0:
        raise ValueError(f"probe {p} commutes with term {h}")
    return Probe(h, p, q, kappa)


def default_probes(ht: HamiltonianTerms) -> list[Probe]:
    """``Z_i`` for ``X_i X_{i+1}`` couplings and ``X_i`` for ``Z_i`` fields."""
    probes = []
    n = ht.n
    for _, h in ht.terms:
        sup = h.support
        letters = "".join(h.letters[w] for w in sup)
        if letters == "XX" and len(sup) == 2 and sup[1] == sup[0] + 1:
            p = PauliString.on(n, {sup[0]: "Z"})
        elif letters == "Z":
            p = PauliString.on(n, {sup[0]: "X"})
        else:
            raise ValueError(f"no probe rule registered for term {h}")
        probes.append(make_probe(h, p))
    return probes


def _coefficient(value: complex, probe: Probe, n: int, t: float) -> float:
    return float(np.real(1j * value / (t * probe.kappa * 2**n)))


def _check_t(t: float) -> None:
    if t == 0:
        raise ValueError("evolution time t must be nonzero")


def estimate_coefficients(choi_est: ChoiMatrix, probes: Sequence[Probe], t: float) -> np.ndarray:
    """Coefficients from a dense Choi matrix of ``exp(-iHt)`` (estimated or exact)."""
    _check_t(t)
    m = choi_est.unnormalized().mat
    return np.array([_coefficient(pauli_trace(m, pr.choi_pauli()), pr, choi_est.n, t) for pr in probes])


def renormalized_coefficients(exact_choi: ChoiMatrix, probes: Sequence[Probe], t: float) -> np.ndarray:
    """The values the estimator converges to at finite ``t``."""
    return estimate_coefficients(exact_choi, probes, t)


def estimate_coefficients_from_records(records, probes: Sequence[Probe], t: float) -> np.ndarray:
    """Same contraction evaluated snapshot by snapshot, without a dense Choi matrix."""
    _check_t(t)
    data = shadow_data(records)
    return np.array([_coefficient(np.mean(pauli_snapshot_values(data, pr.choi_pauli())), pr, data.n, t) for pr in probes])


# ----------------------------------------------------------------------------
# experiment driver


@dataclass(frozen=True)
class HamLearnTask:
    ht: HamiltonianTerms
    t: float
    N: int
    scheme: str = "two_sided"
    reps: int = 1
    probes: tuple[Probe, ...] | None = None

    def resolved_probes(self) -> list[Probe]:
        return list(self.probes) if self.probes is not None else default_probes(self.ht)


@dataclass
class HamLearnResult:
    c_true: np.ndarray
    c_renorm: np.ndarray
    c_est: np.ndarray

    @property
    def abs_err(self) -> np.ndarray:
        return np.abs(self.c_est - self.c_true)

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.abs_err))

    @property
    def systematic_error(self) -> float:
        return float(np.mean(np.abs(self.c_true - self.c_renorm)))

    @property
    def statistical_error(self) -> float:
        return float(np.mean(np.abs(self.c_est - self.c_renorm)))


def run_hamlearn(task: HamLearnTask, seed=0, workers: int = 1) -> HamLearnResult:
    """Simulate shadows of ``exp(-iHt)`` and recover the coefficients."""
    _check_t(task.t)
    if task.N % task.reps:
        raise ValueError("shadow count N must be a multiple of reps")
    probes = task.resolved_probes()
    spec = propagator(task.ht, task.t)
    records = acquire(spec, task.scheme, n_settings=task.N // task.reps, reps=task.reps, seed=seed, workers=workers)
    c_est = estimate_coefficients_from_records(records, probes, task.t)
    c_renorm = renormalized_coefficients(spec.choi(), probes, task.t)
    return HamLearnResult(task.ht.coefficients, c_renorm, c_est)


def realization_seed(seed: int, realization: int, t_index: int = 0) -> int:
    """Independent stream key for a (disorder realization, t-grid point) pair."""
    return int(np.random.SeedSequence([seed, realization, t_index]).generate_state(1, np.uint64)[0] >> 1)


def tfim_realization(n: int, seed: int, realization: int) -> HamiltonianTerms:
    return random_tfim(n, np.random.default_rng([seed, realization]))


def optimal_t(ht: HamiltonianTerms, N: int, t_grid: Sequence[float], seed: int = 0, scheme: str = "two_sided") -> tuple[float, np.ndarray]:
    """Grid point with the smallest measured mean error, and the errors on the grid."""
    errs = np.array(
        [run_hamlearn(HamLearnTask(ht, t, N, scheme), realization_seed(seed, 0, i)).mean_error for i, t in enumerate(t_grid)]
    )
    return float(t_grid[int(np.argmin(errs))]), errs


CSV_COLUMNS = ("n", "t", "N", "seed", "term_index", "c_true", "c_renorm", "c_est", "abs_err")


def result_rows(res: HamLearnResult, n: int, t: float, N: int, seed: int) -> list[tuple]:
    return [
        (n, t, N, seed, i, float(res.c_true[i]), float(res.c_renorm[i]), float(res.c_est[i]), float(res.abs_err[i]))
        for i in range(len(res.c_true))
    ]


def bound_hamlearn_value(n: int, k: int, t: float, eps: float, delta: float) -> float:
    _check_t(t)
    if not 0 < eps <= 1 or not 0 < delta < 1:
        raise ValueError("need 0 < eps <= 1 and 0 < delta < 1")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    return 36**k / (t**2 * eps**2) * 2 * k * math.log(8 * n) * math.log(1 / delta)


def bound_hamlearn(n: int, k: int, t: float, eps: float, delta: float) -> int:
    """Shadow count sufficient to learn k-local coefficients to error ``eps``."""
    return math.ceil(bound_hamlearn_value(n, k, t, eps, delta))
