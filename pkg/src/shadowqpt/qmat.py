"""Dense complex-matrix substrate and quantum-information metrics.

All matrices are plain ``numpy`` arrays of dtype ``complex128``. Tensor
factors are ordered big-endian: qubit 0 is the most significant factor, so
the basis index of ``|q0 q1 ... q_{m-1}>`` is ``sum(q_j << (m - 1 - j))``.

A Choi matrix of an ``n``-qubit channel lives on ``2n`` qubits: the input
copy occupies qubits ``0..n-1`` and the channel output qubits ``n..2n-1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

HERMITIAN_ATOL = 1e-10


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    """Choi matrix of an ``n``-qubit channel on the (input, output) register.

    ``normalized=False`` means trace ``2**n`` (the usual Lambda); ``True``
    means the trace-one process state ``Lambda / 2**n``.
    """

    n: int
    mat: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=complex)
        dim = 4**self.n
        if mat.shape != (dim, dim):
            raise ValueError(f"Choi matrix for n={self.n} must be {dim}x{dim}, got {mat.shape}")
        object.__setattr__(self, "mat", mat)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.mat))

    def nominal_trace(self) -> float:
        return 1.0 if self.normalized else float(2**self.n)

    def unnormalized(self) -> "ChoiMatrix":
        if not self.normalized:
            return self
        return ChoiMatrix(self.n, self.mat * 2**self.n, normalized=False)

    def as_normalized(self) -> "ChoiMatrix":
        if self.normalized:
            return self
        return ChoiMatrix(self.n, self.mat / 2**self.n, normalized=True)

    def is_hermitian(self, tol: float = HERMITIAN_ATOL) -> bool:
        return is_hermitian(self.mat, tol)

    def is_psd(self, tol: float = 1e-10) -> bool:
        return is_psd(self.mat, tol)


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_ATOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def is_psd(m: np.ndarray, tol: float = 1e-10) -> bool:
    if not is_hermitian(m, max(tol, HERMITIAN_ATOL)):
        return False
    return bool(np.linalg.eigvalsh(hermitize(m))[0] >= -tol)


def hermitize(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    return 0.5 * (m + m.conj().T)


def num_qubits(dim: int) -> int:
    q = int(dim).bit_length() - 1
    if dim < 1 or 1 << q != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return q


def kron(*mats: np.ndarray) -> np.ndarray:
    """Kronecker product of the arguments, first argument most significant."""
    if not mats:
        return np.ones((1, 1), dtype=complex)
    return reduce(np.kron, (np.asarray(m, dtype=complex) for m in mats))


def partial_trace(m: np.ndarray, keep: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    Kept subsystems appear in their original relative order regardless of the
    order given in ``keep``.
    """
    m = np.asarray(m, dtype=complex)
    dims = [int(d) for d in dims]
    total = int(np.prod(dims)) if dims else 1
    if m.shape != (total, total):
        raise ValueError(f"matrix shape {m.shape} does not match subsystem dims {dims}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    nsys = len(dims)
    t = m.reshape(dims + dims)
    traced = [i for i in range(nsys) if i not in keep]
    # contract each traced row axis with its column axis
    row = list(range(nsys))
    col = list(range(nsys, 2 * nsys))
    for i in traced:
        col[i] = row[i]
    out_idx = [row[i] for i in keep] + [col[i] for i in keep]
    reduced = np.einsum(t, row + col, out_idx)
    kd = int(np.prod([dims[i] for i in keep])) if keep else 1
    return reduced.reshape(kd, kd)


def eig_hermitian(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition with eigenvalues sorted in descending order."""
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m):
        raise ValueError("eig_hermitian requires a Hermitian matrix")
    w, v = np.linalg.eigh(hermitize(m))
    return w[::-1].copy(), v[:, ::-1].copy()


def expm_i_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """Return ``exp(-i h t)`` for Hermitian ``h``."""
    w, v = eig_hermitian(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def _check_pair(l1: ChoiMatrix, l2: ChoiMatrix) -> None:
    if l1.n != l2.n:
        raise ValueError(f"Choi matrices act on different qubit counts ({l1.n} vs {l2.n})")
    if l1.normalized != l2.normalized:
        raise ValueError("Choi matrices carry different normalization flags")


def trace_distance(l1: ChoiMatrix, l2: ChoiMatrix) -> float:
    """Normalized trace distance ``tr|L1 - L2| / 2**(n+1)`` of unnormalized Chois."""
    _check_pair(l1, l2)
    diff = l1.unnormalized().mat - l2.unnormalized().mat
    s = np.linalg.svd(diff, compute_uv=False)
    return float(s.sum() / 2 ** (l1.n + 1))


def frobenius_distance(l1: ChoiMatrix, l2: ChoiMatrix) -> float:
    _check_pair(l1, l2)
    diff = l1.unnormalized().mat - l2.unnormalized().mat
    return float(np.linalg.norm(diff) / 2**l1.n)


def purity(l: ChoiMatrix) -> float:
    """``tr[L^2] / 4**n`` of the unnormalized Choi matrix."""
    m = l.unnormalized().mat
    return float(np.real(np.einsum("ij,ji->", m, m)) / 4**l.n)
