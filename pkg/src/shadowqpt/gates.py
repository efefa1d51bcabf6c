"""Pauli strings, basis-rotation labels and uniformly random Clifford unitaries.

Clifford tableaux follow the convention: row ``j`` (``j < k``) is the image of
``X_j`` and row ``k + j`` the image of ``Z_j``; columns are ``[x_0..x_{k-1} |
z_0..z_{k-1}]``. A row ``(x, z)`` with phase bit ``r`` denotes the Hermitian
Pauli ``(-1)**r * prod_j i**(x_j z_j) X_j**x_j Z_j**z_j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from . import _backend
from .qmat import kron

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.array([[1, 0], [0, 1j]], dtype=complex)

PAULI_1Q = {"I": I2, "X": X, "Y": Y, "Z": Z}

# single-qubit Pauli products: (a, b) -> (phase, letter) with a*b = phase*letter
_PAULI_MUL = {}
for _a, _ma in PAULI_1Q.items():
    for _b, _mb in PAULI_1Q.items():
        _prod = _ma @ _mb
        for _c, _mc in PAULI_1Q.items():
            _ph = np.trace(_mc.conj().T @ _prod) / 2
            if abs(abs(_ph) - 1) < 1e-12:
                _PAULI_MUL[_a, _b] = (complex(np.round(_ph.real) + 1j * np.round(_ph.imag)), _c)

_PHASES = (1, -1, 1j, -1j)


def _clean_phase(ph: complex) -> complex:
    for p in _PHASES:
        if abs(ph - p) < 1e-9:
            return complex(p)
    raise ValueError(f"Pauli phase must be one of +-1, +-i; got {ph}")


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis with a phase in {+1, -1, +i, -i}."""

    letters: str
    phase: complex = 1

    def __post_init__(self):
        if any(c not in "IXYZ" for c in self.letters):
            raise ValueError(f"invalid Pauli letters {self.letters!r}")
        object.__setattr__(self, "phase", _clean_phase(complex(self.phase)))

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse labels such as ``"XZ"``, ``"-YX"`` or ``"+iZ"``."""
        s = label.strip()
        phase: complex = 1
        if s.startswith(("-", "+")):
            phase = -1 if s[0] == "-" else 1
            s = s[1:]
        if s.startswith("i"):
            phase *= 1j
            s = s[1:]
        return cls(s, phase)

    @classmethod
    def on(cls, n: int, ops: dict[int, str], phase: complex = 1) -> "PauliString":
        """Pauli string on ``n`` qubits with ``ops`` mapping wire -> letter."""
        letters = ["I"] * n
        for w, c in ops.items():
            letters[w] = c
        return cls("".join(letters), phase)

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def weight(self) -> int:
        return sum(c != "I" for c in self.letters)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.letters) if c != "I")

    def is_hermitian(self) -> bool:
        return self.phase in (1, -1)

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.n != other.n:
            raise ValueError("Pauli strings act on different qubit counts")
        phase = self.phase * other.phase
        out = []
        for a, b in zip(self.letters, other.letters):
            ph, c = _PAULI_MUL[a, b]
            phase *= ph
            out.append(c)
        return PauliString("".join(out), phase)

    def __neg__(self) -> "PauliString":
        return PauliString(self.letters, -self.phase)

    def commutes_with(self, other: "PauliString") -> bool:
        anti = sum(a != "I" and b != "I" and a != b for a, b in zip(self.letters, other.letters))
        return anti % 2 == 0

    def transpose(self) -> "PauliString":
        # only Y is antisymmetric
        sign = (-1) ** self.letters.count("Y")
        return PauliString(self.letters, self.phase * sign)

    def xz(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.array([c in "XY" for c in self.letters], dtype=np.uint8)
        z = np.array([c in "ZY" for c in self.letters], dtype=np.uint8)
        return x, z

    def __str__(self) -> str:
        prefix = {1: "+", -1: "-", 1j: "+i", -1j: "-i"}[self.phase]
        return prefix + self.letters


def pauli_matrix(p: PauliString) -> np.ndarray:
    return p.phase * kron(*(PAULI_1Q[c] for c in p.letters))


def pauli_trace(m: np.ndarray, p: PauliString) -> complex:
    """``tr(P m)`` in O(dim) without forming the Pauli matrix."""
    m = np.asarray(m)
    n = p.n
    dim = 1 << n
    if m.shape != (dim, dim):
        raise ValueError(f"matrix of shape {m.shape} does not match {n}-qubit Pauli")
    x, z = p.xz()
    weights = 1 << np.arange(n - 1, -1, -1)
    xi = int(x @ weights)
    c = np.arange(dim)
    zc = np.zeros(dim, dtype=np.int64)
    for j in range(n):
        if z[j]:
            zc ^= (c >> (n - 1 - j)) & 1
    y_count = int(np.sum(x & z))
    sign = 1 - 2 * zc
    return complex(p.phase * (1j**y_count) * np.sum(sign * m[c, c ^ xi]))


def commutator(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Return ``(kappa, q)`` with ``[a, b] = kappa * q`` and ``q`` Hermitian.

    For anticommuting strings the convention is ``kappa = 2i`` and
    ``q = -i a b``; commuting strings give ``kappa = 0``.
    """
    prod = a * b
    if a.commutes_with(b):
        return 0j, PauliString(prod.letters, 1)
    q = PauliString(prod.letters, -1j * prod.phase)
    return 2j, q


# ----------------------------------------------------------------------------
# basis rotations and the Pauli-6 POVM

ROTATIONS_R = ("I", "H", "SH")
ROTATIONS_G = ("I", "H", "SH", "X", "HX", "SHX")
_LETTER_GATES = {"I": I2, "H": H, "S": S, "X": X}


def prep_gate(label: str) -> np.ndarray:
    """Gate ``G`` named by ``label`` (matrix product in written order).

    ``G|0>`` and ``G|1>`` are the eigenstates the label measures.
    """
    if label not in ROTATIONS_G:
        raise ValueError(f"unknown rotation label {label!r}")
    m = I2
    for c in label:
        m = m @ _LETTER_GATES[c]
    return m


def rotation_unitary(labels: Sequence[str]) -> np.ndarray:
    """Measurement rotation ``U = kron(G_l^dagger)``; ``U^dagger |b>`` is the measured state."""
    return kron(*(prep_gate(l).conj().T for l in labels))


# Pauli-6 states indexed 0..5 as |0>, |1>, |+>, |->, |r>, |l>
PAULI6_STATES = np.array(
    [
        [1, 0],
        [0, 1],
        [1 / np.sqrt(2), 1 / np.sqrt(2)],
        [1 / np.sqrt(2), -1 / np.sqrt(2)],
        [1 / np.sqrt(2), 1j / np.sqrt(2)],
        [1 / np.sqrt(2), -1j / np.sqrt(2)],
    ],
    dtype=complex,
)


def pauli6_effects() -> list[np.ndarray]:
    """The six effects ``|s><s| / 3`` over the eigenstates of Z, X and Y."""
    return [np.outer(v, v.conj()) / 3 for v in PAULI6_STATES]


def _state_index(v: np.ndarray) -> int:
    for i, s in enumerate(PAULI6_STATES):
        if abs(abs(np.vdot(s, v)) - 1) < 1e-9:
            return i
    raise ValueError("vector is not a Pauli-6 state")


# state code of G_label |b>
LABEL_STATE = {(l, b): _state_index(prep_gate(l)[:, b]) for l in ROTATIONS_G for b in (0, 1)}


# ----------------------------------------------------------------------------
# Clifford group

MAX_CLIFFORD_K = 8


@dataclass(frozen=True, eq=False)
class CliffordElement:
    """A k-qubit Clifford unitary stored as a binary tableau plus phase bits."""

    k: int
    tableau: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.tableau, dtype=np.uint8) & 1
        r = np.asarray(self.phases, dtype=np.uint8).reshape(-1) & 1
        if t.shape != (2 * self.k, 2 * self.k) or r.shape != (2 * self.k,):
            raise ValueError(f"tableau/phases have wrong shape for k={self.k}")
        object.__setattr__(self, "tableau", t)
        object.__setattr__(self, "phases", r)

    def __eq__(self, other):
        if not isinstance(other, CliffordElement):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.tableau, other.tableau) and np.array_equal(self.phases, other.phases)

    def __hash__(self):
        return hash(self.key())

    def key(self) -> bytes:
        return bytes([self.k]) + np.packbits(self.tableau).tobytes() + np.packbits(self.phases).tobytes()

    def index(self) -> int:
        """Integer code of (tableau, phases); distinct elements get distinct codes."""
        bits = np.concatenate([self.tableau.reshape(-1), self.phases])
        return int("".join(map(str, bits)), 2)

    def is_symplectic(self) -> bool:
        return is_symplectic(self.tableau)

    @property
    def unitary(self) -> np.ndarray:
        return clifford_unitary_batch(self.tableau[None], self.phases[None])[0]

    def to_json(self) -> dict:
        return {"tableau": self.tableau.tolist(), "phases": self.phases.tolist()}

    @classmethod
    def from_json(cls, payload: dict) -> "CliffordElement":
        t = np.asarray(payload["tableau"], dtype=np.int64)
        r = np.asarray(payload["phases"], dtype=np.int64)
        if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] % 2:
            raise ValueError("clifford tableau must be a square 2k x 2k binary matrix")
        if np.any((t != 0) & (t != 1)) or np.any((r != 0) & (r != 1)):
            raise ValueError("clifford tableau and phases must be binary")
        c = cls(t.shape[0] // 2, t, r)
        if not c.is_symplectic():
            raise ValueError("clifford tableau is not symplectic")
        return c

    @classmethod
    def identity(cls, k: int) -> "CliffordElement":
        return cls(k, np.eye(2 * k, dtype=np.uint8), np.zeros(2 * k, dtype=np.uint8))

    @classmethod
    def from_unitary(cls, u: np.ndarray) -> "CliffordElement":
        return tableau_from_unitary(u)

    def inverse(self) -> "CliffordElement":
        return tableau_from_unitary(self.unitary.conj().T)

    def compose(self, other: "CliffordElement") -> "CliffordElement":
        """Element for the product ``self.unitary @ other.unitary``."""
        return tableau_from_unitary(self.unitary @ other.unitary)


def symplectic_form(k: int) -> np.ndarray:
    o = np.zeros((2 * k, 2 * k), dtype=np.int64)
    o[:k, k:] = np.eye(k, dtype=np.int64)
    o[k:, :k] = np.eye(k, dtype=np.int64)
    return o


def is_symplectic(t: np.ndarray) -> bool:
    t = np.asarray(t, dtype=np.int64)
    k = t.shape[0] // 2
    om = symplectic_form(k)
    return bool(np.array_equal((t @ om @ t.T) % 2, om))


def symplectic_group_order(k: int) -> int:
    order = 2 ** (k * k)
    for j in range(1, k + 1):
        order *= 4**j - 1
    return order


def clifford_group_order(k: int) -> int:
    """Order of the k-qubit Clifford group modulo global phase."""
    return symplectic_group_order(k) * 4**k


def _bits_to_index(bits: Iterable[int], k: int) -> int:
    idx = 0
    for j, b in enumerate(bits):
        if b:
            idx |= 1 << (k - 1 - j)
    return idx


def _row_pauli(x: np.ndarray, z: np.ndarray, r: int) -> np.ndarray:
    mats = []
    for xj, zj in zip(x, z):
        m = I2
        if xj and zj:
            m = Y
        elif xj:
            m = X
        elif zj:
            m = Z
        mats.append(m)
    return (-1) ** int(r) * kron(*mats)


def _canonical_phase(u: np.ndarray) -> np.ndarray:
    col = u[:, 0]
    nz = np.flatnonzero(np.abs(col) > 1e-9)
    ph = col[nz[0]] / abs(col[nz[0]])
    return u / ph


_POPCOUNT = np.array([bin(i).count("1") for i in range(1 << MAX_CLIFFORD_K)], dtype=np.int64)


def _apply_row(v: np.ndarray, x: np.ndarray, z: np.ndarray, r: int) -> np.ndarray:
    """Apply the tableau-row Pauli to the columns of ``v`` without forming it."""
    k = len(x)
    dim = v.shape[0]
    c = np.arange(dim)
    xi = _bits_to_index(x, k)
    zi = _bits_to_index(z, k)
    parity = _POPCOUNT[c & zi] & 1
    phase = (-1) ** int(r) * 1j ** int(np.sum(np.asarray(x) & np.asarray(z)))
    w = (1 - 2 * parity)[:, None] * v
    return phase * w[c ^ xi]


def clifford_to_unitary(c: CliffordElement) -> np.ndarray:
    """Dense unitary realizing the tableau, canonical global phase.

    Column 0 is the joint +1 eigenvector of the Z images; column ``x`` is
    the product of the X images selected by the bits of ``x`` applied to it.
    """
    k = c.k
    dim = 1 << k
    t, r = c.tableau, c.phases
    proj = np.eye(dim, dtype=complex)
    for j in range(k):
        proj = 0.5 * (proj + _apply_row(proj, t[k + j, :k], t[k + j, k:], r[k + j]))
    norms = np.linalg.norm(proj, axis=0)
    col = int(np.argmax(norms))
    if norms[col] < 1e-6:
        raise ValueError("tableau has no stabilizer state")
    psi0 = proj[:, col] / norms[col]
    u = np.zeros((dim, dim), dtype=complex)
    u[:, 0] = psi0
    for j in range(k - 1, -1, -1):
        m = 1 << (k - 1 - j)
        u[:, m : 2 * m] = _apply_row(u[:, :m], t[j, :k], t[j, k:], r[j])
    return _canonical_phase(u)


def clifford_to_unitary_dense(c: CliffordElement) -> np.ndarray:
    """Reference construction with explicit Pauli matrices (slow; for testing)."""
    k = c.k
    dim = 1 << k
    t, r = c.tableau, c.phases
    xs = [_row_pauli(t[j, :k], t[j, k:], r[j]) for j in range(k)]
    zs = [_row_pauli(t[k + j, :k], t[k + j, k:], r[k + j]) for j in range(k)]
    proj = np.eye(dim, dtype=complex)
    for zp in zs:
        proj = proj @ (np.eye(dim) + zp) / 2
    col = int(np.argmax(np.linalg.norm(proj, axis=0)))
    psi0 = proj[:, col] / np.linalg.norm(proj[:, col])
    u = np.empty((dim, dim), dtype=complex)
    for idx in range(dim):
        v = psi0
        for j in range(k):
            if (idx >> (k - 1 - j)) & 1:
                v = xs[j] @ v
        u[:, idx] = v
    return _canonical_phase(u)


def _decompose_pauli(m: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray, int]:
    dim = 1 << k
    xi = int(np.argmax(np.abs(m[:, 0])))
    x = np.array([(xi >> (k - 1 - j)) & 1 for j in range(k)], dtype=np.uint8)
    base = m[xi, 0]
    z = np.zeros(k, dtype=np.uint8)
    for j in range(k):
        e = 1 << (k - 1 - j)
        ratio = m[xi ^ e, e] / base
        z[j] = 0 if abs(ratio - 1) < 1e-6 else 1
    s = base / (1j ** int(np.sum(x & z)))
    if abs(s - 1) < 1e-6:
        r = 0
    elif abs(s + 1) < 1e-6:
        r = 1
    else:
        raise ValueError("matrix does not conjugate Paulis to Hermitian Paulis")
    if not np.allclose(m, _row_pauli(x, z, r), atol=1e-8):
        raise ValueError("matrix is not a Clifford unitary")
    assert m.shape == (dim, dim)
    return x, z, r


def tableau_from_unitary(u: np.ndarray) -> CliffordElement:
    """Tableau of a dense Clifford unitary from the conjugation of generators."""
    u = np.asarray(u, dtype=complex)
    k = int(u.shape[0]).bit_length() - 1
    if u.shape != (1 << k, 1 << k):
        raise ValueError("unitary dimension must be a power of two")
    t = np.zeros((2 * k, 2 * k), dtype=np.uint8)
    r = np.zeros(2 * k, dtype=np.uint8)
    udg = u.conj().T
    for j in range(k):
        for row, gen in ((j, "X"), (k + j, "Z")):
            p = pauli_matrix(PauliString.on(k, {j: gen}))
            x, z, ph = _decompose_pauli(u @ p @ udg, k)
            t[row, :k], t[row, k:], r[row] = x, z, ph
    return CliffordElement(k, t, r)


def _symplectic_draws(k: int, size: int, rng: np.random.Generator) -> np.ndarray:
    draws = np.empty((size, k, 2), dtype=np.int64)
    for m in range(1, k + 1):
        draws[:, m - 1, 0] = rng.integers(1, 4**m, size=size)
        draws[:, m - 1, 1] = rng.integers(0, 2 ** (2 * m - 1), size=size)
    return draws


def interleaved_to_tableau(g: np.ndarray) -> np.ndarray:
    """Convert ``(..., 2k, 2k)`` matrices in (x0,z0,x1,z1,...) order to tableau order."""
    g = np.asarray(g)
    k = g.shape[-1] // 2
    rows = np.concatenate([np.arange(0, 2 * k, 2), np.arange(1, 2 * k, 2)])
    return g[..., rows, :][..., :, rows]


def sample_clifford_tableaux(k: int, size: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Uniform batch of Clifford tableaux ``(size, 2k, 2k)`` and phases ``(size, 2k)``."""
    if not 1 <= k <= MAX_CLIFFORD_K:
        raise ValueError(f"Clifford arity k={k} outside supported range 1..{MAX_CLIFFORD_K}")
    draws = _symplectic_draws(k, size, rng)
    phases = rng.integers(0, 2, size=(size, 2 * k)).astype(np.uint8)
    g = _backend.kernels.symplectic_batch(draws, k)
    return interleaved_to_tableau(np.asarray(g)), phases


def sample_clifford(k: int, rng: np.random.Generator) -> CliffordElement:
    """Uniformly random k-qubit Clifford (modulo global phase)."""
    t, r = sample_clifford_tableaux(k, 1, rng)
    return CliffordElement(k, t[0], r[0])


def clifford_to_matrix(c: CliffordElement) -> np.ndarray:
    return c.unitary


@lru_cache(maxsize=4)
def enumerate_cliffords(k: int) -> tuple[np.ndarray, ...]:
    """All k-qubit Cliffords mod phase by breadth-first search over H, S, CNOT.

    Practical only for ``k <= 2``; serves as an independent oracle.
    """
    gens = []
    for w in range(k):
        for g in (H, S):
            mats = [I2] * k
            mats[w] = g
            gens.append(kron(*mats))
    for a in range(k):
        for b in range(k):
            if a != b:
                gens.append(_cnot(k, a, b))

    def key(u):
        u = _canonical_phase(u)
        return (np.round(u, 6) + 0.0).tobytes()

    start = np.eye(1 << k, dtype=complex)
    seen = {key(start): start}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for g in gens:
                v = g @ u
                kv = key(v)
                if kv not in seen:
                    seen[kv] = _canonical_phase(v)
                    nxt.append(v)
        frontier = nxt
    return tuple(seen.values())


def _cnot(k: int, control: int, target: int) -> np.ndarray:
    dim = 1 << k
    u = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        j = i
        if (i >> (k - 1 - control)) & 1:
            j ^= 1 << (k - 1 - target)
        u[j, i] = 1
    return u


# memoize small Cliffords only: the 2-qubit group has 11520 elements
_CACHE_MAX_K = 3
_UNITARY_CACHE: dict[bytes, np.ndarray] = {}


def clifford_unitary_batch(tableaux: np.ndarray, phases: np.ndarray) -> np.ndarray:
    """Dense unitaries ``(B, 2**k, 2**k)`` for a batch of tableaux, memoized for small k."""
    tableaux = np.asarray(tableaux, dtype=np.uint8)
    phases = np.asarray(phases, dtype=np.uint8)
    b, two_k = tableaux.shape[:2]
    k = two_k // 2
    out = np.empty((b, 1 << k, 1 << k), dtype=complex)
    for i in range(b):
        key = bytes([k]) + tableaux[i].tobytes() + phases[i].tobytes()
        u = _UNITARY_CACHE.get(key)
        if u is None:
            u = clifford_to_unitary(CliffordElement(k, tableaux[i], phases[i]))
            if k <= _CACHE_MAX_K:
                _UNITARY_CACHE[key] = u
        out[i] = u
    return out
