"""Channel representations: Choi construction, channel action, GHZ circuits,
transverse-field Ising Hamiltonians and reduced processes.

The Choi matrix of an ``n``-qubit channel ``E`` is
``Lambda = sum_ij |i><j| (x) E(|i><j|)`` (trace ``2**n``), with the input copy
on the first ``n`` tensor factors. Channel action is
``E(rho) = tr_in[(rho^T (x) I) Lambda]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .gates import CliffordElement, H, I2, PauliString, S, X, Y, Z, _cnot, pauli_matrix
from .qmat import ChoiMatrix, eig_hermitian, expm_i_hermitian, kron, partial_trace

UNITARY_ATOL = 1e-9


# ----------------------------------------------------------------------------
# gate lists


def _rot(axis: np.ndarray, theta: float) -> np.ndarray:
    return math.cos(theta / 2) * I2 - 1j * math.sin(theta / 2) * axis


_FIXED_1Q = {"I": I2, "H": H, "S": S, "X": X, "Y": Y, "Z": Z, "SDG": S.conj().T}
_PARAM_1Q = {"RX": X, "RY": Y, "RZ": Z}
GATE_NAMES = tuple(_FIXED_1Q) + tuple(_PARAM_1Q) + ("CNOT", "CZ")


@dataclass(frozen=True)
class Gate:
    name: str
    wires: tuple[int, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self):
        name = self.name.upper()
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        arity = 2 if name in ("CNOT", "CZ") else 1
        if name not in GATE_NAMES:
            raise ValueError(f"unknown gate {self.name!r}")
        if len(self.wires) != arity or len(set(self.wires)) != arity:
            raise ValueError(f"gate {name} needs {arity} distinct wire(s), got {self.wires}")
        if len(self.params) != (1 if name in _PARAM_1Q else 0):
            raise ValueError(f"gate {name} has wrong parameter count {len(self.params)}")

    def matrix(self, n: int) -> np.ndarray:
        if any(w < 0 or w >= n for w in self.wires):
            raise ValueError(f"gate {self.name} wires {self.wires} outside {n}-qubit register")
        if self.name == "CNOT":
            return _cnot(n, *self.wires)
        if self.name == "CZ":
            d = 1 << n
            idx = np.arange(d)
            a, b = self.wires
            bits = ((idx >> (n - 1 - a)) & 1) & ((idx >> (n - 1 - b)) & 1)
            return np.diag((1 - 2 * bits).astype(complex))
        g = _FIXED_1Q.get(self.name)
        if g is None:
            g = _rot(_PARAM_1Q[self.name], self.params[0])
        mats = [I2] * n
        mats[self.wires[0]] = g
        return kron(*mats)

    def to_json(self) -> dict:
        return {"name": self.name, "wires": list(self.wires), "params": list(self.params)}

    @classmethod
    def from_json(cls, d: dict) -> "Gate":
        return cls(d["name"], tuple(d["wires"]), tuple(d.get("params", ())))


def gates_unitary(gates: Sequence[Gate], n: int) -> np.ndarray:
    u = np.eye(1 << n, dtype=complex)
    for g in gates:
        u = g.matrix(n) @ u
    return u


def circuit_depth(gates: Sequence[Gate]) -> int:
    """Depth under as-soon-as-possible layering (gates on disjoint wires share a layer)."""
    level: dict[int, int] = {}
    depth = 0
    for g in gates:
        d = 1 + max((level.get(w, 0) for w in g.wires), default=0)
        for w in g.wires:
            level[w] = d
        depth = max(depth, d)
    return depth


def ghz_gates(n: int) -> list[Gate]:
    """GHZ preparation: H on qubit 0, then CNOT fan-out doubling the entangled set each layer.

    Depth is ``1 + ceil(log2 n)``: 2, 3, 3 for n = 2, 3, 4.
    """
    if n < 2:
        raise ValueError("GHZ process needs n >= 2")
    gates = [Gate("H", (0,))]
    active = [0]
    nxt = 1
    while nxt < n:
        for c in list(active):
            if nxt >= n:
                break
            gates.append(Gate("CNOT", (c, nxt)))
            active.append(nxt)
            nxt += 1
    return gates


# ----------------------------------------------------------------------------
# Hamiltonians


@dataclass(frozen=True)
class HamiltonianTerms:
    """``H = sum_i c_i h_i`` with Hermitian Pauli strings ``h_i``."""

    terms: tuple[tuple[float, PauliString], ...]

    def __post_init__(self):
        terms = tuple((float(c), p if isinstance(p, PauliString) else PauliString.from_label(p)) for c, p in self.terms)
        if not terms:
            raise ValueError("Hamiltonian needs at least one term")
        n = terms[0][1].n
        for _, p in terms:
            if p.n != n:
                raise ValueError("all Hamiltonian terms must act on the same qubit count")
            if p.weight < 1:
                raise ValueError("Hamiltonian terms must have weight >= 1")
            if not p.is_hermitian():
                raise ValueError(f"Hamiltonian term {p} is not Hermitian")
        object.__setattr__(self, "terms", terms)

    @property
    def n(self) -> int:
        return self.terms[0][1].n

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms])

    @property
    def paulis(self) -> list[PauliString]:
        return [p for _, p in self.terms]

    def matrix(self) -> np.ndarray:
        return sum(c * pauli_matrix(p) for c, p in self.terms)

    def to_json(self) -> list:
        return [[c, str(p)] for c, p in self.terms]

    @classmethod
    def from_json(cls, data) -> "HamiltonianTerms":
        return cls(tuple((c, PauliString.from_label(p)) for c, p in data))


def tfim_hamiltonian(n: int, J: Sequence[float], h: Sequence[float]) -> HamiltonianTerms:
    """Open-chain ``sum_i J_i X_i X_{i+1} + sum_i h_i Z_i`` (J terms first, then h terms)."""
    if n < 1 or len(J) != n - 1 or len(h) != n:
        raise ValueError(f"TFIM on n={n} needs {n - 1} couplings and {n} fields, got {len(J)} and {len(h)}")
    terms = [(J[i], PauliString.on(n, {i: "X", i + 1: "X"})) for i in range(n - 1)]
    terms += [(h[i], PauliString.on(n, {i: "Z"})) for i in range(n)]
    return HamiltonianTerms(tuple(terms))


def random_tfim(n: int, rng: np.random.Generator) -> HamiltonianTerms:
    """TFIM with couplings and fields uniform in [-1, 1)."""
    J = rng.uniform(-1.0, 1.0, size=n - 1)
    h = rng.uniform(-1.0, 1.0, size=n)
    return tfim_hamiltonian(n, J.tolist(), h.tolist())


# ----------------------------------------------------------------------------
# channel descriptions

CHANNEL_KINDS = ("unitary", "gates", "hamiltonian", "depolarized")


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    """Description of an ``n``-qubit channel.

    ``kind`` selects the payload: ``unitary`` (dense matrix), ``gates``
    (gate list), ``hamiltonian`` (propagator ``exp(-iHt)``) or ``depolarized``
    (``inner`` channel mixed with the fully depolarizing one at strength ``p``).
    """

    kind: str
    n: int
    unitary: np.ndarray | None = None
    gates: tuple[Gate, ...] = ()
    ham: HamiltonianTerms | None = None
    t: float = 0.0
    inner: "ChannelSpec | None" = None
    p: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in CHANNEL_KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("channel needs n >= 1")
        if self.kind == "unitary":
            u = np.asarray(self.unitary, dtype=complex)
            d = 1 << self.n
            if u.shape != (d, d) or not np.allclose(u @ u.conj().T, np.eye(d), atol=UNITARY_ATOL):
                raise ValueError(f"unitary channel needs a {d}x{d} unitary matrix")
            object.__setattr__(self, "unitary", u)
        elif self.kind == "gates":
            object.__setattr__(self, "gates", tuple(g if isinstance(g, Gate) else Gate.from_json(g) for g in self.gates))
            gates_unitary(self.gates, self.n)
        elif self.kind == "hamiltonian":
            if self.ham is None or self.ham.n != self.n:
                raise ValueError("hamiltonian channel needs terms on n qubits")
        else:
            if self.inner is None or self.inner.n != self.n:
                raise ValueError("depolarized channel needs an inner channel on n qubits")
            if not 0.0 <= self.p <= 1.0:
                raise ValueError(f"depolarizing strength must lie in [0, 1], got {self.p}")

    # -- constructors
    @classmethod
    def from_unitary(cls, u: np.ndarray) -> "ChannelSpec":
        u = np.asarray(u, dtype=complex)
        return cls("unitary", int(u.shape[0]).bit_length() - 1, unitary=u)

    @classmethod
    def from_gates(cls, gates: Sequence[Gate], n: int) -> "ChannelSpec":
        return cls("gates", n, gates=tuple(gates))

    def depolarized(self, p: float) -> "ChannelSpec":
        return ChannelSpec("depolarized", self.n, inner=self, p=p)

    # -- realizations
    def is_unitary(self) -> bool:
        if self.kind == "depolarized":
            return self.p == 0.0 and self.inner.is_unitary()
        return True

    def matrix(self) -> np.ndarray:
        """Dense unitary of a unitary channel."""
        if "u" not in self._cache:
            if self.kind == "unitary":
                u = self.unitary
            elif self.kind == "gates":
                u = gates_unitary(self.gates, self.n)
            elif self.kind == "hamiltonian":
                u = expm_i_hermitian(self.ham.matrix(), self.t)
            elif self.is_unitary():
                u = self.inner.matrix()
            else:
                raise ValueError("depolarized channel has no unitary realization")
            self._cache["u"] = u
        return self._cache["u"]

    def choi(self) -> ChoiMatrix:
        if "choi" not in self._cache:
            if self.kind == "depolarized":
                c = depolarize(self.inner.choi(), self.p)
            else:
                c = choi_from_unitary(self.matrix(), self.n)
            self._cache["choi"] = c
        return self._cache["choi"]

    def mixture(self) -> tuple[list[np.ndarray], float]:
        """Kraus operators and white-noise weight: ``E(rho) = sum K rho K^+ + w tr(rho) I/2**n``.

        The Kraus part is scaled so that the full channel is trace preserving.
        """
        if self.kind != "depolarized":
            return [self.matrix()], 0.0
        kraus, w = self.inner.mixture()
        s = math.sqrt(1.0 - self.p)
        return [s * k for k in kraus], w * (1.0 - self.p) + self.p

    def to_json(self) -> dict:
        d: dict = {"kind": self.kind, "n": self.n}
        if self.kind == "unitary":
            d["matrix"] = [[[z.real, z.imag] for z in row] for row in self.unitary]
        elif self.kind == "gates":
            d["gates"] = [g.to_json() for g in self.gates]
        elif self.kind == "hamiltonian":
            d["terms"] = self.ham.to_json()
            d["t"] = self.t
        else:
            d["inner"] = self.inner.to_json()
            d["p"] = self.p
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ChannelSpec":
        kind, n = d["kind"], int(d["n"])
        if kind == "unitary":
            m = np.asarray(d["matrix"], dtype=float)
            return cls(kind, n, unitary=m[..., 0] + 1j * m[..., 1])
        if kind == "gates":
            return cls(kind, n, gates=tuple(Gate.from_json(g) for g in d["gates"]))
        if kind == "hamiltonian":
            return cls(kind, n, ham=HamiltonianTerms.from_json(d["terms"]), t=float(d["t"]))
        if kind == "depolarized":
            return cls(kind, n, inner=cls.from_json(d["inner"]), p=float(d["p"]))
        raise ValueError(f"unknown channel kind {kind!r}")


def ghz_process(n: int) -> ChannelSpec:
    return ChannelSpec.from_gates(ghz_gates(n), n)


def identity_channel(n: int) -> ChannelSpec:
    return ChannelSpec.from_unitary(np.eye(1 << n))


def propagator(ht: HamiltonianTerms, t: float) -> ChannelSpec:
    """Unitary channel ``exp(-i H t)``."""
    return ChannelSpec("hamiltonian", ht.n, ham=ht, t=float(t))


def clifford_channel(c: CliffordElement) -> ChannelSpec:
    return ChannelSpec.from_unitary(c.unitary)


# ----------------------------------------------------------------------------
# Choi matrices


def choi_from_unitary(u: np.ndarray, n: int) -> ChoiMatrix:
    """Rank-one Choi matrix ``|u>><<u|`` with ``|u>> = sum_i |i> (x) u|i>``."""
    u = np.asarray(u, dtype=complex)
    d = 1 << n
    if u.shape != (d, d):
        raise ValueError(f"unitary must be {d}x{d} for n={n}")
    if not np.allclose(u @ u.conj().T, np.eye(d), atol=UNITARY_ATOL):
        raise ValueError("choi_from_unitary requires a unitary matrix")
    v = u.T.reshape(-1)
    return ChoiMatrix(n, np.outer(v, v.conj()))


def choi_from_kraus(kraus: Sequence[np.ndarray], n: int) -> ChoiMatrix:
    d = 1 << n
    m = np.zeros((d * d, d * d), dtype=complex)
    for k in kraus:
        v = np.asarray(k, dtype=complex).T.reshape(-1)
        m += np.outer(v, v.conj())
    return ChoiMatrix(n, m)


def kraus_from_choi(l: ChoiMatrix, tol: float = 1e-12) -> list[np.ndarray]:
    """Kraus operators from the eigen-decomposition of a PSD Choi matrix."""
    w, v = eig_hermitian(l.unnormalized().mat)
    d = 1 << l.n
    return [math.sqrt(lam) * v[:, i].reshape(d, d).T for i, lam in enumerate(w) if lam > tol]


def apply_channel(l: ChoiMatrix, rho_in: np.ndarray) -> np.ndarray:
    """``tr_in[(rho^T (x) I) Lambda]``; linear, so any operator may be passed."""
    rho_in = np.asarray(rho_in, dtype=complex)
    d = 1 << l.n
    if rho_in.shape != (d, d):
        raise ValueError(f"input operator must be {d}x{d}, got {rho_in.shape}")
    t = l.unnormalized().mat.reshape(d, d, d, d)
    return np.einsum("ki,kaib->ab", rho_in, t)


def depolarize(l: ChoiMatrix, p: float) -> ChoiMatrix:
    """``(1-p) Lambda + p I / 2**n``: mix with the fully depolarizing channel."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing strength must lie in [0, 1], got {p}")
    lu = l.unnormalized()
    m = (1.0 - p) * lu.mat + p * np.eye(lu.dim) / 2**l.n
    return ChoiMatrix(l.n, m)


def reduced_choi(l: ChoiMatrix, subsystem: Sequence[int]) -> ChoiMatrix:
    """Choi matrix of the process restricted to ``subsystem``.

    Input and output copies of each dropped qubit are traced out together and
    the result rescaled to trace ``2**k``.
    """
    sub = sorted(set(int(q) for q in subsystem))
    n = l.n
    if not sub:
        raise ValueError("subsystem must be non-empty")
    if sub[0] < 0 or sub[-1] >= n:
        raise ValueError(f"subsystem {sub} outside 0..{n - 1}")
    k = len(sub)
    keep = sub + [n + q for q in sub]
    m = partial_trace(l.unnormalized().mat, keep, [2] * (2 * n)) / 2 ** (n - k)
    return ChoiMatrix(k, m)
