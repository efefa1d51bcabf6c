"""Simulated acquisition for the ancilla and two-sided schemes, plus the
JSON-lines record format used for both simulated and ingested data.

Wire numbering follows the Choi register: wires ``0..n-1`` are the input
copy, ``n..2n-1`` the channel output. In the ancilla scheme all ``2n`` wires
are measured. In the two-sided scheme the input wires carry the preparation
rotation ``U_L`` (applied as ``U_L^dagger`` to ``|0>``) and only the output
wires are measured.

Randomness is drawn in fixed-size chunks of settings, each chunk from its
own stream ``SeedSequence([seed, chunk])``, so record ``i`` depends only on
the master seed, the plan and ``i``.
"""

from __future__ import annotations

import functools
import gzip
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _backend
from .channels import ChannelSpec
from .gates import (
    ROTATIONS_G,
    ROTATIONS_R,
    CliffordElement,
    prep_gate,
    sample_clifford_tableaux,
)

SCHEMES = ("ancilla", "two_sided")
PAIRING_MODES = ("pauli", "non_fixed", "fixed")
CHUNK = 256
MAX_MEASURED_QUBITS = 8
PROB_ATOL = 1e-9

# share of settings carrying the fixed pair, by channel size
DEFAULT_FIXED_FRACTION = {2: 0.0, 3: 0.5, 4: 0.4375}

_ROT_DAG = {l: prep_gate(l).conj().T for l in ROTATIONS_G}
_PREP0 = {l: prep_gate(l)[:, 0] for l in ROTATIONS_G}
_LABEL_CODE = {l: i for i, l in enumerate(ROTATIONS_G)}
_ROT_DAG_ARR = np.array([_ROT_DAG[l] for l in ROTATIONS_G])
_PREP0_ARR = np.array([_PREP0[l] for l in ROTATIONS_G])


class RecordFormatError(ValueError):
    """Malformed record; ``line`` is the 1-based line number when read from a file."""

    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


# ----------------------------------------------------------------------------
# settings and records


@dataclass(frozen=True, eq=False)
class Block:
    """A unitary acting on ``wires``: per-wire rotation labels or one Clifford."""

    wires: tuple[int, ...]
    kind: str
    payload: tuple[str, ...] | CliffordElement

    def to_json(self) -> dict:
        payload = list(self.payload) if self.kind == "rotation" else self.payload.to_json()
        return {"wires": list(self.wires), "kind": self.kind, "payload": payload}

    def __eq__(self, other):
        return isinstance(other, Block) and self.to_json() == other.to_json()


@dataclass(frozen=True, eq=False)
class Setting:
    """One random unitary configuration of a measurement circuit."""

    scheme: str
    n: int
    blocks: tuple[Block, ...]

    def __post_init__(self):
        _validate_setting(self)

    @classmethod
    def _trusted(cls, scheme: str, n: int, blocks: tuple[Block, ...], codes: np.ndarray | None = None) -> "Setting":
        """Skip validation for settings drawn by this module."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "scheme", scheme)
        object.__setattr__(obj, "n", n)
        object.__setattr__(obj, "blocks", blocks)
        if codes is not None:
            obj.__dict__["_codes"] = codes
            obj.__dict__["_layout"] = _singletons(2 * n)
        return obj

    @property
    def width(self) -> int:
        """Number of measured qubits."""
        return self.n if self.scheme == "two_sided" else 2 * self.n

    @property
    def measured_offset(self) -> int:
        return self.n if self.scheme == "two_sided" else 0

    def layout(self) -> tuple[tuple[int, ...], ...]:
        """Wire groups with rotation blocks split into single wires."""
        memo = self.__dict__
        if "_layout" not in memo:
            out = []
            for b in self.blocks:
                if b.kind == "rotation":
                    out.extend((w,) for w in b.wires)
                else:
                    out.append(b.wires)
            memo["_layout"] = tuple(sorted(out))
        return memo["_layout"]

    def wire_unitaries(self) -> dict[tuple[int, ...], np.ndarray]:
        """Map each layout group to its measurement (or preparation) unitary."""
        out = {}
        for b in self.blocks:
            if b.kind == "rotation":
                for w, l in zip(b.wires, b.payload):
                    out[(w,)] = _ROT_DAG[l]
            else:
                out[b.wires] = b.payload.unitary
        return out

    def labels(self) -> dict[int, str]:
        memo = self.__dict__
        if "_labels" not in memo:
            memo["_labels"] = {w: l for b in self.blocks if b.kind == "rotation" for w, l in zip(b.wires, b.payload)}
        return memo["_labels"]

    def rotation_codes(self) -> np.ndarray | None:
        """Index into ``ROTATIONS_G`` of each wire's label, or None if any block is a Clifford."""
        memo = self.__dict__
        if "_codes" not in memo:
            labels = self.labels()
            if len(labels) == 2 * self.n:
                memo["_codes"] = np.array([_LABEL_CODE[labels[w]] for w in range(2 * self.n)])
            else:
                memo["_codes"] = None
        return memo["_codes"]

    def to_json(self) -> dict:
        return {"scheme": self.scheme, "n": self.n, "blocks": [b.to_json() for b in self.blocks]}

    def __eq__(self, other):
        return isinstance(other, Setting) and self.to_json() == other.to_json()


@functools.lru_cache(maxsize=None)
def _singletons(width: int) -> tuple[tuple[int], ...]:
    return tuple((w,) for w in range(width))


def _validate_setting(s: Setting) -> None:
    if s.scheme not in SCHEMES:
        raise RecordFormatError(f"unknown scheme {s.scheme!r}")
    if not isinstance(s.n, int) or s.n < 1:
        raise RecordFormatError(f"n must be a positive integer, got {s.n!r}")
    seen: list[int] = []
    for b in s.blocks:
        if b.kind == "rotation":
            if len(b.payload) != len(b.wires):
                raise RecordFormatError("rotation block needs one label per wire")
            for w, l in zip(b.wires, b.payload):
                allowed = ROTATIONS_G if (s.scheme == "two_sided" and w < s.n) else ROTATIONS_R
                if l not in allowed:
                    raise RecordFormatError(f"unknown gate label {l!r} on wire {w} (allowed: {', '.join(allowed)})")
        elif b.kind == "clifford":
            if s.scheme == "two_sided":
                raise RecordFormatError("two-sided settings use rotation blocks only")
            if b.payload.k != len(b.wires):
                raise RecordFormatError(f"Clifford arity {b.payload.k} does not match wires {list(b.wires)}")
        else:
            raise RecordFormatError(f"unknown block kind {b.kind!r}")
        seen.extend(b.wires)
    if sorted(seen) != list(range(2 * s.n)):
        raise RecordFormatError(f"block wires {sorted(seen)} do not partition 0..{2 * s.n - 1}")


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    """A setting and the bitstrings observed over its repetitions.

    Bitstring character 0 is the most significant measured qubit.
    """

    setting: Setting
    outcomes: tuple[str, ...]
    seed: int | None = None
    source: str = "simulated"
    index: int | None = None
    timestamp: str | None = None
    _ints: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        w = self.setting.width
        if not self.outcomes:
            raise RecordFormatError("record has no outcomes")
        for o in self.outcomes:
            if len(o) != w or any(c not in "01" for c in o):
                raise RecordFormatError(f"outcome {o!r} is not a {w}-bit string")
        if self.source not in ("simulated", "ingested"):
            raise RecordFormatError(f"unknown source {self.source!r}")

    @property
    def scheme(self) -> str:
        return self.setting.scheme

    @property
    def n(self) -> int:
        return self.setting.n

    @property
    def reps(self) -> int:
        return len(self.outcomes)

    @classmethod
    def _trusted(cls, setting: Setting, outcomes: tuple[str, ...], ints: np.ndarray, seed, index: int) -> "MeasurementRecord":
        obj = object.__new__(cls)
        for k, v in (("setting", setting), ("outcomes", outcomes), ("seed", seed), ("source", "simulated"), ("index", index), ("timestamp", None), ("_ints", [ints])):
            object.__setattr__(obj, k, v)
        return obj

    def outcome_ints(self) -> np.ndarray:
        if not self._ints:
            self._ints.append(np.array([int(o, 2) for o in self.outcomes], dtype=np.int64))
        return self._ints[0]

    def to_json(self) -> dict:
        d = self.setting.to_json()
        d["outcomes"] = list(self.outcomes)
        d["seed"] = self.seed
        d["source"] = self.source
        d["index"] = self.index
        if self.timestamp is not None:
            d["timestamp"] = self.timestamp
        return d

    @classmethod
    def from_json(cls, d: dict) -> "MeasurementRecord":
        if not isinstance(d, dict):
            raise RecordFormatError("record must be a JSON object")
        for key in ("scheme", "n", "blocks", "outcomes"):
            if key not in d:
                raise RecordFormatError(f"missing field {key!r}")
        blocks = []
        for b in d["blocks"]:
            try:
                wires = tuple(int(w) for w in b["wires"])
                kind = b["kind"]
                if kind == "rotation":
                    payload = tuple(str(l) for l in b["payload"])
                elif kind == "clifford":
                    payload = CliffordElement.from_json(b["payload"])
                else:
                    raise RecordFormatError(f"unknown block kind {kind!r}")
            except (KeyError, TypeError) as exc:
                raise RecordFormatError(f"malformed block: {exc}") from None
            except ValueError as exc:
                raise RecordFormatError(str(exc)) from None
            blocks.append(Block(wires, kind, payload))
        setting = Setting(str(d["scheme"]), d["n"], tuple(blocks))
        outcomes = d["outcomes"]
        if not isinstance(outcomes, list) or not all(isinstance(o, str) for o in outcomes):
            raise RecordFormatError("outcomes must be a list of bitstrings")
        return cls(setting, tuple(outcomes), d.get("seed"), d.get("source", "ingested"), d.get("index"), d.get("timestamp"))

    def __eq__(self, other):
        return isinstance(other, MeasurementRecord) and self.to_json() == other.to_json()


def open_records(path, mode: str):
    path = str(path)
    if path.endswith(".gz"):
        return gzip.open(path, mode + "t", encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def write_records(recs: Iterable[MeasurementRecord], path) -> None:
    lines = (json.dumps(r.to_json(), separators=(",", ":")) + "\n" for r in recs)
    if str(path).endswith(".gz"):
        # no embedded name and a fixed mtime keep the bytes reproducible
        Path(path).write_bytes(gzip.compress("".join(lines).encode("utf-8"), mtime=0))
        return
    with open_records(path, "w") as fh:
        fh.writelines(lines)


def iter_records(path):
    """Yield ``(line_number, record)``; raises :class:`RecordFormatError` on bad lines."""
    with open_records(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordFormatError(f"invalid JSON ({exc.msg})", lineno) from None
            try:
                yield lineno, MeasurementRecord.from_json(d)
            except RecordFormatError as exc:
                raise RecordFormatError(str(exc), lineno) from None


def read_records(path) -> list[MeasurementRecord]:
    return [r for _, r in iter_records(path)]


# ----------------------------------------------------------------------------
# pairing plans


@dataclass(frozen=True)
class PairingPlan:
    """How measurement unitaries are laid out over the ancilla-scheme register.

    ``pauli`` uses independent single-qubit rotations from ``G_R``. The
    Clifford modes partition the ``2n`` wires into random groups of ``k``
    wires, each carrying a uniform k-qubit Clifford. In ``fixed`` mode a
    share ``fixed_fraction`` of the settings keeps ``fixed_groups``
    (default: qubit 0 with its ancilla copy) and draws the rest randomly.
    """

    mode: str = "pauli"
    k: int = 2
    fixed_groups: tuple[tuple[int, ...], ...] | None = None
    fixed_fraction: float | None = None

    def __post_init__(self):
        if self.mode not in PAIRING_MODES:
            raise ValueError(f"unknown pairing mode {self.mode!r}")
        if self.fixed_fraction is not None and not 0.0 <= self.fixed_fraction <= 1.0:
            raise ValueError("fixed_fraction must lie in [0, 1]")

    def groups_for(self, n: int) -> tuple[tuple[int, ...], ...]:
        groups = self.fixed_groups if self.fixed_groups is not None else ((0, n),)
        return tuple(tuple(sorted(g)) for g in groups)

    def fraction_for(self, n: int) -> Fraction:
        if self.mode != "fixed":
            return Fraction(0)
        f = self.fixed_fraction if self.fixed_fraction is not None else DEFAULT_FIXED_FRACTION.get(n, 0.5)
        return Fraction(f).limit_denominator(10**6)

    def validate(self, n: int) -> None:
        if self.mode == "pauli":
            return
        w = 2 * n
        if not 1 <= self.k <= min(8, w) or w % self.k:
            raise ValueError(f"Clifford arity k={self.k} must divide the register width {w} and be at most 8")
        if self.mode == "fixed":
            flat = [q for g in self.groups_for(n) for q in g]
            if len(set(flat)) != len(flat):
                raise ValueError("fixed groups must be disjoint")
            if any(q < 0 or q >= w for q in flat):
                raise ValueError(f"fixed groups must lie inside 0..{w - 1}")
            if any(len(g) != self.k for g in self.groups_for(n)):
                raise ValueError(f"fixed groups must have exactly k={self.k} wires")

    def is_fixed(self, n: int, index: int) -> bool:
        # evenly interleaved so that any prefix holds the exact share
        f = self.fraction_for(n)
        return math.floor((index + 1) * f) > math.floor(index * f)


# ----------------------------------------------------------------------------
# setting generation


def _seed_int(seed) -> int:
    if isinstance(seed, np.random.Generator):
        return int(seed.integers(0, 2**63))
    if seed is None:
        return int(np.random.SeedSequence().entropy % 2**63)
    return int(seed)


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, chunk]))


def _draw_settings(scheme: str, n: int, plan: PairingPlan, start: int, rng: np.random.Generator) -> list[Setting]:
    """A full chunk of ``CHUNK`` settings with global indices ``start..``."""
    allw = tuple(range(2 * n))
    if scheme == "two_sided":
        left = rng.integers(0, len(ROTATIONS_G), size=(CHUNK, n))
        right = rng.integers(0, len(ROTATIONS_R), size=(CHUNK, n))
        # ROTATIONS_R is a prefix of ROTATIONS_G, so both index the same table
        codes = np.concatenate([left, right], axis=1)
        return [
            Setting._trusted(
                scheme,
                n,
                (
                    Block(allw[:n], "rotation", tuple(ROTATIONS_G[j] for j in left[i])),
                    Block(allw[n:], "rotation", tuple(ROTATIONS_R[j] for j in right[i])),
                ),
                codes[i],
            )
            for i in range(CHUNK)
        ]
    if plan.mode == "pauli":
        lab = rng.integers(0, len(ROTATIONS_R), size=(CHUNK, 2 * n))
        return [Setting._trusted(scheme, n, (Block(allw, "rotation", tuple(ROTATIONS_R[j] for j in lab[i])),), lab[i]) for i in range(CHUNK)]
    k = plan.k
    nblocks = 2 * n // k
    perms = rng.permuted(np.tile(np.arange(2 * n), (CHUNK, 1)), axis=1)
    tabs, phases = sample_clifford_tableaux(k, CHUNK * nblocks, rng)
    fixed = plan.groups_for(n) if plan.mode == "fixed" else ()
    fixed_wires = {q for g in fixed for q in g}
    out = []
    for i in range(CHUNK):
        if fixed and plan.is_fixed(n, start + i):
            rest = [int(q) for q in perms[i] if q not in fixed_wires]
            groups = list(fixed)
        else:
            rest = [int(q) for q in perms[i]]
            groups = []
        groups += [tuple(rest[j : j + k]) for j in range(0, len(rest), k)]
        groups = sorted(tuple(sorted(g)) for g in groups)
        blocks = tuple(
            Block(g, "clifford", CliffordElement(k, tabs[i * nblocks + j], phases[i * nblocks + j])) for j, g in enumerate(groups)
        )
        out.append(Setting._trusted(scheme, n, blocks))
    return out


def all_pauli_settings(scheme: str, n: int) -> list[Setting]:
    """Every rotation setting: ``3**(2n)`` (ancilla) or ``6**n * 3**n`` (two-sided)."""
    allw = tuple(range(2 * n))
    if scheme == "ancilla":
        return [Setting(scheme, n, (Block(allw, "rotation", labs),)) for labs in itertools.product(ROTATIONS_R, repeat=2 * n)]
    if scheme == "two_sided":
        return [
            Setting(scheme, n, (Block(allw[:n], "rotation", left), Block(allw[n:], "rotation", right)))
            for left in itertools.product(ROTATIONS_G, repeat=n)
            for right in itertools.product(ROTATIONS_R, repeat=n)
        ]
    raise ValueError(f"unknown scheme {scheme!r}")


def spread_reps(total: int, n_settings: int) -> list[int]:
    """Split ``total`` shots over settings as evenly as possible (earlier settings get the extra)."""
    if n_settings < 1 or total < n_settings:
        raise ValueError("need at least one shot per setting")
    q, r = divmod(total, n_settings)
    return [q + 1 if i < r else q for i in range(n_settings)]


DEFAULT_TOTAL_SHOTS = 51200
DEFAULT_SETTINGS = 1024
EXHAUSTIVE_MAX_SETTINGS = 1024


@dataclass(frozen=True)
class Budget:
    """Settings and repetitions of an acquisition run.

    ``settings`` is an explicit list (exhaustive Pauli budgets) or ``None``
    for ``n_settings`` randomly drawn settings.
    """

    settings: tuple[Setting, ...] | None
    n_settings: int
    reps: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.reps)


def default_budget(scheme: str, n: int, plan: PairingPlan | None = None, total: int = DEFAULT_TOTAL_SHOTS) -> Budget:
    """Shots over settings as in the reference experiments.

    Pauli plans use every rotation setting when there are at most 1024 of
    them (81 for n=2, 729 for n=3) with the shots spread evenly; otherwise
    1024 random settings share the shots.
    """
    plan = plan or PairingPlan()
    if plan.mode == "pauli":
        count = 3 ** (2 * n) if scheme == "ancilla" else 18**n
        if count <= EXHAUSTIVE_MAX_SETTINGS and total >= count:
            sts = tuple(all_pauli_settings(scheme, n))
            return Budget(sts, len(sts), tuple(spread_reps(total, len(sts))))
    m = min(DEFAULT_SETTINGS, total)
    return Budget(None, m, tuple(spread_reps(total, m)))


# ----------------------------------------------------------------------------
# state simulation and Born sampling


def _apply_group(psi: np.ndarray, nq: int, wires: Sequence[int], mats: np.ndarray) -> np.ndarray:
    """Apply per-setting unitaries ``mats (S, d, d)`` on ``wires`` of ``psi (S, r, 2**nq)``."""
    s, r = psi.shape[:2]
    m = len(wires)
    t = psi.reshape((s, r) + (2,) * nq)
    src = [2 + w for w in wires]
    dst = list(range(2, 2 + m))
    t = np.moveaxis(t, src, dst)
    shape = t.shape
    t = np.matmul(mats[:, None], t.reshape(s, r, 1 << m, -1))
    return np.moveaxis(t.reshape(shape), dst, src).reshape(s, r, -1)


class _Simulator:
    """Exact outcome distributions of a channel under measurement settings."""

    def __init__(self, spec: ChannelSpec, scheme: str):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}")
        n = spec.n
        width = n if scheme == "two_sided" else 2 * n
        if width > MAX_MEASURED_QUBITS:
            raise ValueError(f"{scheme} simulation of n={n} needs {width} qubits; at most {MAX_MEASURED_QUBITS} supported")
        self.n, self.scheme, self.width = n, scheme, width
        kraus, self.white = spec.mixture()
        self.kraus = np.array(kraus)
        d = 1 << n
        if scheme == "ancilla":
            # (I (x) K)|phi+> with |phi+> normalized
            self.base = np.array([k.T.reshape(-1) for k in kraus]) / math.sqrt(d)

    def probabilities(self, settings: Sequence[Setting]) -> np.ndarray:
        n, nq = self.n, self.width
        s = len(settings)
        out = np.empty((s, 1 << nq))
        groups: dict = {}
        for i, st in enumerate(settings):
            if st.scheme != self.scheme or st.n != n:
                raise ValueError("setting does not match the simulated scheme")
            groups.setdefault(st.layout(), []).append(i)
        for layout, idx in groups.items():
            sub = [settings[i] for i in idx]
            codes = [st.rotation_codes() for st in sub]
            rot = all(c is not None for c in codes)
            codes = np.array(codes) if rot else None
            unit = None if rot else [st.wire_unitaries() for st in sub]
            if self.scheme == "ancilla":
                psi = np.broadcast_to(self.base, (len(sub),) + self.base.shape).copy()
                measured = layout
            else:
                # two-sided settings are rotation-only
                vin = np.ones((len(sub), 1), dtype=complex)
                for w in range(n):
                    v = _PREP0_ARR[codes[:, w]]
                    vin = (vin[:, :, None] * v[:, None, :]).reshape(len(sub), -1)
                psi = np.einsum("rab,sb->sra", self.kraus, vin)
                measured = tuple(g for g in layout if g[0] >= n)
            for g in measured:
                local = tuple(w - (n if self.scheme == "two_sided" else 0) for w in g)
                mats = _ROT_DAG_ARR[codes[:, g[0]]] if rot else np.array([u[g] for u in unit])
                psi = _apply_group(psi, nq, local, mats)
            p = np.sum(np.abs(psi) ** 2, axis=1) + self.white / (1 << nq)
            out[idx] = p
        return out


def _sample_from_probs(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    tot = probs.sum(axis=1)
    bad = np.flatnonzero(np.abs(tot - 1.0) > PROB_ATOL)
    if bad.size:
        raise ValueError(f"outcome probabilities sum to {tot[bad[0]]!r}, not 1 within {PROB_ATOL}")
    cum = np.cumsum(probs, axis=1)
    cum /= cum[:, -1:]
    return _backend.kernels.born_sample_batch(cum, u)


def born_sample(state_or_choi: np.ndarray, u: np.ndarray, reps: int, rng: np.random.Generator) -> list[str]:
    """Measure ``u rho u^dagger`` in the computational basis ``reps`` times.

    ``state_or_choi`` is a state vector or a trace-one density matrix (a Choi
    matrix must be normalized first).
    """
    a = np.asarray(state_or_choi, dtype=complex)
    u = np.asarray(u, dtype=complex)
    d = a.shape[0]
    if u.shape != (d, d) or not np.allclose(u @ u.conj().T, np.eye(d), atol=1e-9):
        raise ValueError("measurement unitary must be unitary and match the state dimension")
    if a.ndim == 1:
        probs = np.abs(u @ a) ** 2
    else:
        probs = np.real(np.einsum("ij,jk,ik->i", u, a, u.conj()))
    m = d.bit_length() - 1
    idx = _sample_from_probs(probs[None, :], rng.random((1, reps)))[0]
    return [format(int(b), f"0{m}b") for b in idx]


def setting_distribution(spec: ChannelSpec, setting: Setting) -> np.ndarray:
    """Exact outcome probabilities of one setting."""
    return _Simulator(spec, setting.scheme).probabilities([setting])[0]


# ----------------------------------------------------------------------------
# acquisition drivers


def _resolve_reps(reps, count: int) -> list[int]:
    if np.ndim(reps) == 0:
        r = [int(reps)] * count
    else:
        r = [int(x) for x in reps]
        if len(r) != count:
            raise ValueError(f"got {len(r)} repetition counts for {count} settings")
    if any(x < 1 for x in r):
        raise ValueError("repetitions must be >= 1")
    return r


def acquire(
    spec: ChannelSpec,
    scheme: str = "ancilla",
    plan: PairingPlan | None = None,
    n_settings: int = 1024,
    reps: int | Sequence[int] = 50,
    seed=0,
    settings: Sequence[Setting] | None = None,
    workers: int = 1,
) -> list[MeasurementRecord]:
    """Simulate measurement records.

    Settings are drawn from ``plan`` unless an explicit ``settings`` list is
    given, in which case only the outcomes are random. ``reps`` is a single
    count or one count per setting.
    """
    plan = plan or PairingPlan()
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if scheme == "two_sided" and plan.mode != "pauli":
        raise ValueError("the two-sided scheme uses rotation settings only")
    plan.validate(spec.n)
    master = _seed_int(seed)
    count = len(settings) if settings is not None else int(n_settings)
    if count < 1:
        raise ValueError("need at least one setting")
    rep_list = _resolve_reps(reps, count)
    sim = _Simulator(spec, scheme)
    names = [format(b, f"0{sim.width}b") for b in range(1 << sim.width)]

    def run_chunk(c: int) -> list[MeasurementRecord]:
        rng = _chunk_rng(master, c)
        lo, hi = c * CHUNK, min(count, (c + 1) * CHUNK)
        if settings is None:
            chunk = _draw_settings(scheme, spec.n, plan, lo, rng)[: hi - lo]
        else:
            chunk = list(settings[lo:hi])
        rp = rep_list[lo:hi]
        flat = rng.random(sum(rp))
        u = np.zeros((len(chunk), max(rp)))
        off = 0
        for i, r in enumerate(rp):
            u[i, :r] = flat[off : off + r]
            off += r
        idx = _sample_from_probs(sim.probabilities(chunk), u)
        if settings is not None:
            for st in chunk:
                _validate_setting(st)
        return [
            MeasurementRecord._trusted(st, tuple([names[b] for b in idx[i, : rp[i]].tolist()]), idx[i, : rp[i]].copy(), master, lo + i)
            for i, st in enumerate(chunk)
        ]

    nchunks = -(-count // CHUNK)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run_chunk, range(nchunks)))
    else:
        parts = [run_chunk(c) for c in range(nchunks)]
    return [r for p in parts for r in p]


def acquire_budget(spec: ChannelSpec, scheme: str, plan: PairingPlan | None, budget: Budget, seed=0, workers: int = 1) -> list[MeasurementRecord]:
    return acquire(spec, scheme, plan, budget.n_settings, list(budget.reps), seed, settings=budget.settings, workers=workers)


def acquire_ancilla(spec: ChannelSpec, plan: PairingPlan | None = None, n_settings: int = 1024, reps=50, seed=0, **kw):
    return acquire(spec, "ancilla", plan, n_settings, reps, seed, **kw)


def acquire_two_sided(spec: ChannelSpec, n_settings: int = 1024, reps=50, seed=0, **kw):
    return acquire(spec, "two_sided", None, n_settings, reps, seed, **kw)
