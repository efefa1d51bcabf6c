import numpy as np
import pytest

from shadowqpt.channels import apply_channel
from shadowqpt.gates import prep_gate


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary via QR with the phase fix."""
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    g = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def choi_by_definition(apply, n: int) -> np.ndarray:
    """``sum_ij |i><j| (x) E(|i><j|)`` built entry by entry."""
    d = 2**n
    out = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            out += np.kron(e, apply(e))
    return out


def spectraplex_oracle(h, t):
    """Projection onto {X >= 0, tr X = t}: (H - nu I)_+ with nu found by bisection."""
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    lo, hi = w.min() - t, w.max()
    for _ in range(200):
        nu = (lo + hi) / 2
        if np.maximum(w - nu, 0).sum() > t:
            lo = nu
        else:
            hi = nu
    lam = np.maximum(w - nu, 0)
    return (v * lam) @ v.conj().T, nu


def tp_oracle(m, n):
    """Least-squares KKT solve of min ||X - M|| s.t. tr_out X = I, with the constraint matrix built entrywise."""
    d = 2**n
    dim = d * d
    rows = []
    for i in range(d):
        for j in range(d):
            a = np.zeros((dim, dim), dtype=complex)
            for k in range(d):
                a[i * d + k, j * d + k] = 1
            rows.append(a.reshape(-1))
    a = np.array(rows)
    b = np.eye(d).reshape(-1)
    x = m.reshape(-1)
    corr = a.conj().T @ np.linalg.solve(a @ a.conj().T, a @ x - b)
    return (x - corr).reshape(dim, dim)


def embed(blocks, nq):
    """Full unitary from (wires, matrix) blocks by explicit basis permutation."""
    order = [w for wires, _ in blocks for w in wires]
    m = np.ones((1, 1), dtype=complex)
    for _, u in blocks:
        m = np.kron(m, u)
    dim = 1 << nq
    perm = np.zeros((dim, dim))
    for i in range(dim):
        bits = [(i >> (nq - 1 - q)) & 1 for q in range(nq)]
        j = 0
        for q in order:
            j = (j << 1) | bits[q]
        perm[j, i] = 1
    return perm.T @ m @ perm


def oracle_distribution(spec, st):
    n = spec.n
    choi = spec.choi().mat / 2**n
    if st.scheme == "ancilla":
        blocks = []
        for b in st.blocks:
            if b.kind == "rotation":
                blocks += [((w,), prep_gate(l).conj().T) for w, l in zip(b.wires, b.payload)]
            else:
                blocks.append((b.wires, b.payload.unitary))
        u = embed(blocks, 2 * n)
        return np.real(np.diag(u @ choi @ u.conj().T))
    labels = st.labels()
    vin = np.ones(1, dtype=complex)
    for w in range(n):
        vin = np.kron(vin, prep_gate(labels[w])[:, 0])
    out = apply_channel(spec.choi(), np.outer(vin, vin.conj()))
    u = np.ones((1, 1))
    for w in range(n, 2 * n):
        u = np.kron(u, prep_gate(labels[w]).conj().T)
    return np.real(np.diag(u @ out @ u.conj().T))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ----------------------------------------------------------------------------
# acceptance summary: one pass/fail line per marked criterion

_ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    number, title = mark.args
    detail = "; ".join(v for k, v in item.user_properties if k == "detail")
    ok = rep.passed and _ACCEPTANCE.get(number, ("", True, ""))[1]
    if not rep.passed:
        crash = getattr(rep.longrepr, "reprcrash", None)
        reason = crash.message.splitlines()[0] if crash else f"{rep.when} error"
        detail = f"{detail}; {reason}" if detail else reason
    _ACCEPTANCE[number] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] C{number} {title}: {detail}")
