"""Brute-force oracle suites and property checks behind ``mfsep verify``.

Every check recomputes its expectation independently of the code path it
checks (plain loops over truth tables, dense matrices, direct Born-rule
sums) and returns a :class:`CheckResult` instead of raising.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import qsim
from .concepts import BoolFunc, concept_distribution, prepare_phase_state, relation_members, tv_distance
from .fqlearner import build_ux
from .gf2bits import BitVec, Gf2System, dot, rank, solve_system
from .prfcrypto import DEFAULT_SPEC, prf_eval_many

__all__ = ["CheckResult", "SUITES", "run_suites"]

ATOL = 1e-9


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.suite}/{self.name}: {self.detail} ({self.seconds:.2f}s)"


def _all_functions(n: int):
    for bits in itertools.product((0, 1), repeat=1 << n):
        yield BoolFunc.from_table(bits)


def _brute_relation(f: BoolFunc, x: int) -> set[tuple[int, int]]:
    table = [int(v) for v in f.table()]
    return {(y, table[y] ^ table[y ^ x]) for y in range(len(table))}


# --- relation -----------------------------------------------------------


def relation_exhaustive(rng, max_n: int = 3) -> tuple[bool, str]:
    checked = 0
    for n in range(1, max_n + 1):
        for f in _all_functions(n):
            for x in range(1 << n):
                if relation_members(f, x) != _brute_relation(f, x):
                    return False, f"mismatch at f={f!r}, x={x}"
                checked += 1
    return True, f"{checked} (f, x) pairs"


def relation_random(rng, n: int = 10, count: int = 1000) -> tuple[bool, str]:
    for _ in range(count):
        f = BoolFunc.random(n, rng)
        x = int(rng.integers(0, 1 << n))
        if relation_members(f, x) != _brute_relation(f, x):
            return False, f"mismatch at x={x}"
    return True, f"{count} random f at n={n}"


# --- Born rule in the matching basis ------------------------------------


def _edge_check(f: BoolFunc, x: int) -> float:
    """Largest deviation between simulated and closed-form edge probabilities."""
    n = f.n
    N = 1 << n
    c = build_ux(x, n)
    # dense-matrix route, independent of the gate kernels
    U = _dense_unitary(n, c)
    psi = np.array([(-1.0) ** int(v) for v in f.table()]) / np.sqrt(N)
    probs = np.abs(U @ psi) ** 2
    sim = qsim.outcome_distribution(c.final_state(f))
    worst = float(np.max(np.abs(probs - sim)))
    table = f.table()
    for y in range(N):
        z = y ^ x
        if y > z:
            continue
        sign = (-1) ** (int(table[y]) ^ int(table[z]))
        u = c.linear_map(y) & ~(1 << c.pivot)
        p_plus = sim[u]
        p_minus = sim[u | (1 << c.pivot)]
        worst = max(worst, abs(p_plus - (1 + sign) / N), abs(p_minus - (1 - sign) / N))
    return worst


def _dense_unitary(n: int, circuit) -> np.ndarray:
    N = 1 << n
    U = np.zeros((N, N))
    for y in range(N):
        U[circuit.linear_map(y), y] = 1.0
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    Hp = np.array([[1.0]])
    for q in reversed(range(n)):
        Hp = np.kron(Hp, h if q == circuit.pivot else np.eye(2))
    return Hp @ U


def born_exhaustive(rng, max_n: int = 3) -> tuple[bool, str]:
    worst = 0.0
    for n in range(1, max_n + 1):
        for f in _all_functions(n):
            for x in range(1, 1 << n):
                worst = max(worst, _edge_check(f, x))
    return worst <= ATOL, f"max deviation {worst:.2e}"


def born_random(rng, max_n: int = 6, per_n: int = 20) -> tuple[bool, str]:
    worst = 0.0
    for n in range(1, max_n + 1):
        for _ in range(per_n):
            f = BoolFunc.random(n, rng)
            worst = max(worst, _edge_check(f, int(rng.integers(1, 1 << n))))
    return worst <= ATOL, f"max deviation {worst:.2e}"


def fq_exactness(rng, max_n: int = 6, per_n: int = 10) -> tuple[bool, str]:
    worst = 0.0
    for n in range(1, max_n + 1):
        for _ in range(per_n):
            x = int(rng.integers(1, 1 << n))
            f = BoolFunc.random(n, rng)
            worst = max(worst, tv_distance(build_ux(x, n).exact_distribution(f), concept_distribution(f, x)))
    return worst <= ATOL, f"max TV {worst:.2e}"


# --- statevector invariants ---------------------------------------------


def _random_gates(n: int, rng) -> list:
    q = int(rng.integers(0, n))
    ops = [qsim.H(q), qsim.X(q), qsim.Z(q), qsim.PhaseOracle(BoolFunc.random(n, rng))]
    if n > 1:
        c, t = rng.choice(n, size=2, replace=False)
        ops.append(qsim.CNOT(int(c), int(t)))
    return ops


def norm_preservation(rng, max_n: int = 10, per_n: int = 5) -> tuple[bool, str]:
    worst = 0.0
    for n in range(1, max_n + 1):
        for _ in range(per_n):
            s = qsim.random_state(n, rng)
            for op in _random_gates(n, rng):
                worst = max(worst, abs(qsim.apply(s, op).norm - 1.0))
    return worst <= 1e-12, f"max |norm - 1| {worst:.2e}"


def involutions(rng, max_n: int = 10, per_n: int = 5) -> tuple[bool, str]:
    worst = 0.0
    for n in range(1, max_n + 1):
        for _ in range(per_n):
            s = qsim.random_state(n, rng)
            for op in _random_gates(n, rng):
                twice = qsim.apply(qsim.apply(s, op), op)
                worst = max(worst, float(np.max(np.abs(twice.amps - s.amps))))
    return worst <= 1e-12, f"max deviation {worst:.2e}"


def gate_matrices(rng, n: int = 3) -> tuple[bool, str]:
    """Gate kernels against Kronecker-product matrices."""
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    xm = np.array([[0, 1], [1, 0]])
    zm = np.diag([1, -1])

    def lift(m, q):
        out = np.array([[1.0]])
        for k in reversed(range(n)):
            out = np.kron(out, m if k == q else np.eye(2))
        return out

    worst = 0.0
    for q in range(n):
        for gate, m in ((qsim.H(q), h), (qsim.X(q), xm), (qsim.Z(q), zm)):
            worst = max(worst, float(np.max(np.abs(qsim.circuit_unitary(n, [gate]) - lift(m, q)))))
    for c, t in itertools.permutations(range(n), 2):
        P = np.zeros((1 << n, 1 << n))
        for i in range(1 << n):
            P[i ^ (1 << t) if (i >> c) & 1 else i, i] = 1
        worst = max(worst, float(np.max(np.abs(qsim.circuit_unitary(n, [qsim.CNOT(c, t)]) - P))))
    return worst <= 1e-12, f"max entry deviation {worst:.2e}"


def phase_state_amplitudes(rng, max_n: int = 8) -> tuple[bool, str]:
    worst = 0.0
    for n in range(1, max_n + 1):
        f = BoolFunc.random(n, rng)
        expect = np.array([(-1.0) ** int(v) for v in f.table()]) / np.sqrt(1 << n)
        worst = max(worst, float(np.max(np.abs(prepare_phase_state(f).amps - expect))))
    return worst <= 1e-12, f"max deviation {worst:.2e}"


# --- total variation ----------------------------------------------------


def tv_axioms(rng, trials: int = 2000) -> tuple[bool, str]:
    for _ in range(trials):
        k = int(rng.integers(2, 20))
        p, q, r = (rng.dirichlet(np.ones(k)) for _ in range(3))
        d_pq, d_qp = tv_distance(p, q), tv_distance(q, p)
        if abs(d_pq - d_qp) > 1e-15 or not 0 <= d_pq <= 1 + 1e-15:
            return False, "symmetry or range violated"
        if tv_distance(p, p) != 0.0:
            return False, "d(p, p) != 0"
        if tv_distance(p, r) > d_pq + tv_distance(q, r) + 1e-12:
            return False, "triangle inequality violated"
    return True, f"{trials} random triples"


# --- GF(2) --------------------------------------------------------------


def gf2_bilinearity(rng, trials: int = 10_000) -> tuple[bool, str]:
    for _ in range(trials):
        n = int(rng.integers(1, 65))
        a, b, c = (BitVec(n, int.from_bytes(rng.bytes(8), "little") >> (64 - n)) for _ in range(3))
        if dot(a ^ b, c) != dot(a, c) ^ dot(b, c):
            return False, f"bilinearity failed at n={n}"
    return True, f"{trials} random triples"


def gf2_rank_invariants(rng, trials: int = 2000) -> tuple[bool, str]:
    for _ in range(trials):
        n = int(rng.integers(1, 17))
        k = int(rng.integers(1, 20))
        rows = [BitVec(n, int(v)) for v in rng.integers(0, 1 << n, size=k)]
        r0 = rank(rows)
        perm = [rows[i] for i in rng.permutation(k)]
        if rank(perm) != r0 or rank(rows + rows) != r0:
            return False, "rank changed under permutation or duplication"
        if k > 1:
            i, j = rng.choice(k, size=2, replace=False)
            mixed = list(rows)
            mixed[i] = rows[i] ^ rows[j]
            if rank(mixed) != r0:
                return False, "rank changed under a row operation"
    return True, f"{trials} random row sets"


def gf2_solve_resubstitution(rng, trials: int = 10_000, max_n: int = 16) -> tuple[bool, str]:
    solved = 0
    for _ in range(trials):
        n = int(rng.integers(1, max_n + 1))
        while True:
            coeffs = [BitVec(n, int(v)) for v in rng.integers(0, 1 << n, size=n)]
            if rank(coeffs) == n:
                break
        x_true = BitVec(n, int(rng.integers(0, 1 << n)))
        system = Gf2System.from_rows(n, ((c, dot(c, x_true)) for c in coeffs))
        x = solve_system(system)
        if not isinstance(x, BitVec) or not system.satisfied_by(x) or x != x_true:
            return False, f"bad solution at n={n}"
        solved += 1
    return True, f"{solved} full-rank systems"


# --- PRF statistical battery --------------------------------------------


def _random_key_words(rng, count: int) -> np.ndarray:
    return rng.integers(0, 1 << 32, size=(4, count), dtype=np.uint32)


def prf_balance(rng, samples: int = 100_000, n: int = 16) -> tuple[bool, str]:
    keys = _random_key_words(rng, samples)
    ys = rng.integers(0, 1 << n, size=samples)
    mean = prf_eval_many(DEFAULT_SPEC, keys, ys, n).mean()
    z = (mean - 0.5) / (0.5 / np.sqrt(samples))
    return abs(z) <= 4, f"mean {mean:.4f} (z={z:+.2f})"


def prf_avalanche(rng, samples: int = 100_000, n: int = 16) -> tuple[bool, str]:
    keys = _random_key_words(rng, samples)
    ys = rng.integers(0, 1 << n, size=samples)
    flips = np.left_shift(1, rng.integers(0, n, size=samples))
    a = prf_eval_many(DEFAULT_SPEC, keys, ys, n)
    b = prf_eval_many(DEFAULT_SPEC, keys, ys ^ flips, n)
    rate = float((a != b).mean())
    z = (rate - 0.5) / (0.5 / np.sqrt(samples))
    return abs(z) <= 4, f"flip rate {rate:.4f} (z={z:+.2f})"


def prf_correlation(rng, samples: int = 100_000, n: int = 16) -> tuple[bool, str]:
    """Each key bit and each input bit against the output, as +-1 correlations."""
    keys = _random_key_words(rng, samples)
    ys = rng.integers(0, 1 << n, size=samples)
    out = 1.0 - 2.0 * prf_eval_many(DEFAULT_SPEC, keys, ys, n)
    worst = 0.0
    for j in range(n):
        s = 1.0 - 2.0 * ((ys >> j) & 1)
        worst = max(worst, abs(float(np.mean(s * out))))
    for w in range(4):
        for j in range(32):
            s = 1.0 - 2.0 * ((keys[w] >> np.uint32(j)) & np.uint32(1)).astype(np.float64)
            worst = max(worst, abs(float(np.mean(s * out))))
    z = worst * np.sqrt(samples)
    return z <= 4, f"max |corr| {worst:.4f} over {n + 128} bits (z={z:.2f})"


SUITES: dict[str, list[tuple[str, Callable]]] = {
    "relation": [("exhaustive_n<=3", relation_exhaustive), ("random_n=10", relation_random)],
    "born": [("exhaustive_n<=3", born_exhaustive), ("random_n<=6", born_random),
             ("fq_exact_tv", fq_exactness)],
    "statevector": [("norm", norm_preservation), ("involution", involutions),
                    ("gate_matrices", gate_matrices), ("phase_state", phase_state_amplitudes)],
    "tv": [("metric_axioms", tv_axioms)],
    "gf2": [("bilinearity", gf2_bilinearity), ("rank_invariants", gf2_rank_invariants),
            ("solve_resubstitution", gf2_solve_resubstitution)],
    "prf": [("balance", prf_balance), ("avalanche", prf_avalanche),
            ("correlation", prf_correlation)],
}


def run_suites(seed: int = 0, suites: list[str] | None = None) -> list[CheckResult]:
    """Run the named suites (all by default) with a fixed seed per check."""
    from .seeding import derive_rng

    names = list(SUITES) if suites is None else suites
    results = []
    for suite in names:
        for name, check in SUITES[suite]:
            t0 = time.perf_counter()
            ok, detail = check(derive_rng(seed, "verify", suite, name))
            results.append(CheckResult(suite, name, bool(ok), detail, time.perf_counter() - t0))
    return results
