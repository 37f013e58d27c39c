"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (lines are repeated in the
terminal summary) or directly with ``python tests/test_acceptance.py``.
All randomness derives from ACCEPTANCE_SEED, fixed before any run.
"""

import itertools
import json
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from mfsep import qsim  # noqa: E402
from mfsep.cli import main as cli_main  # noqa: E402
from mfsep.concepts import (  # noqa: E402
    FULL_X,
    PARITY,
    BoolFunc,
    FSource,
    concept_distribution,
    generate_training_data,
    relation_members,
    tv_distance,
)
from mfsep.errors import MfsepError  # noqa: E402
from mfsep.evaluation import SeparationConfig, separation_experiment  # noqa: E402
from mfsep.fqlearner import build_ux, fully_quantum_learn, recover_x  # noqa: E402
from mfsep.hmgame import HmAnswer, estimate_success, hm_quantum, random_instance  # noqa: E402
from mfsep.mflearner import MeasureFirstPipeline, Strategy, measure_first_learn, measure_training_data  # noqa: E402
from mfsep.prfcrypto import DEFAULT_SPEC, estimate_advantage  # noqa: E402
from mfsep.seeding import derive_rng  # noqa: E402
from mfsep.verify import run_suites  # noqa: E402

ACCEPTANCE_SEED = 2024
LINES: dict[int, str] = {}


def record(num: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:>2}: {title}: {detail}"
    LINES[num] = line
    print(line)


def rng_for(*path):
    return derive_rng(ACCEPTANCE_SEED, "acceptance", *path)


def brute_relation(table, x):
    return {(y, int(table[y]) ^ int(table[y ^ x])) for y in range(len(table))}


def test_c01_fq_exactness():
    t0 = time.perf_counter()
    worst = 0.0
    rng = rng_for(1)
    for n in range(1, 9):
        for _ in range(50):
            x = int(rng.integers(1, 2**n))
            learner = fully_quantum_learn(generate_training_data(n, x, 1, 1, FULL_X, FSource.UNIFORM, rng))
            for _ in range(50):
                f = BoolFunc.random(n, rng)
                worst = max(worst, tv_distance(learner.exact_distribution(f), concept_distribution(f, x)))
    secs = time.perf_counter() - t0
    ok = worst <= 1e-9 and secs < 60
    record(1, "fully-quantum generator is exact", ok,
           f"max TV {worst:.2e} over n=1..8 x 50 x x 50 f (<= 1e-9), {secs:.1f}s (< 60s)")
    assert ok


def test_c02_relation_oracle():
    bad = 0
    checked = 0
    for n in range(1, 4):
        for table in itertools.product((0, 1), repeat=2**n):
            f = BoolFunc.from_table(table)
            for x in range(2**n):
                bad += relation_members(f, x) != brute_relation(table, x)
                checked += 1
    rng = rng_for(2)
    for _ in range(1000):
        f = BoolFunc.random(10, rng)
        x = int(rng.integers(0, 2**10))
        bad += relation_members(f, x) != brute_relation(list(f.table()), x)
        checked += 1
    record(2, "relation oracle equivalence", bad == 0,
           f"{checked} (f, x) cases (all f at n<=3, 1000 at n=10), {bad} mismatches")
    assert bad == 0


def _born_deviation(f, x):
    n = f.n
    N = 2**n
    c = build_ux(x, n)
    U = qsim.circuit_unitary(n, c.gates())
    psi = np.array([(-1.0) ** int(v) for v in f.table()]) / np.sqrt(N)
    probs = np.abs(U @ psi) ** 2
    mass = {}
    for w in range(N):
        y0, b = c.decode(w)
        edge = (min(y0, y0 ^ x), max(y0, y0 ^ x))
        mass[edge, b] = mass.get((edge, b), 0.0) + probs[w]
    t = f.table()
    worst = 0.0
    for y in range(N):
        z = y ^ x
        if y > z:
            continue
        s = (-1) ** (int(t[y]) ^ int(t[z]))
        worst = max(worst, abs(mass.get(((y, z), 0), 0.0) - (1 + s) / N),
                    abs(mass.get(((y, z), 1), 0.0) - (1 - s) / N))
    return worst


def test_c03_born_probabilities():
    worst = 0.0
    for n in range(1, 4):
        for table in itertools.product((0, 1), repeat=2**n):
            for x in range(1, 2**n):
                worst = max(worst, _born_deviation(BoolFunc.from_table(table), x))
    rng = rng_for(3)
    for n in range(4, 7):
        for _ in range(100):
            worst = max(worst, _born_deviation(BoolFunc.random(n, rng), int(rng.integers(1, 2**n))))
    ok = worst <= 1e-9
    record(3, "matching-basis Born probabilities", ok,
           f"max deviation {worst:.2e} (all f at n<=3, 100 random f at n=4..6; <= 1e-9)")
    assert ok


def _exact_full_rank(n, k):
    return float(np.prod([1 - 2.0 ** (j - k) for j in range(n)]))


def test_c04_parity_recovery():
    parts, ok = [], True
    for n in (4, 8, 12):
        rng = rng_for(4, n)
        wins = 0
        for r in rng.spawn(10_000):
            x = int(r.integers(1, 2**n))
            data = generate_training_data(n, x, n + 10, 1, PARITY, FSource.UNIFORM, r)
            try:
                wins += recover_x([ex.label for ex in data], PARITY).value == x
            except MfsepError:
                pass
        rate = wins / 10_000
        ok &= rate >= 0.999
        parts.append(f"n={n} {rate:.4f} (exact rank probability {_exact_full_rank(n, n + 10):.5f})")
    record(4, "parity-label recovery with n+10 examples", ok, "; ".join(parts) + "; need >= 0.999")
    assert ok


def test_c05_hm_quantum():
    rates, worst = [], 0.0
    for n in range(1, 9):
        est = estimate_success(hm_quantum, n, 10_000, rng_for(5, n))
        rates.append(est.rate)
        rng = rng_for(5, "mass", n)
        for _ in range(50):
            inst = random_instance(n, rng)
            c = build_ux(inst.x, n)
            probs = qsim.outcome_distribution(c.final_state(inst.f))
            bad = sum(p for w, p in enumerate(probs)
                      if not inst.is_correct(HmAnswer.of(c.decode(w)[0], c.decode(w)[0] ^ inst.x, c.decode(w)[1])))
            worst = max(worst, bad)
    ok = all(r == 1.0 for r in rates) and worst < 1e-12
    record(5, "Hidden Matching quantum protocol", ok,
           f"success {min(rates)} (min over n=1..8, 10^4 instances each); invalid mass {worst:.1e} (< 1e-12)")
    assert ok


def test_c06_leaky_control():
    worst = 0.0
    rng = rng_for(6)
    for n in range(1, 9):
        s = Strategy.leaky(m_budget=2**n)
        for _ in range(10):
            x = int(rng.integers(1, 2**n))
            data = measure_training_data(s, generate_training_data(n, x, 1, 1, FULL_X, FSource.UNIFORM, rng), rng)
            pipe = MeasureFirstPipeline(s, measure_first_learn(s, data))
            for _ in range(10):
                f = BoolFunc.random(n, rng)
                worst = max(worst, tv_distance(pipe.exact_distribution(f, rng), concept_distribution(f, x)))
    ok = worst <= 1e-9
    record(6, "leaky full-table control arm", ok, f"max TV {worst:.2e} over n=1..8 (<= 1e-9)")
    assert ok


def test_c07_separation():
    res = separation_experiment(SeparationConfig(n_values=(2, 4, 6, 8), strategies=("shadow",),
                                                 f_trials=100, seed=ACCEPTANCE_SEED))
    med = [res.median_tv(n, "shadow") for n in (2, 4, 6, 8)]
    fq = max(r["tv_exact_or_emp"] for r in res.rows if r["protocol"] == "fq")
    monotone = all(a <= b for a, b in zip(med, med[1:]))
    ok = med[-1] >= 0.4 and fq <= 1e-9 and monotone
    record(7, "separation at desk scale", ok,
           f"shadow median TV {', '.join(f'n={n}: {m:.4f}' for n, m in zip((2, 4, 6, 8), med))} "
           f"(n=8 >= 0.4, nondecreasing: {monotone}); fq max TV {fq:.1e} (<= 1e-9)")
    assert ok


def test_c08_distinguisher():
    parts, ok = [], True
    for sid in ("leaky", "shadow"):
        s = Strategy.leaky(m_budget=256) if sid == "leaky" else Strategy.shadow(640, m_budget=3 * 8 * 640)
        rep = estimate_advantage(DEFAULT_SPEC, s, 8, 1000, rng_for(8, sid))
        ok &= rep.gap_consistent_with_zero
        parts.append(f"{sid}: p_prf {rep.p_prf:.3f} p_rand {rep.p_rand:.3f} gap {rep.gap:+.3f} "
                     f"CI [{rep.gap_ci[0]:+.3f}, {rep.gap_ci[1]:+.3f}]")
    record(8, "PRF distinguisher gap consistent with 0 at n=8", ok, "; ".join(parts))
    assert ok


def test_c09_determinism(tmp_path=None):
    import tempfile

    base = Path(tmp_path or tempfile.mkdtemp())
    args = ["separation", "--seed", str(ACCEPTANCE_SEED)]
    rc = [cli_main(args + ["--out", str(base / d)]) for d in ("run1", "run2")]
    m1, m2 = (json.loads((base / d / "manifest.json").read_text()) for d in ("run1", "run2"))
    same_csv = (base / "run1" / "separation.csv").read_bytes() == (base / "run2" / "separation.csv").read_bytes()
    ok = rc == [0, 0] and same_csv and m1["files"] == m2["files"]
    record(9, "separation runs are reproducible", ok,
           f"CSV byte-identical: {same_csv}; manifest digests identical: {m1['files'] == m2['files']} "
           f"({len(m1['files'])} files)")
    assert ok


def test_c10_property_suites():
    results = run_suites(ACCEPTANCE_SEED)
    failed = [f"{r.suite}/{r.name}" for r in results if not r.passed]
    rc = cli_main(["verify", "--seed", str(ACCEPTANCE_SEED), "--out", str(Path(__import__("tempfile").mkdtemp()) / "v")])
    ok = not failed and rc == 0
    record(10, "property suites under verify", ok,
           f"{len(results)} checks, failures: {failed or 'none'}; verify exit code {rc}")
    assert ok


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_c")]
    failures = 0
    for t in tests:
        try:
            t()
        except AssertionError:
            failures += 1
    print()
    for num in sorted(LINES):
        print(LINES[num])
    sys.exit(1 if failures else 0)
