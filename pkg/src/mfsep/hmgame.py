"""Hidden Matching: one-way communication from Alice (f) to Bob (x).

Bob must output an edge ``{y, y ^ x}`` of his matching together with
``f(y) ^ f(y ^ x)``. Inputs are drawn with ``f`` uniform and ``x`` uniform
over nonzero strings (``x = 0`` pairs every vertex with itself).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Callable, IO

import numpy as np

from . import qsim
from .concepts import FULL_X, BoolFunc, FSource, generate_training_data, prepare_phase_state
from .errors import DegenerateMatchingError
from .fqlearner import build_ux
from .gf2bits import BitVec
from .mflearner import (
    ClassicalRep,
    MfGenerator,
    Strategy,
    measure,
    measure_first_learn,
    measure_training_data,
)
from .stats import wilson_interval

__all__ = [
    "Matching",
    "HmInstance",
    "HmAnswer",
    "SuccessEstimate",
    "random_instance",
    "hm_quantum",
    "hm_classical_baseline",
    "hm_random_guess",
    "reduce_measure_first",
    "bob_decode",
    "estimate_success",
    "TranscriptWriter",
]


@dataclass(frozen=True)
class Matching:
    n: int
    x: int

    def __post_init__(self):
        if self.x == 0:
            raise DegenerateMatchingError("x = 0 gives self-loops, not a perfect matching")

    def edges(self) -> list[tuple[int, int]]:
        """The ``2^(n-1)`` edges as ``(min, max)`` pairs."""
        return [(y, y ^ self.x) for y in range(1 << self.n) if y < y ^ self.x]

    def edge_set(self) -> set[tuple[int, int]]:
        return set(self.edges())


@dataclass(frozen=True)
class HmInstance:
    f: BoolFunc
    x: int

    @property
    def n(self) -> int:
        return self.f.n

    def is_correct(self, answer: "HmAnswer") -> bool:
        y, z = answer.y, answer.z
        return z == y ^ self.x and answer.parity == (self.f.query(y) ^ self.f.query(z))


@dataclass(frozen=True)
class HmAnswer:
    """``(y, z, parity)`` canonicalized so that ``y <= z``."""

    y: int
    z: int
    parity: int
    cost_bits: int = 0
    sent: bytes = field(default=b"", compare=False, repr=False)

    @classmethod
    def of(cls, y: int, z: int, parity: int, cost_bits: int = 0) -> "HmAnswer":
        return cls(min(y, z), max(y, z), int(parity), cost_bits)


def random_instance(n: int, rng: np.random.Generator) -> HmInstance:
    f = BoolFunc.random(n, rng)
    return HmInstance(f, int(rng.integers(1, 1 << n)))


def hm_quantum(instance: HmInstance, rng: np.random.Generator) -> HmAnswer:
    """Alice sends one copy of her phase state; Bob measures it in his matching basis."""
    if instance.x == 0:
        raise DegenerateMatchingError("x = 0")
    circuit = build_ux(instance.x, instance.n)
    state = prepare_phase_state(instance.f)
    w = qsim.sample(qsim.apply_all(state, circuit.gates()), rng)
    y0, b = circuit.decode(w)
    return HmAnswer.of(y0, y0 ^ instance.x, b, cost_bits=instance.n)


def hm_classical_baseline(budget: int, instance: HmInstance, rng: np.random.Generator) -> HmAnswer:
    """Alice reveals ``budget`` distinct positions of ``f``; Bob answers or guesses.

    ``budget`` counts revealed ``(index, value)`` pairs and is clamped to
    ``2^n``. Cost is ``budget * (n + 1)`` bits.
    """
    if budget < 2:
        raise ValueError("budget must be >= 2")
    n, x = instance.n, instance.x
    N = 1 << n
    c = min(budget, N)
    idx = rng.choice(N, size=c, replace=False)
    revealed = {int(i): instance.f.query(int(i)) for i in idx}
    cost = c * (n + 1)
    for y in sorted(revealed):
        z = y ^ x
        if z in revealed:
            return HmAnswer.of(y, z, revealed[y] ^ revealed[z], cost)
    y = int(rng.integers(0, N))
    return HmAnswer.of(y, y ^ x, int(rng.integers(0, 2)), cost)


def hm_random_guess(instance: HmInstance, rng: np.random.Generator) -> HmAnswer:
    y = int(rng.integers(0, 1 << instance.n))
    return HmAnswer.of(y, y ^ instance.x, int(rng.integers(0, 2)))


def bob_decode(x: int, n: int, gen: MfGenerator, strategy: Strategy, payload: bytes, m: int,
               rng: np.random.Generator) -> HmAnswer:
    """Bob's side of the reduction: sees only x, his generator, and Alice's bits."""
    rep = ClassicalRep.from_bytes(strategy.strategy_id, n, strategy.ell, m, payload)
    s = gen.generate(rep, rng)
    return HmAnswer.of(s.y, s.y ^ x, s.b, cost_bits=m)


def bob_train(x: int, n: int, strategy: Strategy, rng: np.random.Generator,
              n_examples: int = 1) -> MfGenerator:
    """Bob builds measured training data for his own x and trains on it."""
    data = generate_training_data(n, x, n_examples, strategy.ell, FULL_X, FSource.UNIFORM, rng)
    return measure_first_learn(strategy, measure_training_data(strategy, data, rng))


def reduce_measure_first(
    strategy: Strategy,
    instance: HmInstance,
    rng: np.random.Generator,
    learner: Callable = bob_train,
) -> HmAnswer:
    """Turn a measure-first protocol into an HM protocol with cost ``m`` bits."""
    n, x = instance.n, instance.x
    bob_rng, alice_rng, out_rng = rng.spawn(3)
    gen = learner(x, n, strategy, bob_rng)
    rep = measure(strategy, instance.f, strategy.ell, alice_rng)
    payload = rep.to_bytes()
    answer = bob_decode(x, n, gen, strategy, payload, rep.m, out_rng)
    return replace(answer, sent=payload)


@dataclass(frozen=True)
class SuccessEstimate:
    rate: float
    low: float
    high: float
    trials: int
    successes: int
    mean_cost_bits: float


def estimate_success(
    protocol: Callable[[HmInstance, np.random.Generator], HmAnswer],
    n: int,
    trials: int,
    rng: np.random.Generator,
    transcript: "TranscriptWriter | None" = None,
) -> SuccessEstimate:
    """Monte Carlo success rate with ``f`` uniform and ``x`` uniform nonzero."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    wins = 0
    cost = 0
    for r in rng.spawn(trials):
        inst = random_instance(n, r)
        ans = protocol(inst, r)
        ok = inst.is_correct(ans)
        wins += ok
        cost += ans.cost_bits
        if transcript is not None:
            transcript.write(inst, ans, ok)
    lo, hi = wilson_interval(wins, trials)
    return SuccessEstimate(wins / trials, lo, hi, trials, wins, cost / trials)


class TranscriptWriter:
    """Writes one JSON line per game: ``{n, x, f_digest, sent_bits, answer, correct}``."""

    def __init__(self, fp: IO[str]):
        self.fp = fp

    def write(self, inst: HmInstance, ans: HmAnswer, correct: bool) -> None:
        digest = hashlib.sha256(inst.f.table().tobytes()).hexdigest()[:16]
        self.fp.write(json.dumps({
            "n": inst.n,
            "x": BitVec(inst.n, inst.x).hex(),
            "f_digest": digest,
            "sent_bits": ans.sent.hex(),
            "answer": [ans.y, ans.z, ans.parity],
            "correct": bool(correct),
        }, sort_keys=True) + "\n")
