import json

import numpy as np
import pytest

from conftest import bv
from mfsep import qsim
from mfsep.concepts import (
    FULL_X,
    PARITY,
    BoolFunc,
    ConceptSample,
    FSource,
    ParityLabel,
    concept_distribution,
    generate_training_data,
    relation_members,
    tv_distance,
)
from mfsep.errors import CorruptDataError, DegenerateMatchingError, InsufficientDataError
from mfsep.fqlearner import LearnerOutput, build_ux, fully_quantum_learn, measure_concept, recover_x


def test_build_ux_unit_vector():
    c = build_ux(bv("01"))
    assert c.pivot == 0 and c.cnots == ()
    assert [c.linear_map(y) for y in range(4)] == [0, 1, 2, 3]


def test_build_ux_two_bits():
    c = build_ux(bv("11"))
    assert c.pivot == 0 and c.cnots == ((0, 1),)
    L = {bv(a).value: bv(b).value for a, b in [("01", "11"), ("11", "01"), ("00", "00"), ("10", "10")]}
    assert {y: c.linear_map(y) for y in range(4)} == L


def test_build_ux_three_bits():
    c = build_ux(bv("111"))
    assert c.pivot == 0 and c.cnots == ((0, 1), (0, 2))
    assert all(c.linear_map(c.linear_map(y)) == y for y in range(8))


def test_build_ux_zero_rejected():
    with pytest.raises(DegenerateMatchingError):
        build_ux(0, 3)


def test_linear_map_matches_cnot_layer():
    # oracle: push each basis state through the CNOT gates in the simulator
    for x in range(1, 32):
        c = build_ux(x, 5)
        for y in range(32):
            s = qsim.apply_all(qsim.basis_state(5, y), [qsim.CNOT(a, b) for a, b in c.cnots])
            assert int(np.argmax(np.abs(s.amps))) == c.linear_map(y)


def test_measure_concept_linear_function(rng):
    f = BoolFunc.from_table([0, 1, 1, 0])
    c = build_ux(3, 2)
    assert all(measure_concept(c, f, rng).b == 0 for _ in range(200))


def test_measure_concept_and_function(rng):
    f = BoolFunc.from_table([0, 0, 0, 1])
    c = build_ux(bv("01"))
    d = c.exact_distribution(f)
    expected = {ConceptSample(2, 1, bv(y).value, b).code: 0.25
                for y, b in [("00", 0), ("01", 0), ("10", 1), ("11", 1)]}
    assert d.as_dict() == pytest.approx(expected, abs=1e-12)
    seen = {measure_concept(c, f, rng) for _ in range(400)}
    assert {s.code for s in seen} == set(expected)


def test_measure_concept_membership(rng):
    for n in (3, 6):
        f = BoolFunc.random(n, rng)
        x = int(rng.integers(1, 2**n))
        rel = relation_members(f, x)
        c = build_ux(x, n)
        codes = c.sample_many(f, 10_000, rng)
        for code in np.unique(codes):
            s = ConceptSample.from_code(n, int(code))
            assert s.x == x and (s.y, s.b) in rel


def test_exact_distribution_equals_concept(rng):
    for n in range(1, 9):
        for _ in range(10):
            f = BoolFunc.random(n, rng)
            x = int(rng.integers(1, 2**n))
            assert tv_distance(build_ux(x, n).exact_distribution(f), concept_distribution(f, x)) <= 1e-9


def test_recover_full_x():
    labels = [ConceptSample(4, bv("1011").value, y, 0) for y in range(3)]
    assert recover_x(labels) == bv("1011")


def test_recover_parity():
    labels = [ParityLabel(2, 0, bv("01").value), ParityLabel(2, 1, bv("10").value)]
    assert recover_x(labels, PARITY) == bv("10")


def test_recover_parity_insufficient():
    with pytest.raises(InsufficientDataError):
        recover_x([ParityLabel(2, 1, bv("10").value)], PARITY)


def test_recover_corrupt():
    with pytest.raises(CorruptDataError):
        recover_x([ConceptSample(3, 1, 0, 0), ConceptSample(3, 2, 0, 0)])
    with pytest.raises(CorruptDataError):
        recover_x([ParityLabel(2, 0, 1), ParityLabel(2, 1, 1)], PARITY)


def test_learn_full_x(rng):
    data = generate_training_data(2, bv("10").value, 1, 1, FULL_X, FSource.UNIFORM, rng)
    out = fully_quantum_learn(data)
    assert out.circuit == build_ux(bv("10"))


def test_learn_parity_matches_full_x(rng):
    n = 8
    agree = 0
    for r in rng.spawn(1000):
        x = int(r.integers(1, 2**n))
        data = generate_training_data(n, x, n + 10, 1, PARITY, FSource.UNIFORM, r)
        try:
            agree += fully_quantum_learn(data).circuit == build_ux(x, n)
        except InsufficientDataError:
            pass
    assert agree >= 995


def test_learner_json_round_trip():
    out = LearnerOutput(build_ux(0b1101, 4), FULL_X, 1)
    d = json.loads(out.to_json())
    assert d == {"n": 4, "x": "d", "pivot": 0, "cnots": [[0, 2], [0, 3]], "decode": "v1"}
    assert LearnerOutput.from_json(out.to_json()).circuit == out.circuit
    d["pivot"] = 2
    with pytest.raises(CorruptDataError):
        LearnerOutput.from_json(json.dumps(d))
