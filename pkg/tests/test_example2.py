"""Chain certificates in a free product: construction, verification, witnesses."""

import dataclasses
import random
from fractions import Fraction

import pytest

from proficert.errors import CapExceededError, SchemaError
from proficert.example2 import (
    Ex2Certificate,
    Ex2Params,
    Ex2Step,
    MixedQuotientSource,
    NoAdmissibleElementError,
    choose_r,
    construct_ex2,
    default_f,
    discreteness_witness,
    ex2_ball_dot,
    ex2_from_obj,
    ex2_to_obj,
    finite_intersection_witness,
    make_s,
    not_closed_witness2,
    subgroup_k_index,
    verify_ex2,
)
from proficert.quotients import (
    Permutation,
    generated_image_table,
    make_abelian_quotient,
    make_permutation_quotient,
    quotient_to_obj,
    trivial_quotient,
)
from proficert.words import (
    K,
    L,
    FactorPartition,
    Generator,
    Word,
    invert,
    multiply,
    parse_word,
    word_length,
)

P11 = FactorPartition(1, 1)
P22 = FactorPartition(2, 2)
A = Generator(K, 0)


def k_words(partition):
    return [Word(((g, 1),)) for g in partition.k_generators()]


@pytest.fixture(scope="module")
def default_cert():
    return construct_ex2()


# --- building blocks -----------------------------------------------------------


def test_default_f():
    assert [default_f(n) for n in range(1, 6)] == [2, 3, 4, 5, 6]


def test_mixed_source_is_deterministic():
    a = MixedQuotientSource(P22, seed=5)
    b = MixedQuotientSource(P22, seed=5)
    stream_a, stream_b = a.stream(), b.stream()
    for _ in range(6):
        assert quotient_to_obj(next(stream_a)) == quotient_to_obj(next(stream_b))
    assert a.describe() == {"kind": "mixed", "seed": 5}


def test_mixed_source_alternates_kinds():
    stream = MixedQuotientSource(P22, seed=0).stream()
    kinds = [quotient_to_obj(next(stream))["kind"] for _ in range(6)]
    assert kinds == ["perm", "abelian", "perm", "abelian", "perm", "abelian"]
    # the abelian factors walk up the primes
    stream = MixedQuotientSource(P22, seed=0).stream()
    moduli = []
    for _ in range(3):
        next(stream)
        moduli.append(quotient_to_obj(next(stream))["modulus"])
    assert moduli == [2, 3, 5]


def test_subgroup_k_index():
    assert subgroup_k_index(make_abelian_quotient(P22, 5)) == 25
    assert subgroup_k_index(make_abelian_quotient(P11, 7)) == 7
    assert subgroup_k_index(trivial_quotient(P22)) == 1


def test_choose_r_abelian_examples():
    q = make_abelian_quotient(P11, 7)
    assert choose_r(q, [], 1) == parse_word("a^2", P11)
    assert choose_r(q, [], 0) == parse_word("a", P11)


def test_choose_r_respects_forbidden_cosets():
    q = make_abelian_quotient(P11, 7)
    r = choose_r(q, [(q, parse_word("a", P11))], 0)
    assert r == parse_word("a^-1", P11)


def test_choose_r_exhaustion():
    # K-image of order 2 sits entirely inside the radius-1 ball
    q = make_permutation_quotient(
        P11, {Generator(K, 0): Permutation((1, 0)), Generator(L, 0): Permutation((0, 1))})
    with pytest.raises(NoAdmissibleElementError):
        choose_r(q, [], 1)


def test_choose_r_returns_k_word_past_radius():
    rng = random.Random(3)
    for _ in range(10):
        q = make_abelian_quotient(P22, rng.randrange(5, 12))
        radius = rng.randrange(0, 3)
        r = choose_r(q, [], radius)
        assert all(g.factor == K for g, _ in r.runs)
        assert q.cayley_distance(r, max_radius=radius) is None


def test_make_s():
    s, e = make_s(parse_word("a", P11), trivial_quotient(P11))
    assert (s, e) == (parse_word("a b", P11), 1)

    s, e = make_s(parse_word("a^2", P22), make_abelian_quotient(P22, 3))
    assert (s, e) == (parse_word("a^2 c^3", P22), 3)

    with pytest.raises(ValueError):
        make_s(Word(()), trivial_quotient(P11))
    with pytest.raises(ValueError):
        make_s(parse_word("a b", P11), trivial_quotient(P11))


# --- construction ----------------------------------------------------------------


def test_construct_default_run(default_cert):
    cert = default_cert
    assert cert.params.partition == P22
    assert cert.params.steps == 4
    assert cert.params.f_values == (2, 3, 4, 5)
    assert cert.params.source == {"kind": "mixed", "seed": 0}
    indices = [st.k_index for st in cert.steps]
    assert indices == sorted(indices) and len(set(indices)) == 4
    assert indices[0] > 2 * 2 * (2 * 2 - 1) ** (2 - 1)   # step-1 bound at f(1)=2
    assert cert.reciprocal_sum < Fraction(1, 2)
    for st in cert.steps:
        assert all(g.factor == K for g, _ in st.r.runs)
        assert st.quotient.cayley_distance(st.r, max_radius=st.f_value) is None
        assert st.quotient.coset_equal(st.s, st.r)


def test_verify_default_run(default_cert):
    report = verify_ex2(default_cert)
    assert report.ok, [c for c in report.clauses if not c.ok]
    assert not report.failures()
    names = {c.clause for c in report.clauses}
    assert names == {"params-structure", "step-structure", "condition1", "condition2",
                     "condition3", "condition4", "step1-index-bound",
                     "chain-containment", "chain-descent", "reciprocal-sum"}


def test_counting_soundness_invariant(default_cert):
    # the K-image never meets the f-ball in more points than the free-group
    # sphere count allows, so "outside the ball" can never be vacuous
    kk = default_cert.params.partition.k_size
    for st in default_cert.steps:
        image = set(generated_image_table(st.quotient, k_words(P22)))
        ball = set(st.quotient.ball(st.f_value))
        bound = 2 * kk * (2 * kk - 1) ** (st.f_value - 1) + 1
        assert len(image & ball) <= bound


def test_construct_other_shapes():
    cert = construct_ex2(steps=2, seed=1)
    assert verify_ex2(cert)
    cert = construct_ex2(partition=P11, steps=2, f=(1, 3))
    assert verify_ex2(cert)


def test_construct_rejects_bad_f():
    with pytest.raises(ValueError):
        construct_ex2(steps=2, f=(2, 2))
    with pytest.raises(ValueError):
        construct_ex2(steps=2, f=(0, 1))
    with pytest.raises(ValueError):
        construct_ex2(steps=2, f=(2,))
    with pytest.raises(ValueError):
        construct_ex2(steps=0)


class TrivialSource:
    kind = "trivial"

    def __init__(self, partition):
        self.partition = partition

    def describe(self):
        return {"kind": self.kind, "seed": 0}

    def stream(self):
        while True:
            yield trivial_quotient(self.partition)


def test_construct_gives_up_on_useless_source():
    with pytest.raises(CapExceededError):
        construct_ex2(steps=1, source=TrivialSource(P22), max_source_draws=5)


# --- verification catches corruption -----------------------------------------------


def replace_step(cert, i, **changes):
    step = dataclasses.replace(cert.steps[i], **changes)
    steps = cert.steps[:i] + (step,) + cert.steps[i + 1:]
    return dataclasses.replace(cert, steps=steps)


def test_verify_detects_s_replaced_by_r(default_cert):
    bad = replace_step(default_cert, 1, s=default_cert.steps[1].r)
    report = verify_ex2(bad)
    assert not report
    failing = {c.clause for c in report.failures()}
    assert "condition3" in failing
    assert "step-structure" in failing


def test_verify_detects_corrupt_e(default_cert):
    bad = replace_step(default_cert, 0, e=default_cert.steps[0].e + 1)
    assert any(c.clause == "step-structure" and not c.ok
               for c in verify_ex2(bad).clauses)


def test_verify_detects_corrupt_k_index(default_cert):
    bad = replace_step(default_cert, 2, k_index=default_cert.steps[2].k_index + 1)
    assert not verify_ex2(bad)


def test_verify_detects_identity_r(default_cert):
    bad = replace_step(default_cert, 0, r=Word(()))
    report = verify_ex2(bad)
    failing = {c.clause for c in report.failures()}
    assert "step-structure" in failing
    assert "condition1" in failing


def test_verify_detects_corrupt_reciprocal_sum(default_cert):
    bad = dataclasses.replace(default_cert, reciprocal_sum=Fraction(1, 3))
    assert any(c.clause == "reciprocal-sum" and not c.ok
               for c in verify_ex2(bad).clauses)


def test_verify_detects_bad_params(default_cert):
    params = dataclasses.replace(default_cert.params, f_values=(2, 3, 3, 5))
    bad = dataclasses.replace(default_cert, params=params)
    report = verify_ex2(bad)
    assert any(c.clause == "params-structure" and not c.ok for c in report.clauses)


# --- witnesses ---------------------------------------------------------------------


def test_discreteness_witness(default_cert):
    for n in range(1, 5):
        members = discreteness_witness(default_cert, n)
        assert n in members
        assert members <= set(range(1, n + 1))
    with pytest.raises(ValueError):
        discreteness_witness(default_cert, 5)
    with pytest.raises(ValueError):
        discreteness_witness(default_cert, 0)


def test_finite_intersection_witness(default_cert):
    x = default_cert.steps[1].s
    w = finite_intersection_witness(default_cert, x, 2)
    assert 2 in w.members
    assert w.length == word_length(x)
    assert isinstance(w.distance, int) and w.distance <= w.length
    for record in w.records:
        assert set(record) == {"m", "f_value", "f_below_length"}
        assert record["f_below_length"] == (record["f_value"] < w.length)
    with pytest.raises(ValueError):
        finite_intersection_witness(default_cert, x, 9)


def test_not_closed_witness2(default_cert):
    for n in range(1, 5):
        s, r_inv = not_closed_witness2(default_cert, n)
        step = default_cert.steps[n - 1]
        assert s == step.s and r_inv == invert(step.r)
        assert step.quotient.in_kernel(multiply(s, r_inv))
    with pytest.raises(ValueError):
        not_closed_witness2(default_cert, 0)


# --- serialization -------------------------------------------------------------------


def test_round_trip(default_cert):
    obj = ex2_to_obj(default_cert)
    assert obj["type"] == "ex2"
    assert isinstance(obj["reciprocal_sum"], str)
    assert Fraction(obj["reciprocal_sum"]) == default_cert.reciprocal_sum
    loaded = ex2_from_obj(obj)
    assert loaded == default_cert
    assert ex2_to_obj(loaded) == obj
    assert verify_ex2(loaded)


def test_loading_is_not_verification(default_cert):
    # well-formed but wrong certificates load fine and fail verify
    obj = ex2_to_obj(default_cert)
    obj["steps"][0]["k_index"] += 1
    loaded = ex2_from_obj(obj)
    assert not verify_ex2(loaded)


def test_schema_rejections(default_cert):
    obj = ex2_to_obj(default_cert)

    with pytest.raises(SchemaError, match="type"):
        ex2_from_obj(dict(obj, type="ex1_tail"))

    missing = dict(obj)
    del missing["reciprocal_sum"]
    with pytest.raises(SchemaError, match="reciprocal_sum"):
        ex2_from_obj(missing)

    with pytest.raises(SchemaError, match="reciprocal_sum"):
        ex2_from_obj(dict(obj, reciprocal_sum="1/0"))

    with pytest.raises(SchemaError, match="steps"):
        bad = dict(obj, params=dict(obj["params"], steps=True))
        ex2_from_obj(bad)

    with pytest.raises(SchemaError, match="f_values"):
        ex2_from_obj(dict(obj, params=dict(obj["params"], f_values="2,3")))

    with pytest.raises(SchemaError, match="source"):
        bad_source = dict(obj["params"]["source"], extra=1)
        ex2_from_obj(dict(obj, params=dict(obj["params"], source=bad_source)))

    bad_steps = [dict(obj["steps"][0], surprise=1)] + obj["steps"][1:]
    with pytest.raises(SchemaError, match="surprise"):
        ex2_from_obj(dict(obj, steps=bad_steps))

    bad_steps = [dict(obj["steps"][0], e=0)] + obj["steps"][1:]
    with pytest.raises(SchemaError, match="e"):
        ex2_from_obj(dict(obj, steps=bad_steps))


# --- DOT export ------------------------------------------------------------------------


def test_ball_dot(default_cert):
    dot = ex2_ball_dot(default_cert, 1)
    assert dot.startswith("digraph")
    assert dot.endswith("}\n")
    assert "doublecircle" in dot
    assert "lightblue" in dot        # r_1 is a K-geodesic, so it lands in ball(f+1)
    for line in dot.splitlines():
        if "->" in line:
            assert "label=" in line
    with pytest.raises(ValueError):
        ex2_ball_dot(default_cert, 6)
