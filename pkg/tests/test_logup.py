"""LogUp lookups, checked against an exact rational-sum oracle."""

import copy
from fractions import Fraction

import numpy as np
import pytest

from fairzk.field import ExtElement, P
from fairzk.fvec import EVec
from fairzk.logup import (
    LookupInstance,
    NotInTableError,
    build_multiplicities,
    lookup_prove,
    lookup_verify,
    pad_instance,
    range_table_eval,
    read_lookup_proof,
    write_lookup_proof,
)
from fairzk.multilinear import MultilinearPoly, mle_evaluate
from fairzk.serialize import Reader, Writer
from fairzk.transcript import Transcript


def rational_sides(table, queries, mult, gamma):
    lhs = sum(Fraction(1, 1) / (gamma + a) for a in queries)
    rhs = sum(Fraction(m) / (gamma + t) for t, m in zip(table, mult))
    return lhs, rhs


def run(inst, table=None, tamper=None):
    proof = lookup_prove(inst, Transcript(b"lookup-test"), tamper)
    ok, _ = lookup_verify(inst.table if table is None else table, proof, Transcript(b"lookup-test"))
    return proof, ok


class TestMultiplicities:
    def test_counting(self):
        np.testing.assert_array_equal(build_multiplicities([1, 2, 3], [1, 2, 1]), [2, 1, 0])

    def test_empty_queries(self):
        np.testing.assert_array_equal(build_multiplicities(np.arange(16), []), np.zeros(16))

    def test_absent_value(self):
        with pytest.raises(NotInTableError):
            build_multiplicities([1, 2, 3], [4, 1])

    def test_range_table_fast_path(self, rng):
        a = rng.integers(0, 256, size=1000)
        np.testing.assert_array_equal(build_multiplicities(np.arange(256), a), np.bincount(a, minlength=256))

    def test_padding_charges_first_entry(self):
        t, a, m = pad_instance(LookupInstance.honest([1, 2, 3], [1, 2, 1]))
        assert len(t) == 4 and len(a) == 4
        np.testing.assert_array_equal(t, [1, 2, 3, 1])
        np.testing.assert_array_equal(m, [3, 1, 0, 0])


class TestRationalIdentity:
    def test_example_at_gamma_five(self):
        lhs, rhs = rational_sides([1, 2, 3], [1, 2, 1], [2, 1, 0], 5)
        assert lhs == rhs == Fraction(10, 21)

    def test_tampered_multiplicities_differ(self):
        lhs, rhs = rational_sides([1, 2, 3], [1, 2, 1], [1, 2, 0], 5)
        assert lhs != rhs

    def test_random_instances(self, rng):
        for _ in range(100):
            n, size = int(rng.integers(1, 65)), int(rng.integers(1, 65))
            table = [int(v) for v in rng.choice(1000, size=size, replace=False)]
            queries = [int(v) for v in rng.choice(table, size=n)]
            mult = [int(v) for v in build_multiplicities(table, queries)]
            for gamma in rng.integers(1001, 10**9, size=5):
                gamma = Fraction(int(gamma), int(rng.integers(1, 1000)))
                lhs, rhs = rational_sides(table, queries, mult, gamma)
                assert lhs == rhs

    def test_random_non_members(self, rng):
        for _ in range(20):
            size = int(rng.integers(1, 65))
            table = [int(v) for v in rng.choice(1000, size=size, replace=False)]
            queries = [int(v) for v in rng.choice(table, size=int(rng.integers(0, 64)))] + [1000 + int(rng.integers(0, 10))]
            # any multiplicity vector with the right total
            mult = [int(v) for v in np.bincount(rng.choice(size, size=len(queries)), minlength=size)]
            differ = 0
            for _ in range(100):
                gamma = Fraction(int(rng.integers(2000, 10**9)), int(rng.integers(1, 1000)))
                lhs, rhs = rational_sides(table, queries, mult, gamma)
                differ += lhs != rhs
            assert differ >= 99


class TestProtocol:
    def test_example_accepts(self):
        _, ok = run(LookupInstance.honest([1, 2, 3], [1, 2, 1]))
        assert ok

    def test_identity_queries(self):
        t = [5, 9, 11, 40]
        inst = LookupInstance.honest(t, t)
        np.testing.assert_array_equal(inst.multiplicities, [1, 1, 1, 1])
        assert run(inst)[1]

    def test_tampered_multiplicities_reject(self):
        inst = LookupInstance(np.array([1, 2, 3], dtype=np.uint64), np.array([1, 2, 1], dtype=np.uint64), np.array([1, 2, 0]))
        assert not run(inst)[1]

    def test_non_member_rejects(self):
        inst = LookupInstance(np.array([1, 2, 3], dtype=np.uint64), np.array([1, 2, 4], dtype=np.uint64), np.array([1, 1, 1]))
        assert not run(inst)[1]

    def test_wrong_table_rejects(self):
        inst = LookupInstance.honest([1, 2, 3, 4], [1, 2, 1])
        assert not run(inst, table=np.array([1, 2, 3, 5], dtype=np.uint64))[1]

    def test_tampered_helper_rejects(self):
        def tamper(name, vec):
            if name != "h0":
                return vec
            c0 = vec.c0.copy()
            c0[0] = (int(c0[0]) + 1) % P
            return EVec(c0, vec.c1)

        assert not run(LookupInstance.honest(np.arange(8), [3, 3, 7, 0]), tamper=tamper)[1]

    def test_empty_queries_accept(self):
        assert run(LookupInstance.honest(np.arange(16), []))[1]

    def test_range_table_mle(self, rng):
        t = MultilinearPoly(np.arange(64, dtype=np.uint64))
        pt = [ExtElement(int(a), int(b)) for a, b in rng.integers(0, P, size=(6, 2), dtype=np.uint64)]
        assert range_table_eval(pt) == mle_evaluate(t, pt)

    def test_serialization_round_trip(self):
        proof, _ = run(LookupInstance.honest(np.arange(16), [1, 5, 5, 9, 2]))
        w = Writer()
        write_lookup_proof(w, proof)
        back = read_lookup_proof(Reader(w.getvalue()), proof.query_vars, proof.table_vars)
        ok, _ = lookup_verify(np.arange(16), back, Transcript(b"lookup-test"))
        assert ok


def random_instance(rng):
    size = int(rng.integers(2, 65))
    table = rng.choice(10**6, size=size, replace=False).astype(np.uint64)
    queries = rng.choice(table, size=int(rng.integers(1, 65)))
    return LookupInstance.honest(table, queries)


def corrupt(proof, rng):
    bad = copy.deepcopy(proof)
    delta = ExtElement(int(rng.integers(1, 2**62)), int(rng.integers(0, 2**62)))
    core = bad.core
    choice = int(rng.integers(0, 5))
    if choice == 0:
        core.helper_sum = core.helper_sum + delta
    elif choice in (1, 2):
        check = core.query_check if choice == 1 else core.table_check
        if check.rounds:
            i = int(rng.integers(0, len(check.rounds)))
            j = int(rng.integers(0, len(check.rounds[i])))
            check.rounds[i][j] = check.rounds[i][j] + delta
        else:
            check.final_evals[0] = check.final_evals[0] + delta
    elif choice == 3:
        check = core.query_check if rng.random() < 0.5 else core.table_check
        k = int(rng.integers(0, 2))
        check.final_evals[k] = check.final_evals[k] + delta
    else:
        key = ["a", "h0", "m", "h1"][int(rng.integers(0, 4))]
        op = bad.openings[key]
        c0 = op.evals.c0.copy()
        i = int(rng.integers(0, len(c0)))
        c0[i] = (int(c0[i]) + 1) % P
        op.evals = EVec(c0, op.evals.c1)
    return bad


class TestRandomSuites:
    def test_completeness(self, rng):
        for _ in range(100):
            assert run(random_instance(rng))[1]

    def test_single_corruption(self, rng):
        rejected = 0
        for _ in range(100):
            inst = random_instance(rng)
            proof, ok = run(inst)
            assert ok
            ok, _ = lookup_verify(inst.table, corrupt(proof, rng), Transcript(b"lookup-test"))
            rejected += not ok
        assert rejected == 100
