"""Fixed-point gadgets, proved end to end through a ConstraintSystem."""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from fairzk.field import P, QuantizedValue, dequantize, quantize, to_signed
from fairzk.gadgets import (
    ConstraintSystem,
    RangeTables,
    absolute,
    max_gadget,
    max_relation_holds,
    quantize_validate,
    trunc_mul,
    trunc_mul_gadget,
)
from fairzk.serialize import Reader
from fairzk.session import ProofRejected, ProverSession, VerifierSession
from fairzk.transcript import Transcript


def prove_and_verify(build):
    """build(cs) wires the gadget; returns (prover satisfied, verifier accepted)."""
    sess = ProverSession(Transcript(b"gadget-test"))
    cs = ConstraintSystem(sess)
    build(cs)
    cs.run()
    satisfied = cs.satisfied and not sess.unsatisfied
    data = sess.finalize()
    vsess = VerifierSession(Transcript(b"gadget-test"), Reader(data))
    vcs = ConstraintSystem(vsess)
    try:
        build(vcs)
        vcs.run()
        vsess.finalize()
    except ProofRejected:
        return satisfied, False
    return satisfied, True


def floor_oracle(a: int, b: int, q_d: int):
    """Sign-magnitude truncation of a signed product via Fraction arithmetic."""
    c = Fraction(a * b)
    mag = abs(c) // 2**q_d
    return (mag if c >= 0 else -mag), abs(c) - mag * 2**q_d


class TestTables:
    def test_tables_from_parameters(self):
        t = RangeTables(q_d=8, q_err=10)
        assert len(t.limb) == 1 << 16
        np.testing.assert_array_equal(t.trunc, np.arange(256))
        assert t.err[-1] == 1023


class TestValidation:
    @pytest.mark.parametrize("value", [98304, P - 65536, 0])
    def test_valid_values(self, value):
        def build(cs):
            quantize_validate(cs, "v", [value] if cs.prover else None, 1)

        assert prove_and_verify(build) == (True, True)

    def test_bad_sign(self):
        def build(cs):
            quantize_validate(cs, "v", [98304] if cs.prover else None, 1, signs=[2] if cs.prover else None)

        assert prove_and_verify(build) == (False, False)

    def test_out_of_range_magnitude(self):
        def build(cs):
            quantize_validate(cs, "v", [2**32] if cs.prover else None, 1, q=32)

        assert prove_and_verify(build) == (False, False)

    def test_vector(self, rng):
        vals = [int(v) for v in rng.integers(-(2**31) + 1, 2**31, size=37)]

        def build(cs):
            quantize_validate(cs, "v", vals if cs.prover else None, 37)

        assert prove_and_verify(build) == (True, True)


class TestAbsolute:
    def test_examples(self):
        assert int(absolute(QuantizedValue(98304, 1))) == 98304
        assert int(absolute(QuantizedValue(P - 65536, P - 1))) == 65536
        assert int(absolute(QuantizedValue(0, 1))) == 0


class TestTruncMul:
    def test_exact_product(self):
        out = trunc_mul(quantize(1.5), quantize(2.0))
        assert out.product == 98304 * 131072
        assert out.result.encoding == 196608
        assert out.remainder == 0
        assert dequantize(out.result) == 3.0

    def test_small_scale_example(self):
        a = quantize(0.1, q_i=8, q_d=8)
        assert a.encoding == 26
        out = trunc_mul(a, a)
        expected = floor_oracle(26, 26, 8)
        assert expected == (2, 164)
        assert (out.result.encoding, out.remainder) == expected

    def test_zero_operand(self):
        out = trunc_mul(quantize(-3.25), quantize(0.0))
        assert (out.result.encoding, out.remainder) == (0, 0)

    def test_mixed_scales_rejected(self):
        with pytest.raises(ValueError):
            trunc_mul(quantize(1.0, q_d=8), quantize(1.0, q_d=16))

    def test_random_pairs(self, rng):
        xs = rng.uniform(-100, 100, size=(10_000, 2))
        for x, y in xs:
            qa, qb = quantize(float(x)), quantize(float(y))
            out = trunc_mul(qa, qb)
            expect = floor_oracle(to_signed(qa.encoding), to_signed(qb.encoding), 16)
            assert (to_signed(out.result.encoding), out.remainder) == expect
            assert abs(dequantize(out.result) - dequantize(qa) * dequantize(qb)) <= 2.0**-16

    def test_exhaustive_small(self):
        for a in range(-63, 64):
            for b in range(-63, 64):
                qa = QuantizedValue(a % P, 1 if a >= 0 else P - 1, 4, 4)
                qb = QuantizedValue(b % P, 1 if b >= 0 else P - 1, 4, 4)
                out = trunc_mul(qa, qb)
                assert (to_signed(out.result.encoding), out.remainder) == floor_oracle(a, b, 4)

    def test_deferred_truncation_fits(self):
        # three multiplications at q_d = 16 before truncating stay inside the field
        assert 2 ** (3 * 16) < P
        assert (2**32 - 1) ** 2 < P

    def test_gadget(self, rng):
        a_vals = [int(v) for v in rng.integers(-(2**20), 2**20, size=8)]
        b_vals = [int(v) for v in rng.integers(-(2**20), 2**20, size=8)]
        result = {}

        def build(cs):
            a = quantize_validate(cs, "a", a_vals if cs.prover else None, 8)
            b = quantize_validate(cs, "b", b_vals if cs.prover else None, 8)
            sign, mag = trunc_mul_gadget(cs, "ab", a, b, 16)
            if cs.prover:
                result["signed"] = [int(s) * int(m) for s, m in zip(sign.values, mag.values)]

        assert prove_and_verify(build) == (True, True)
        assert result["signed"] == [floor_oracle(a, b, 16)[0] for a, b in zip(a_vals, b_vals)]


class TestMax:
    @pytest.mark.parametrize("values, expected", [([3, 7, 2], 7), ([5], 5)])
    def test_examples(self, values, expected):
        got = {}

        def build(cs):
            sig = cs.witness("a", values if cs.prover else None, len(values))
            m = max_gadget(cs, "max", sig, 16)
            if cs.prover:
                got["max"] = int(m.values[0])

        assert prove_and_verify(build) == (True, True)
        assert got["max"] == expected

    def test_overclaim_product(self):
        assert (8 - 3) * (8 - 7) * (8 - 2) == 30
        assert not max_relation_holds([[3, 7, 2]], [8], 16)[0]

    @pytest.mark.parametrize("claimed", [8, 6, 3])
    def test_forged_max_rejects(self, claimed):
        def build(cs):
            sig = cs.witness("a", [3, 7, 2] if cs.prover else None, 3)
            max_gadget(cs, "max", sig, 16, claimed=claimed if cs.prover else None)

        assert prove_and_verify(build) == (False, False)

    def test_public_max(self):
        def build(cs):
            sig = cs.witness("a", [3, 7, 2] if cs.prover else None, 3)
            max_gadget(cs, "max", sig, 16, claimed=7, public=True)

        assert prove_and_verify(build) == (True, True)

    def test_exhaustive_relation(self):
        # the relation is symmetric, so sorted tuples cover every input order
        extra = np.array([P - 1, 2**7 + 3, 2**20], dtype=np.uint64)
        for n in range(1, 5):
            tuples = np.array(list(itertools.combinations_with_replacement(range(64), n)), dtype=np.uint64)
            true_max = tuples.max(axis=1)
            for claimed in itertools.chain(range(72), extra):
                c = np.full(len(tuples), claimed, dtype=np.uint64)
                holds = max_relation_holds(tuples, c, 7)
                np.testing.assert_array_equal(holds, true_max == np.uint64(claimed))

    def test_relation_matches_gadget(self, rng):
        for _ in range(12):
            n = int(rng.integers(1, 5))
            values = [int(v) for v in rng.integers(0, 64, size=n)]
            claimed = max(values) if rng.random() < 0.5 else int(rng.integers(0, 72))

            def build(cs, values=values, claimed=claimed, n=n):
                sig = cs.witness("a", values if cs.prover else None, n)
                max_gadget(cs, "max", sig, 7, claimed=claimed if cs.prover else None)

            expect = bool(max_relation_holds([values], [claimed], 7)[0])
            assert prove_and_verify(build) == (expect, expect)
            assert expect == (claimed == max(values))
