"""End-to-end fairness and statistics proofs."""

import struct

import numpy as np
import pytest

from fairzk.fairness import AggregatedStats, Dataset, EmptyGroupError, Model, aggregate_stats, fairness_score
from fairzk.field import RangeError
from fairzk.protocols import (
    Header,
    Params,
    ProofError,
    Protocol,
    _transcript,
    commit_dataset,
    commit_model,
    prove_aggregate_stats,
    prove_dnn_fairness,
    prove_fairness,
    prove_lr_fairness,
    verify_fairness,
    verify_stats,
)
from fairzk.serialize import BASE

EXAMPLE_STATS = AggregatedStats([0.5, 0.5], [1.0, 1.0])
EXAMPLE_DATA = Dataset([[1.0], [3.0], [2.0], [6.0]], [0, 0, 1, 1])


def close(a, b):
    return abs(a - b) <= max(1e-3 * abs(b), 1e-6)


def random_stats(rng, f):
    return AggregatedStats(rng.uniform(-1, 1, size=f), rng.uniform(0, 2, size=f))


def replace_claim(data: bytes, old: int, new: int) -> bytes:
    """Swap the base-field claim section in the envelope."""
    section = struct.pack("<BI", BASE, 8)
    needle = section + old.to_bytes(8, "little")
    assert data.count(needle) == 1
    return data.replace(needle, section + new.to_bytes(8, "little"))


class TestLogisticRegression:
    def test_example(self):
        coms, proof = prove_lr_fairness([1.0, -2.0], EXAMPLE_STATS)
        assert abs(proof.bound - 1.625) <= 2.0**-14
        v = verify_fairness(coms, EXAMPLE_STATS, proof)
        assert v, v.reason
        assert v.value == proof.bound

    def test_zero_model(self):
        coms, proof = prove_lr_fairness([0.0, 0.0], EXAMPLE_STATS)
        assert proof.bound == 0.0
        assert verify_fairness(coms, EXAMPLE_STATS, proof)

    def test_claimed_bound_mismatch(self):
        coms, proof = prove_lr_fairness([1.0, -2.0], EXAMPLE_STATS)
        assert verify_fairness(coms, EXAMPLE_STATS, proof, claimed=proof.bound)
        v = verify_fairness(coms, EXAMPLE_STATS, proof, claimed=1.626)
        assert not v and v.reason == "proven bound differs from the claimed one"

    def test_tampered_claim_bytes(self):
        coms, proof = prove_lr_fairness([1.0, -2.0], EXAMPLE_STATS)
        forged = round(1.626 * 2**proof.out_qd)
        v = verify_fairness(coms, EXAMPLE_STATS, replace_claim(proof.data, proof.claim, forged))
        assert not v

    def test_relu(self):
        coms, proof = prove_lr_fairness([1.0, -2.0], EXAMPLE_STATS, activation="relu")
        assert close(proof.bound, 4 * 1.625)
        assert verify_fairness(coms, EXAMPLE_STATS, proof)

    def test_reordered_stats_rejected(self):
        stats = AggregatedStats([0.5, -0.25, 0.75], [1.0, 0.5, 0.25])
        coms, proof = prove_lr_fairness([1.0, -2.0, 0.5], stats)
        reordered = AggregatedStats(stats.delta_x[::-1], stats.Delta_x[::-1])
        assert not verify_fairness(coms, reordered, proof)

    def test_weights_out_of_range(self):
        with pytest.raises(RangeError):
            prove_lr_fairness([2.0**16, 0.0], EXAMPLE_STATS)

    def test_header_params_checked(self):
        coms, proof = prove_lr_fairness([1.0, -2.0], EXAMPLE_STATS)
        v = verify_fairness(coms, EXAMPLE_STATS, proof, params=Params(q_d=12))
        assert v.reason == "header parameters differ from the expected ones"

    def test_commit_model_matches_proof(self, rng):
        w = rng.normal(size=5)
        coms, _ = prove_lr_fairness(w, random_stats(rng, 5))
        assert commit_model(Model.lr(w)) == coms


class TestNetworks:
    def test_single_layer_example(self):
        model = Model.mlp([np.array([[1.0, -1.0]])])
        coms, proof = prove_dnn_fairness(model, EXAMPLE_STATS)
        assert abs(proof.bound - 1.25) <= 1e-3
        v = verify_fairness(coms, EXAMPLE_STATS, proof)
        assert v, v.reason

    def test_zero_model(self):
        model = Model.mlp([np.zeros((3, 2)), np.zeros((1, 3))])
        coms, proof = prove_dnn_fairness(model, EXAMPLE_STATS)
        assert proof.bound == 0.0
        assert verify_fairness(coms, EXAMPLE_STATS, proof)

    def test_two_layer_against_oracle(self, rng):
        model = Model.mlp([rng.normal(size=(6, 4)) / 2, rng.normal(size=(1, 6)) / 2])
        stats = random_stats(rng, 4)
        coms, proof = prove_fairness(model, stats)
        assert close(proof.bound, fairness_score(model, stats))
        assert verify_fairness(coms, stats, proof)

    def test_relu_network(self, rng):
        model = Model.mlp([rng.normal(size=(4, 3)) / 2, rng.normal(size=(1, 4)) / 2], "relu")
        stats = random_stats(rng, 3)
        coms, proof = prove_fairness(model, stats)
        assert close(proof.bound, fairness_score(model, stats))
        assert verify_fairness(coms, stats, proof)

    def test_other_model_commitment(self, rng):
        stats = random_stats(rng, 3)
        m1 = Model.mlp([rng.normal(size=(4, 3)), rng.normal(size=(1, 4))])
        m2 = Model.mlp([rng.normal(size=(4, 3)), rng.normal(size=(1, 4))])
        _, proof = prove_fairness(m1, stats)
        v = verify_fairness(commit_model(m2), stats, proof)
        assert not v and "does not match" in v.reason

    def test_wrong_commitment_count(self, rng):
        model = Model.mlp([rng.normal(size=(4, 3)), rng.normal(size=(1, 4))])
        stats = random_stats(rng, 3)
        coms, proof = prove_fairness(model, stats)
        assert not verify_fairness(coms[:1], stats, proof)


class TestStatistics:
    def test_example(self):
        coms, proof = prove_aggregate_stats(EXAMPLE_DATA)
        st = proof.stats()
        assert list(st.delta_x) == [-2.0] and list(st.Delta_x) == [2.0]
        v = verify_stats(coms, proof)
        assert v, v.reason
        np.testing.assert_array_equal(v.value.delta_x, [-2.0])

    def test_verify_against_claims(self):
        coms, proof = prove_aggregate_stats(EXAMPLE_DATA)
        assert verify_stats(coms, proof, aggregate_stats(EXAMPLE_DATA))
        v = verify_stats(coms, proof, AggregatedStats([-2.0], [1.5]))
        assert not v and v.reason == "proven statistics differ from the claimed ones"

    def test_empty_group_aborts(self):
        with pytest.raises(EmptyGroupError):
            prove_aggregate_stats(Dataset([[1.0], [2.0]], [0, 0]))

    def test_spread_one_step_too_small(self):
        low = AggregatedStats([-2.0], [2.0 - 2.0**-16])
        with pytest.raises(ProofError):
            prove_aggregate_stats(EXAMPLE_DATA, claims=low)
        coms, forged = prove_aggregate_stats(EXAMPLE_DATA, claims=low, allow_invalid=True)
        assert not verify_stats(coms, forged)

    def test_spread_too_large(self):
        high = AggregatedStats([-2.0], [2.0 + 2.0**-16])
        coms, forged = prove_aggregate_stats(EXAMPLE_DATA, claims=high, allow_invalid=True)
        assert not verify_stats(coms, forged)

    def test_wrong_mean_difference(self):
        off = AggregatedStats([-2.0 + 2.0**-16], [2.0])
        coms, forged = prove_aggregate_stats(EXAMPLE_DATA, claims=off, allow_invalid=True)
        assert not verify_stats(coms, forged)

    def test_random_dataset(self, rng):
        x = rng.normal(size=(37, 5))
        s = np.arange(37) % 3 == 0
        data = Dataset(x, s)
        coms, proof = prove_aggregate_stats(data)
        oracle = aggregate_stats(data)
        st = proof.stats()
        np.testing.assert_allclose(st.delta_x, oracle.delta_x, atol=1e-4)
        np.testing.assert_allclose(st.Delta_x, oracle.Delta_x, atol=1e-4)
        assert verify_stats(coms, proof)
        assert commit_dataset(data) == coms

    def test_equal_opportunity(self, rng):
        y = np.array([1, 1, 1, 1, 0, 0, 1, 0])
        s = np.array([0, 0, 1, 1, 0, 1, 0, 1])
        data = Dataset(rng.normal(size=(8, 2)), s, y)
        coms, proof = prove_aggregate_stats(data, "eo")
        assert proof.header.mode == "eo"
        np.testing.assert_allclose(proof.stats().delta_x, aggregate_stats(data, "eo").delta_x, atol=1e-4)
        assert verify_stats(coms, proof)
        assert commit_dataset(data, "eo") == coms

    def test_other_dataset_commitment(self, rng):
        d1 = Dataset(rng.normal(size=(16, 2)), np.arange(16) % 2)
        d2 = Dataset(rng.normal(size=(16, 2)), np.arange(16) % 2)
        _, proof = prove_aggregate_stats(d1)
        assert not verify_stats(commit_dataset(d2), proof)


class TestProperties:
    def test_deterministic(self, rng):
        w = rng.normal(size=4)
        stats = random_stats(rng, 4)
        assert prove_lr_fairness(w, stats)[1].data == prove_lr_fairness(w, stats)[1].data
        data = Dataset(rng.normal(size=(12, 3)), np.arange(12) % 2)
        assert prove_aggregate_stats(data)[1].data == prove_aggregate_stats(data)[1].data

    def test_challenge_sequences_differ(self, rng):
        corpus = []
        for f in (2, 3):
            stats = random_stats(rng, f)
            header = Header(Protocol.LR, Params(), (f,))
            corpus.append((header, [Params().quantize(stats.delta_x), Params().quantize(stats.Delta_x)]))
            corpus.append((Header(Protocol.DNN, Params(), (f, 1)), corpus[-1][1]))
        firsts = set()
        for header, publics in corpus:
            t = _transcript(header, publics)
            firsts.add(tuple((c.c0, c.c1) for c in t.challenge_vec(3)))
        assert len(firsts) == len(corpus)

    def test_oracle_agreement_lr(self, rng):
        for _ in range(50):
            f = int(rng.integers(1, 17))
            w, stats = rng.uniform(-1, 1, size=f), random_stats(rng, f)
            coms, proof = prove_lr_fairness(w, stats)
            assert close(proof.bound, fairness_score(Model.lr(w), stats))
            assert verify_fairness(coms, stats, proof)

    def test_oracle_agreement_mlp(self, rng):
        for _ in range(20):
            f0, hidden = int(rng.integers(2, 9)), int(rng.integers(2, 9))
            # Entries uniform in [-1, 1]; scores near 0.01 sit at the q_D=16 resolution.
            layers = [rng.uniform(-1, 1, size=(hidden, f0))]
            if rng.random() < 0.5:
                layers.append(rng.uniform(-1, 1, size=(hidden, hidden)))
            layers.append(rng.uniform(-1, 1, size=(1, hidden)))
            model = Model.mlp(layers)
            stats = random_stats(rng, f0)
            coms, proof = prove_fairness(model, stats)
            assert close(proof.bound, fairness_score(model, stats)), (proof.bound, fairness_score(model, stats))
            assert verify_fairness(coms, stats, proof)

    def test_binding(self, rng):
        rejected = 0
        for _ in range(20):
            f = int(rng.integers(2, 9))
            stats = random_stats(rng, f)
            w1, w2 = rng.normal(size=f), rng.normal(size=f)
            _, proof = prove_lr_fairness(w1, stats)
            rejected += not verify_fairness(commit_model(Model.lr(w2)), stats, proof)
        assert rejected == 20

    @pytest.mark.parametrize("kind", ["lr", "dnn", "stats"])
    def test_byte_flips(self, rng, kind):
        stats = random_stats(rng, 3)
        if kind == "lr":
            coms, proof = prove_lr_fairness(rng.normal(size=3), stats)
            check = lambda data: verify_fairness(coms, stats, data)  # noqa: E731
        elif kind == "dnn":
            coms, proof = prove_fairness(Model.mlp([rng.normal(size=(2, 3)), rng.normal(size=(1, 2))]), stats)
            check = lambda data: verify_fairness(coms, stats, data)  # noqa: E731
        else:
            coms, proof = prove_aggregate_stats(Dataset(rng.normal(size=(8, 2)), np.arange(8) % 2))
            check = lambda data: verify_stats(coms, data)  # noqa: E731
        data = proof.to_bytes()
        assert check(data)
        for pos in rng.integers(0, len(data), size=20):
            bad = bytearray(data)
            bad[pos] ^= 1 << int(rng.integers(0, 8))
            assert not check(bytes(bad))
