import numpy as np
import pytest

from fairzk.spectral import (
    build_witness,
    ceil_sqrt,
    eigen_oracle,
    forge_duplicate_pair,
    forge_inflated_eigenvalue,
    forge_low_max,
    forge_skewed_vector,
    jacobi_eigh,
    naive_spectral_prove,
    naive_spectral_verify,
    perturbation_check,
    quantize_matrix,
    spectral_norm_real,
    spectral_prove,
    spectral_verify,
)
from fairzk.transcript import Transcript


def power_iteration_norm(w, iters=5000, tol=1e-15):
    """||W||_2 by power iteration on W^T W; independent of the Jacobi solver."""
    w = np.asarray(w, dtype=np.float64)
    x = np.ones(w.shape[1]) / np.sqrt(w.shape[1])
    x += np.linspace(0.0, 1e-3, w.shape[1])
    x /= np.linalg.norm(x)
    prev = 0.0
    for _ in range(iters):
        y = w.T @ (w @ x)
        est = float(x @ y)
        x = y / np.linalg.norm(y)
        if abs(est - prev) <= tol * max(1.0, est):
            break
        prev = est
    return float(np.sqrt(est))


def prove_and_verify(w, q_d=16, wit=None):
    wq = quantize_matrix(w, q_d=q_d)
    if wit is None:
        wit = build_witness(wq, q_d=q_d, quantized=True)
    com, proof, _ = spectral_prove(wq, wit, q_d=q_d)
    return spectral_verify(com, proof, *wq.shape, q_d=q_d, q_err=wit.q_err)


class TestEigenOracle:
    def test_identity(self):
        lam, _ = eigen_oracle(np.eye(2))
        np.testing.assert_allclose(lam, [1.0, 1.0])
        assert spectral_norm_real(np.eye(2)) == pytest.approx(1.0)

    def test_diagonal(self):
        lam, _ = eigen_oracle(np.diag([2.0, 3.0]))
        np.testing.assert_allclose(lam, [9.0, 4.0])
        assert spectral_norm_real(np.diag([2.0, 3.0])) == pytest.approx(3.0)

    def test_symmetric_two_by_two(self):
        w = np.array([[3.0, 1.0], [1.0, 3.0]])
        np.testing.assert_allclose(w @ w.T, [[10, 6], [6, 10]])
        lam, _ = eigen_oracle(w)
        # roots of x^2 - 20 x + 64
        np.testing.assert_allclose(lam, [16.0, 4.0], rtol=1e-12)
        assert spectral_norm_real(w) == pytest.approx(4.0)

    def test_residual_and_orthogonality(self, rng):
        for f in (3, 8, 17):
            w = rng.uniform(-1, 1, size=(f, f + 3))
            a = w @ w.T
            lam, v = eigen_oracle(w)
            assert np.linalg.norm(a - v @ np.diag(lam) @ v.T) < 1e-9 * np.linalg.norm(a)
            assert np.linalg.norm(v @ v.T - np.eye(f)) < 1e-9

    def test_descending_order(self, rng):
        lam, _ = jacobi_eigh(np.cov(rng.normal(size=(6, 40))))
        assert np.all(np.diff(lam) <= 0)

    def test_power_iteration_agrees(self, rng):
        w = rng.uniform(-1, 1, size=(9, 5))
        assert power_iteration_norm(w) == pytest.approx(spectral_norm_real(w), rel=1e-9)


class TestProtocol:
    def test_diagonal_low_precision(self):
        res = prove_and_verify(np.diag([2.0, 3.0]), q_d=8)
        assert res, res.reason
        assert abs(res.norm - 3.0) <= 2.0**-6

    def test_identity(self):
        res = prove_and_verify(np.eye(2))
        assert res and res.norm == pytest.approx(1.0, abs=2.0**-15)

    @pytest.mark.parametrize("shape", [(1, 2), (2, 1), (4, 2), (3, 5), (6, 6)])
    def test_shapes(self, rng, shape):
        w = rng.uniform(-1, 1, size=shape)
        res = prove_and_verify(w)
        assert res, res.reason
        assert res.norm == pytest.approx(spectral_norm_real(w), rel=1e-3)

    def test_commitment_binding(self, rng):
        w1, w2 = rng.uniform(-1, 1, size=(4, 4)), rng.uniform(-1, 1, size=(4, 4))
        wq1 = quantize_matrix(w1)
        _, proof, _ = spectral_prove(wq1)
        com2, _, _ = spectral_prove(quantize_matrix(w2))
        assert not spectral_verify(com2, proof, 4, 4)

    def test_transcript_desync(self, rng):
        wq = quantize_matrix(rng.uniform(-1, 1, size=(4, 4)))
        com, proof, _ = spectral_prove(wq)
        assert not spectral_verify(com, proof, 4, 4, transcript=Transcript(b"other"))

    def test_truncated_proof(self, rng):
        wq = quantize_matrix(rng.uniform(-1, 1, size=(4, 4)))
        com, proof, _ = spectral_prove(wq)
        assert not spectral_verify(com, proof.data[:-7], 4, 4)


class TestAttacks:
    W = np.array([[3.0, 1.0], [1.0, 3.0]])

    def honest(self):
        return build_witness(self.W, q_d=16)

    def test_duplicate_pair_breaks_orthogonality(self):
        forged = forge_duplicate_pair(self.honest())
        # rows of the forged V coincide, so V V^T is far from 2^32 I
        assert np.abs(np.array(forged.orth, dtype=np.float64)).max() >= 2.0**31
        assert not prove_and_verify(self.W, wit=forged)

    def test_understated_max(self):
        forged = forge_low_max(self.honest())
        assert forged.lam_max == pytest.approx(4 * 2**16, rel=1e-3)
        assert not prove_and_verify(self.W, wit=forged)

    def test_skewed_vector(self):
        assert not prove_and_verify(self.W, wit=forge_skewed_vector(self.honest()))

    def test_error_out_of_range(self):
        forged = forge_inflated_eigenvalue(self.honest())
        worst = int(np.abs(np.array(forged.err, dtype=object)).max())
        assert 1 << forged.q_err <= worst < 1.05 * (1 << forged.q_err)
        assert not prove_and_verify(self.W, wit=forged)

    def test_honest_witness_accepts(self):
        assert prove_and_verify(self.W, wit=self.honest())


class TestPerturbation:
    def test_zero_errors_need_exact_match(self):
        assert perturbation_check([16.0, 4.0], [16.0, 4.0], np.zeros((2, 2)), np.zeros((2, 2)))
        assert not perturbation_check([16.0, 4.0], [16.0 + 1e-9, 4.0], np.zeros((2, 2)), np.zeros((2, 2)))

    def test_window_example(self):
        err = np.array([[0.2]])  # Frobenius norm 0.2
        orth = np.array([[0.01]])  # spectral norm 0.01
        lo, hi = 16.1 * 0.99 - 0.2, 16.1 * 1.01 + 0.2
        assert lo == pytest.approx(15.739) and hi == pytest.approx(16.461)
        assert perturbation_check([16.0], [16.1], err, orth)

    def test_gross_mismatch(self):
        assert not perturbation_check([16.0], [10.0], np.full((1, 1), 1e-6), np.full((1, 1), 1e-6))

    def test_honest_witnesses(self, rng):
        for _ in range(10):
            f = int(rng.integers(2, 9))
            wit = build_witness(rng.uniform(-1, 1, size=(f, f)))
            m = wit.m.astype(np.float64) / 2.0**wit.q_d
            true_lam = np.sort(np.linalg.eigvalsh(m.T @ m))[::-1]
            claimed = np.sort(wit.lam_real())[::-1]
            assert perturbation_check(true_lam, claimed, wit.error_real(), wit.orth_real())


class TestNaiveReference:
    def test_round_trip(self, rng):
        w = rng.uniform(-1, 1, size=(4, 4))
        wq = quantize_matrix(w)
        wit = build_witness(wq, quantized=True)
        proof = naive_spectral_prove(wq, wit)
        res = naive_spectral_verify(proof, 4, 4, q_err=wit.q_err)
        assert res, res.reason
        assert res.norm == pytest.approx(spectral_norm_real(w), rel=1e-3)

    def test_rejects_low_max(self, rng):
        wq = quantize_matrix(rng.uniform(-1, 1, size=(4, 4)))
        wit = forge_low_max(build_witness(wq, quantized=True))
        assert not naive_spectral_verify(naive_spectral_prove(wq, wit), 4, 4, q_err=wit.q_err)


def test_ceil_sqrt():
    assert [ceil_sqrt(x) for x in (0, 1, 2, 4, 5, 9, 10)] == [0, 1, 2, 2, 3, 3, 4]
