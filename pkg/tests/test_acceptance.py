"""One test per acceptance criterion; each prints a single PASS/FAIL line."""

import copy
import time
from fractions import Fraction

import numpy as np
import pytest
from test_gadgets import floor_oracle
from test_gkr import input_oracle, random_circuit
from test_gkr import prove_and_verify as gkr_round_trip
from test_logup import corrupt as corrupt_lookup
from test_logup import random_instance as random_lookup
from test_logup import rational_sides
from test_logup import run as lookup_round_trip
from test_spectral import power_iteration_norm
from test_spectral import prove_and_verify as spectral_round_trip
from test_sumcheck import oracle_for, prove
from test_sumcheck import random_instance as random_sumcheck
from test_sumcheck import verify as sumcheck_check

from fairzk.bench import bench_spectral
from fairzk.fairness import (
    AggregatedStats,
    Dataset,
    Model,
    aggregate_stats,
    fairness_score,
    group_metrics,
    predict,
)
from fairzk.field import ExtElement, P, QuantizedValue, dequantize, quantize, to_signed
from fairzk.fvec import EVec
from fairzk.gadgets import trunc_mul
from fairzk.gkr import circuit_evaluate, gkr_verify
from fairzk.logup import build_multiplicities, lookup_verify
from fairzk.multilinear import MultilinearPoly
from fairzk.pcs import pcs_commit, pcs_open, pcs_verify
from fairzk.protocols import prove_aggregate_stats, prove_fairness, prove_lr_fairness, verify_fairness, verify_stats
from fairzk.spectral import (
    build_witness,
    forge_duplicate_pair,
    forge_inflated_eigenvalue,
    forge_low_max,
    forge_skewed_vector,
    perturbation_check,
)
from fairzk.transcript import Transcript


def report(name, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, detail


def two_group_data(rng, n=1000, f=8):
    s = (rng.random(n) < 0.5).astype(np.int64)
    s[:2] = (0, 1)
    x = rng.normal(size=(n, f)) + float(rng.uniform(0, 2)) * s[:, None] * rng.normal(size=f)
    return Dataset(x, s)


def relative(a, b):
    return abs(a - b) / abs(b)


def test_bound_validity(rng):
    start = time.perf_counter()
    held = 0
    for _ in range(100):
        data = two_group_data(rng)
        model = Model.lr(rng.normal(size=8))
        sp, _ = group_metrics(predict(model, data.x), data.s)
        held += sp <= fairness_score(model, aggregate_stats(data))
    mlp_held = 0
    for k in range(50):
        data = two_group_data(rng)
        layers = [rng.normal(size=(1 if k % 2 == 0 else 16, 8))]
        if k % 2:
            layers.append(rng.normal(size=(1, 16)))
        model = Model.mlp(layers)
        sp, _ = group_metrics(predict(model, data.x), data.s)
        mlp_held += sp <= fairness_score(model, aggregate_stats(data))
    elapsed = time.perf_counter() - start
    ok = held == 100 and mlp_held == 50 and elapsed < 60
    report("bound validity", ok, f"LR {held}/100, MLP {mlp_held}/50 in {elapsed:.1f} s")


def exact_mean_gap(x, s, w) -> Fraction:
    """|mean z over s=0 minus mean z over s=1| for z = x w, in exact rationals."""
    z = [sum(Fraction(float(a)) * Fraction(float(b)) for a, b in zip(row, w)) for row in x]
    g0 = [v for v, g in zip(z, s) if g == 0]
    g1 = [v for v, g in zip(z, s) if g == 1]
    return abs(sum(g0) / len(g0) - sum(g1) / len(g1))


def test_mean_gap_equals_inner_product(rng):
    worst = 0.0
    for _ in range(100):
        f = int(rng.integers(1, 17))
        data = two_group_data(rng, n=int(rng.integers(10, 500)), f=f)
        w = rng.normal(size=f)
        gap = exact_mean_gap(data.x, data.s, w)
        inner = abs(float(w @ aggregate_stats(data).delta_x))
        worst = max(worst, float(abs(Fraction(inner) - gap) / gap))
    report("mean gap identity", worst <= 1e-12, f"worst relative error {worst:.2e} (tol 1e-12)")


def test_spectral_norm_accuracy(rng):
    worst = 0.0
    for k in range(50):
        f = (4, 8, 16, 32)[k % 4]
        w = rng.uniform(-1, 1, size=(f, f))
        res = spectral_round_trip(w)
        assert res, res.reason
        worst = max(worst, relative(res.norm, power_iteration_norm(w)))
    report("spectral norm accuracy", worst <= 1e-3, f"worst relative error {worst:.2e} over 50 (tol 1e-3)")


def test_spectral_attacks_rejected(rng):
    forgers = {
        "duplicate pair": forge_duplicate_pair,
        "non-orthogonal": forge_skewed_vector,
        "non-maximal": forge_low_max,
        "error out of range": forge_inflated_eigenvalue,
    }
    rejected = 0
    for _name, forge in forgers.items():
        for _ in range(10):
            f = int(rng.integers(2, 9))
            w = rng.uniform(-1, 1, size=(f, f))
            rejected += not spectral_round_trip(w, wit=forge(build_witness(w, q_d=16)))
    report("spectral attacks", rejected == 40, f"{rejected}/40 rejected")


def test_perturbation_sandwich(rng):
    held = 0
    for _ in range(50):
        f = int(rng.integers(2, 17))
        wit = build_witness(rng.uniform(-1, 1, size=(f, f)))
        m = wit.m.astype(np.float64) / 2.0**wit.q_d
        true_lam = np.sort(np.linalg.eigvalsh(m.T @ m))[::-1]
        claimed = np.sort(wit.lam_real())[::-1]
        held += perturbation_check(true_lam, claimed, wit.error_real(), wit.orth_real())
    report("perturbation sandwich", held == 50, f"{held}/50 witnesses inside the window")


def test_prover_scaling():
    small, large = bench_spectral([128, 256], repeat=9)
    ratio = large["prove_ms"] / small["prove_ms"]
    (row,) = bench_spectral([64], repeat=3, naive=True)
    speedup = row["naive_prove_ms"] / row["prove_ms"]
    ok = 3 <= ratio <= 6 and speedup >= 5
    report(
        "prover scaling",
        ok,
        f"F=256/F=128 ratio {ratio:.2f} ({large['prove_ms']:.0f}/{small['prove_ms']:.0f} ms, want 3..6); "
        f"naive/protocol at F=64 {speedup:.1f}x",
    )


def test_end_to_end_pipelines(rng):
    details, ok = [], True

    def timed(fn):
        start = time.perf_counter()
        out = fn()
        return out, time.perf_counter() - start

    stats = AggregatedStats(rng.uniform(-1, 1, 16), rng.uniform(0, 2, 16))
    w = rng.uniform(-1, 1, 16)
    (coms, proof), t = timed(lambda: prove_lr_fairness(w, stats))
    v, tv = timed(lambda: verify_fairness(coms, stats, proof))
    err = relative(v.value, fairness_score(Model.lr(w), stats)) if v else float("inf")
    ok &= bool(v) and err <= 1e-3 and t + tv < 60
    details.append(f"LR err {err:.1e} {t + tv:.1f}s")

    model = Model.mlp([rng.uniform(-1, 1, (64, 16)), rng.uniform(-1, 1, (1, 64))])
    (coms, proof), t = timed(lambda: prove_fairness(model, stats))
    v, tv = timed(lambda: verify_fairness(coms, stats, proof))
    err = relative(v.value, fairness_score(model, stats)) if v else float("inf")
    ok &= bool(v) and err <= 1e-3 and t + tv < 60
    details.append(f"DNN err {err:.1e} {t + tv:.1f}s")

    data = Dataset(rng.normal(size=(1024, 16)), rng.integers(0, 2, 1024))
    (coms, proof), t = timed(lambda: prove_aggregate_stats(data))
    v, tv = timed(lambda: verify_stats(coms, proof))
    oracle = aggregate_stats(data)
    err = float("inf")
    if v:
        err = max(
            np.abs(v.value.delta_x - oracle.delta_x).max(), np.abs(v.value.Delta_x - oracle.Delta_x).max()
        )
    ok &= bool(v) and err <= 1e-3 and t + tv < 60
    details.append(f"stats err {err:.1e} {t + tv:.1f}s")
    report("end-to-end pipelines", ok, "; ".join(details))


def test_protocol_core_suites(rng):
    def delta():
        return ExtElement(int(rng.integers(1, 2**62)), int(rng.integers(0, 2**62)))

    counts = {}

    ok = rejected = 0
    for _ in range(100):
        claim, polys, spec = random_sumcheck(rng)
        proof = prove(claim)
        ok += bool(sumcheck_check(claim.claimed_sum, proof, claim, oracle_for(polys, spec)))
        bad = copy.deepcopy(proof)
        if bad.rounds:
            i = int(rng.integers(0, len(bad.rounds)))
            bad.rounds[i][0] = bad.rounds[i][0] + delta()
        else:
            bad.final_evals[0] = bad.final_evals[0] + delta()
        rejected += not sumcheck_check(claim.claimed_sum, bad, claim, oracle_for(polys, spec))
    counts["sumcheck"] = (ok, rejected)

    ok = rejected = 0
    for _ in range(100):
        c = random_circuit(rng)
        inputs = rng.integers(0, P, size=c.input_width, dtype=np.uint64)
        proof, res = gkr_round_trip(c, inputs)
        ok += bool(res)
        bad = copy.deepcopy(proof)
        sc = bad.layers[int(rng.integers(0, len(bad.layers)))].left
        sc.final_evals[0] = sc.final_evals[0] + delta()
        out = circuit_evaluate(c, inputs)[0]
        rejected += not gkr_verify(c, out, bad, Transcript(b"gkr-test"), input_oracle(inputs))
    counts["GKR"] = (ok, rejected)

    ok = rejected = 0
    exact = 0
    for _ in range(100):
        inst = random_lookup(rng)
        proof, accepted = lookup_round_trip(inst)
        ok += bool(accepted)
        accepted, _ = lookup_verify(inst.table, corrupt_lookup(proof, rng), Transcript(b"lookup-test"))
        rejected += not accepted
        table = [int(t) for t in inst.table]
        queries = [int(a) for a in inst.queries]
        mult = [int(m) for m in build_multiplicities(table, queries)]
        lhs, rhs = rational_sides(table, queries, mult, int(rng.integers(10**7, 10**9)))
        exact += lhs == rhs
    counts["LogUp"] = (ok, rejected)

    ok = rejected = 0
    for _ in range(100):
        k = int(rng.integers(0, 11))
        f = MultilinearPoly(rng.integers(0, P, size=1 << k, dtype=np.uint64))
        com = pcs_commit(f)
        pt = [ExtElement(int(a), int(b)) for a, b in rng.integers(0, P, size=(k, 2), dtype=np.uint64)]
        proof = pcs_open(f, pt, com)
        ok += bool(pcs_verify(com, pt, proof.value, proof))
        c0 = proof.evals.c0.copy()
        i = int(rng.integers(0, len(c0)))
        c0[i] = (int(c0[i]) + 1) % P
        proof.evals = EVec(c0)
        rejected += not pcs_verify(com, pt, proof.value, proof)
    counts["PCS"] = (ok, rejected)

    passed = all(c == (100, 100) for c in counts.values()) and exact == 100
    detail = ", ".join(f"{k} {a}/100 complete {r}/100 rejected" for k, (a, r) in counts.items())
    report("protocol core suites", passed, f"{detail}; rational identity {exact}/100")


def test_quantization(rng):
    xs = rng.uniform(-1000, 1000, size=10_000)
    worst = max(abs(dequantize(quantize(float(x))) - x) for x in xs)
    mismatches = 0
    for a in range(-63, 64):
        for b in range(-63, 64):
            qa = QuantizedValue(a % P, 1 if a >= 0 else P - 1, 4, 4)
            qb = QuantizedValue(b % P, 1 if b >= 0 else P - 1, 4, 4)
            out = trunc_mul(qa, qb)
            mismatches += (to_signed(out.result.encoding), out.remainder) != floor_oracle(a, b, 4)
    ok = worst < 2.0**-16 and mismatches == 0
    report("quantization", ok, f"worst round-trip error {worst:.2e} (< 2^-16); trunc_mul mismatches {mismatches}/16129")


def test_proof_tamper_fuzzing(rng):
    stats = AggregatedStats(rng.uniform(-1, 1, 4), rng.uniform(0, 2, 4))
    coms_lr, lr = prove_lr_fairness(rng.uniform(-1, 1, 4), stats)
    coms_dnn, dnn = prove_fairness(Model.mlp([rng.uniform(-1, 1, (4, 4)), rng.uniform(-1, 1, (1, 4))]), stats)
    coms_st, st = prove_aggregate_stats(Dataset(rng.normal(size=(16, 3)), np.arange(16) % 2))
    cases = [
        (lr.to_bytes(), lambda d: verify_fairness(coms_lr, stats, d)),
        (dnn.to_bytes(), lambda d: verify_fairness(coms_dnn, stats, d)),
        (st.to_bytes(), lambda d: verify_stats(coms_st, d)),
    ]
    rejected = 0
    for data, check in cases:
        assert check(data)
        for _ in range(100):
            bad = bytearray(data)
            pos = int(rng.integers(0, len(bad)))
            bad[pos] = (bad[pos] + int(rng.integers(1, 256))) % 256
            rejected += not check(bytes(bad))
    report("proof tamper fuzzing", rejected == 300, f"{rejected}/300 rejected")


pytestmark = pytest.mark.acceptance
