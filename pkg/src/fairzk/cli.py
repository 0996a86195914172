"""Command-line interface.

Exit codes: 0 success or ACCEPT, 1 REJECT, 2 dimension mismatch, 3 malformed
input file, 4 file not found or unreadable, 5 the inputs cannot be proven.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .fairness import (
    DimensionMismatch,
    EmptyGroupError,
    aggregate_stats,
    dnn_fairness_breakdown,
    fairness_score,
)
from .field import RangeError
from .formats import FileFormatError, atomic_write, load_dataset, load_model, load_stats, save_stats
from .pcs import decode_commitments, encode_commitments
from .protocols import (
    Params,
    ProofError,
    commit_dataset,
    commit_model,
    prove_aggregate_stats,
    prove_fairness,
    verify_fairness,
    verify_stats,
)
from .serialize import ProofFormatError

EXIT_OK, EXIT_REJECT, EXIT_DIMS, EXIT_FORMAT, EXIT_IO, EXIT_PROVE = 0, 1, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _params(args) -> Params:
    try:
        return Params(args.qi, args.qd, args.qerr)
    except ValueError as exc:
        raise CliError(EXIT_FORMAT, f"bad parameters: {exc}") from None


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc.strerror or exc}") from None


def _load(loader, path):
    try:
        return loader(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc.strerror or exc}") from None
    except UnicodeDecodeError:
        raise CliError(EXIT_FORMAT, f"{path}: not a text file") from None
    except DimensionMismatch as exc:
        raise CliError(EXIT_DIMS, f"{path}: {exc}") from None
    except (FileFormatError, ValueError) as exc:
        raise CliError(EXIT_FORMAT, f"{path}: {exc}") from None


def _commitments(path):
    try:
        return decode_commitments(_read_bytes(path))
    except ProofFormatError as exc:
        raise CliError(EXIT_FORMAT, f"{path}: {exc}") from None


def _stats_input(args):
    if args.stats:
        return _load(load_stats, args.stats)
    data = _load(load_dataset, args.data)
    return aggregate_stats(data, args.mode)


def _verdict(v, describe) -> int:
    if v.ok:
        print(f"ACCEPT {describe(v.value)}")
        return EXIT_OK
    print(f"REJECT {v.reason}")
    return EXIT_REJECT


# -- commands ------------------------------------------------------------------


def cmd_score(args) -> int:
    model = _load(load_model, args.model)
    stats = _stats_input(args)
    score = fairness_score(model, stats)
    report = {"kind": model.kind, "activation": model.activation, "score": score}
    if model.kind == "mlp":
        report["layers"] = [
            {"spectral_norm": b.spectral_norm, "spread_norm": b.spread_norm, "bound": b.bound}
            for b in dnn_fairness_breakdown(model, stats)
        ]
    if args.json:
        print(json.dumps(report, indent=2))
        return EXIT_OK
    print(f"fairness score: {score:.6f}")
    for k, layer in enumerate(report.get("layers", [])):
        print(
            f"  layer {k}: spectral norm {layer['spectral_norm']:.6f}, "
            f"||Delta_z|| {layer['spread_norm']:.6f}, bound {layer['bound']:.6f}"
        )
    return EXIT_OK


def cmd_commit(args) -> int:
    params = _params(args)
    if args.model:
        coms = commit_model(_load(load_model, args.model), params)
    else:
        coms = commit_dataset(_load(load_dataset, args.data), args.mode, params)
    atomic_write(args.out, encode_commitments(coms))
    for k, com in enumerate(coms):
        print(f"commitment {k}: {com.root.hex()} ({com.num_vars} vars)")
    return EXIT_OK


def cmd_prove_fair(args) -> int:
    params = _params(args)
    model = _load(load_model, args.model)
    stats = _load(load_stats, args.stats)
    coms, proof = prove_fairness(model, stats, params)
    atomic_write(args.out, proof.to_bytes())
    if args.commit_out:
        atomic_write(args.commit_out, encode_commitments(coms))
    print(f"fairness bound: {proof.bound:.6f}")
    print(f"proof: {len(proof.data)} bytes")
    return EXIT_OK


def cmd_verify_fair(args) -> int:
    params = _params(args)
    coms = _commitments(args.commitment)
    stats = _load(load_stats, args.stats)
    v = verify_fairness(coms, stats, _read_bytes(args.proof), params)
    return _verdict(v, lambda bound: f"fairness bound {bound:.6f}")


def cmd_prove_stats(args) -> int:
    params = _params(args)
    data = _load(load_dataset, args.data)
    coms, proof = prove_aggregate_stats(data, args.mode, params)
    atomic_write(args.out, proof.to_bytes())
    if args.commit_out:
        atomic_write(args.commit_out, encode_commitments(coms))
    if args.stats_out:
        save_stats(args.stats_out, proof.stats())
    stats = proof.stats()
    print(f"delta_x: {' '.join(f'{v:.6f}' for v in stats.delta_x)}")
    print(f"Delta_x: {' '.join(f'{v:.6f}' for v in stats.Delta_x)}")
    print(f"proof: {len(proof.data)} bytes")
    return EXIT_OK


def cmd_verify_stats(args) -> int:
    params = _params(args)
    coms = _commitments(args.commitment)
    claims = _load(load_stats, args.claims) if args.claims else None
    v = verify_stats(coms, _read_bytes(args.proof), claims, params)

    def describe(stats):
        return f"delta_x {' '.join(f'{x:.6f}' for x in stats.delta_x)}; Delta_x {' '.join(f'{x:.6f}' for x in stats.Delta_x)}"

    return _verdict(v, describe)


def cmd_bench_spectral(args) -> int:
    from .bench import bench_spectral

    try:
        dims = [int(d) for d in args.dims.split(",") if d.strip()]
    except ValueError:
        raise CliError(EXIT_FORMAT, "--dims must be a comma-separated list of integers") from None
    if not dims or any(d < 1 for d in dims):
        raise CliError(EXIT_FORMAT, "--dims must list positive integers")
    rows = bench_spectral(dims, args.qd, args.seed, args.repeat)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["F", "prove_ms", "verify_ms", "proof_bytes"])
    for r in rows:
        writer.writerow([r["F"], f"{r['prove_ms']:.3f}", f"{r['verify_ms']:.3f}", r["proof_bytes"]])
    text = buf.getvalue()
    sys.stdout.write(text)
    if args.out:
        atomic_write(args.out, text)
    if args.plot:
        from .plotting import plot_spectral_bench

        plot_spectral_bench(rows, args.plot)
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--qi", type=int, default=16, help="integer bits (default 16)")
    p.add_argument("--qd", type=int, default=16, help="fractional bits (default 16)")
    p.add_argument("--qerr", type=int, default=None, help="error-term bits (default: derived per matrix)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairzk", description="Zero-knowledge fairness certificates.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="compute the fairness score of a model")
    p.add_argument("model")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--stats", help="aggregated statistics JSON")
    src.add_argument("--data", help="dataset CSV")
    p.add_argument("--mode", choices=("sp", "eo"), default="sp")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("commit", help="commit to a model or a dataset")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model")
    src.add_argument("--data")
    p.add_argument("--mode", choices=("sp", "eo"), default="sp")
    p.add_argument("--out", required=True)
    _add_params(p)
    p.set_defaults(func=cmd_commit)

    p = sub.add_parser("prove-fair", help="prove a model's fairness bound")
    p.add_argument("model")
    p.add_argument("stats")
    p.add_argument("--out", required=True)
    p.add_argument("--commit-out")
    _add_params(p)
    p.set_defaults(func=cmd_prove_fair)

    p = sub.add_parser("verify-fair", help="verify a fairness proof")
    p.add_argument("commitment")
    p.add_argument("stats")
    p.add_argument("proof")
    _add_params(p)
    p.set_defaults(func=cmd_verify_fair)

    p = sub.add_parser("prove-stats", help="prove a dataset's aggregated statistics")
    p.add_argument("data")
    p.add_argument("--mode", choices=("sp", "eo"), default="sp")
    p.add_argument("--out", required=True)
    p.add_argument("--commit-out")
    p.add_argument("--stats-out")
    _add_params(p)
    p.set_defaults(func=cmd_prove_stats)

    p = sub.add_parser("verify-stats", help="verify a stats proof")
    p.add_argument("commitment")
    p.add_argument("proof")
    p.add_argument("--claims", help="stats JSON the proof must match")
    _add_params(p)
    p.set_defaults(func=cmd_verify_stats)

    p = sub.add_parser("bench-spectral", help="time the spectral-norm prover")
    p.add_argument("--dims", default="16,32,64")
    p.add_argument("--qd", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--out", help="also write the CSV here")
    p.add_argument("--plot", help="write a PNG of the timings")
    p.set_defaults(func=cmd_bench_spectral)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except DimensionMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIMS
    except (ProofError, RangeError, EmptyGroupError) as exc:
        print(f"error: cannot prove: {exc}", file=sys.stderr)
        return EXIT_PROVE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
