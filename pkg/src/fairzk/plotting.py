"""Figures for the spectral-norm benchmark."""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.ticker import NullFormatter  # noqa: E402

from .formats import atomic_write  # noqa: E402


def plot_spectral_bench(rows: list[dict], path) -> None:
    """Log-log prover and verifier time against F, with an F^2 guide line."""
    dims = np.array([r["F"] for r in rows], dtype=float)
    prove = np.array([r["prove_ms"] for r in rows], dtype=float)
    verify = np.array([r["verify_ms"] for r in rows], dtype=float)

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.loglog(dims, prove, "o-", label="prover")
    ax.loglog(dims, verify, "s--", label="verifier")
    if len(dims) > 1:
        guide = prove[-1] * (dims / dims[-1]) ** 2
        ax.loglog(dims, guide, ":", color="gray", label=r"$\propto F^2$")
    ax.set_xlabel("matrix dimension F")
    ax.set_ylabel("time (ms)")
    ax.set_xticks(dims)
    ax.set_xticklabels([str(int(d)) for d in dims])
    ax.xaxis.set_minor_formatter(NullFormatter())
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    ax.legend(frameon=False)
    fig.tight_layout()
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=150)
    plt.close(fig)
    atomic_write(path, buf.getvalue())
