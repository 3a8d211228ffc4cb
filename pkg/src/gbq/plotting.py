"""SVG figures written next to the CSV outputs (matplotlib, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "gbq"  # stable element ids between runs
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_simulate(rec, outdir: Path) -> list[Path]:
    s = rec.series
    fig, ax = plt.subplots(1, 2, figsize=(9, 3.5))
    ax[0].plot(s["t"], s["E"])
    ax[0].set_xlabel("t")
    ax[0].set_ylabel("E")
    ax[1].semilogy(s["t"], np.maximum(s["E_rel_drift"], 1e-17))
    ax[1].set_xlabel("t")
    ax[1].set_ylabel("relative energy drift")
    return [_save(fig, outdir / "energy.svg")]


def plot_acl(rec, outdir: Path) -> list[Path]:
    s = rec.series
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for key in s:
        if key.startswith("pairing_"):
            N = key.split("_", 1)[1]
            ax.plot(s["t"], s[key], label=f"pairing N={N}")
            ax.plot(s["t"], s[f"fd_{N}"], "x", label=f"finite difference N={N}")
    ax.set_xlabel("t")
    ax.set_ylabel("dE(Iu)/dt")
    ax.legend(fontsize="small")
    return [_save(fig, outdir / "acl.svg")]


def plot_drift(rec, outdir: Path) -> list[Path]:
    N = np.asarray(rec.series["N"], float)
    d = np.asarray(rec.series["median_drift"], float)
    fit = rec.fits["median"]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(N, d, "o", label="median drift")
    ax.loglog(N, np.exp(fit["intercept"]) * N ** fit["slope"], "-",
              label=f"fit slope {fit['slope']:.3f}")
    ax.loglog(N, d[0] * (N / N[0]) ** -2.0, "--", label="slope -2")
    ax.set_xlabel("N")
    ax.set_ylabel("sup |E(Iu)(t) - E(Iu)(0)|")
    ax.legend(fontsize="small")
    return [_save(fig, outdir / "drift.svg")]


def plot_growth(rec, outdir: Path) -> list[Path]:
    fig, ax = plt.subplots(figsize=(5, 4))
    for key, val in rec.fits.items():
        if key.startswith("member_"):
            ax.loglog(1 + np.asarray(val["windows"]), val["sup"], "o-", ms=3)
    ax.set_xlabel("1 + T'")
    ax.set_ylabel("sup Q(t)")
    ax.set_title(f"bound exponent {rec.fits['bound_exponent']:.4g}")
    return [_save(fig, outdir / "growth.svg")]


def plot_ratios(rec, outdir: Path) -> list[Path]:
    fig, ax = plt.subplots(figsize=(6, 4))
    scales = rec.fits["scales"]
    for label, vals in rec.fits["maxima"].items():
        if label == "parseval_dev":
            continue
        x = rec.fits["N2"] if label == "bilinear" else scales
        x = np.asarray(x, float) / x[0]
        ax.semilogx(x, np.asarray(vals) / vals[0], "o-", label=label)
    ax.axhline(2.0, color="k", lw=0.8, ls="--")
    ax.set_xlabel("relative frequency scale")
    ax.set_ylabel("max ratio / max at smallest scale")
    ax.legend(fontsize="small")
    return [_save(fig, outdir / "ratios.svg")]


def plot_convergence(rec, outdir: Path) -> list[Path]:
    f = rec.fits
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(f["dt"][1:], f["temporal_errors"], "o-", label="successive dt difference")
    dt = np.asarray(f["dt"][1:])
    ax.loglog(dt, f["temporal_errors"][0] * (dt / dt[0]) ** 4, "--", label="order 4")
    ax.set_xlabel("dt")
    ax.set_ylabel("H1 difference")
    ax.legend(fontsize="small")
    return [_save(fig, outdir / "convergence.svg")]
