"""Renderers for the mala-lab result CSVs.

All statistics are taken from the CSVs; the only processing here is grouping,
median/mean aggregation over replicas, and the closed-form overlay curves
whose parameters the rows themselves carry.  Rendering is deterministic:
identical input bytes produce identical output bytes.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import matplotlib
matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

FIGURE_KINDS = ("speed-curve", "gamma-fan", "q-histogram", "acf-overlay", "esjd-curve")

# Long-format schema written by `mala-lab run`.
EXPERIMENT_COLUMNS = (
    "experiment", "N", "gamma", "ell", "target_kind", "kappa", "s", "a",
    "replica", "seed", "metric", "value", "stderr", "wall_ms",
)
# Schema printed by `mala-lab curve`.
CURVE_COLUMNS = ("ell", "alpha", "h", "kind")


class SchemaError(ValueError):
    """Input CSVs do not carry the columns (or rows) a figure needs."""

    def __init__(self, message, missing=()):
        self.missing = tuple(missing)
        super().__init__(message)


def _load(paths, required) -> pd.DataFrame:
    frames = []
    for path in paths:
        try:
            frames.append(pd.read_csv(path))
        except pd.errors.EmptyDataError:
            raise SchemaError(f"{path}: empty file, no header row")
    df = pd.concat(frames, ignore_index=True)
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise SchemaError(
            f"missing required columns: {', '.join(missing)}", missing=missing
        )
    if df.empty:
        raise SchemaError("no data rows in the input CSVs")
    return df


def _metric(df: pd.DataFrame, name: str) -> pd.DataFrame:
    rows = df[df["metric"] == name]
    if rows.empty:
        raise SchemaError(f"no '{name}' rows in the input CSVs")
    return rows


def _unique_value(series: pd.Series, what: str) -> float:
    values = series.unique()
    if len(values) != 1:
        raise SchemaError(f"expected one {what} in the input, found {sorted(values)}")
    return float(values[0])


def _speed_curve(df: pd.DataFrame, ax) -> dict:
    grid = df[df["kind"] == "grid"].sort_values("alpha")
    opt = df[df["kind"] == "optimum"]
    if grid.empty or opt.empty:
        raise SchemaError("speed-curve input needs 'grid' rows and one 'optimum' row")
    alpha_star = float(opt["alpha"].iloc[0])
    h_star = float(opt["h"].iloc[0])
    ell_star = float(opt["ell"].iloc[0])
    ax.plot(grid["alpha"], grid["h"], color="#1f77b4", lw=1.8)
    ax.axvline(alpha_star, color="#d62728", ls="--", lw=1.0)
    ax.plot([alpha_star], [h_star], "o", color="#d62728", ms=6)
    ax.annotate(f"optimum: acceptance {alpha_star:.3f}",
                xy=(alpha_star, h_star), xytext=(alpha_star + 0.05, h_star * 0.9),
                arrowprops=dict(arrowstyle="->", lw=0.8))
    ax.set_xlabel("average acceptance probability")
    ax.set_ylabel("speed  h")
    ax.set_title("Speed of the limiting diffusion vs acceptance probability")
    return {
        "alpha_star": f"{alpha_star:.6f}",
        "ell_star": f"{ell_star:.6f}",
        "h_star": f"{h_star:.6f}",
    }


def _gamma_fan(df: pd.DataFrame, ax) -> dict:
    acc = _metric(df, "acceptance")
    gammas = sorted(acc["gamma"].unique(), key=Fraction)
    for gamma in gammas:
        rows = acc[acc["gamma"] == gamma]
        mean = rows.groupby("N")["value"].mean().sort_index()
        ax.plot(mean.index, mean.values, marker="o", label=f"gamma = {gamma}")
    theory = df[df["metric"] == "alpha_theory"]
    if not theory.empty:
        ax.axhline(float(theory["value"].iloc[0]), color="gray", ls=":", lw=1.0,
                   label="limiting acceptance")
    ax.set_xscale("log", base=2)
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("dimension N")
    ax.set_ylabel("empirical acceptance")
    ax.set_title("Acceptance vs dimension per scaling exponent")
    ax.legend(loc="best", fontsize=8)
    return {"gammas": ",".join(str(g) for g in gammas)}


def _q_histogram(df: pd.DataFrame, ax) -> dict:
    samples = _metric(df, "q_sample")
    ell = _unique_value(samples["ell"], "ell value")
    mean = -(ell**3) / 4.0
    var = ell**3 / 2.0
    values = samples["value"].to_numpy(dtype=float)
    ax.hist(values, bins=60, density=True, color="#9ecae1", edgecolor="white")
    grid = np.linspace(values.min(), values.max(), 400)
    pdf = np.exp(-((grid - mean) ** 2) / (2 * var)) / np.sqrt(2 * np.pi * var)
    ax.plot(grid, pdf, color="#d62728", lw=1.8,
            label=f"Normal({mean:g}, {var:g})")
    ax.set_xlabel("log acceptance ratio")
    ax.set_ylabel("density")
    ax.set_title(f"Log acceptance ratio at ell = {ell:g} against its Gaussian limit")
    ax.legend(loc="best", fontsize=8)
    return {"overlay_mean": repr(mean), "overlay_var": repr(var), "ell": repr(ell)}


def _acf_overlay(df: pd.DataFrame, ax) -> dict:
    series = {"acf_chain": [], "acf_spde": []}
    for metric in df["metric"].unique():
        for name in series:
            prefix = name + "@"
            if str(metric).startswith(prefix):
                lag = float(str(metric)[len(prefix):])
                rows = df[df["metric"] == metric]
                series[name].append((lag, float(rows["value"].median())))
    if not series["acf_chain"] or not series["acf_spde"]:
        raise SchemaError("acf-overlay needs acf_chain@* and acf_spde@* rows")
    labels = {"acf_chain": "interpolated chain", "acf_spde": "limiting diffusion"}
    styles = {"acf_chain": dict(color="#1f77b4", marker="o", ms=3, lw=1.2),
              "acf_spde": dict(color="#2ca02c", marker="s", ms=3, lw=1.2)}
    for name, pts in series.items():
        pts.sort()
        lags = np.array([p[0] for p in pts])
        acfs = np.array([p[1] for p in pts])
        ax.plot(lags, acfs, label=labels[name], **styles[name])
    meta = {}
    theory = df[df["metric"] == "h_theory"]
    if not theory.empty:
        h = float(theory["value"].iloc[0])
        lags = np.linspace(0, max(p[0] for p in series["acf_chain"]), 200)
        ax.plot(lags, np.exp(-h * lags), color="gray", ls=":", lw=1.0,
                label=f"exp(-h t), h = {h:.3f}")
        meta["h_theory"] = repr(h)
    ax.set_xlabel("lag (algorithmic time)")
    ax.set_ylabel("autocorrelation")
    ax.set_title("Coordinate autocorrelation: chain vs limiting diffusion")
    ax.legend(loc="best", fontsize=8)
    return meta


def _esjd_curve(df: pd.DataFrame, ax) -> dict:
    rows = _metric(df, "esjd")
    mean = rows.groupby("ell")["value"].mean().sort_index()
    ax.plot(mean.index, mean.values, marker="o", color="#1f77b4",
            label="mean squared jump per step")
    best = float(mean.idxmax())
    ax.axvline(best, color="#d62728", ls="--", lw=1.0, label=f"argmax at ell = {best:g}")
    theory = df[df["metric"] == "h_theory"]
    meta = {"ell_best": repr(best)}
    if not theory.empty:
        t = theory.groupby("ell")["value"].first().sort_index()
        twin = ax.twinx()
        twin.plot(t.index, t.values, color="gray", ls=":", lw=1.2)
        twin.set_ylabel("speed h (theory)", color="gray")
    ax.set_xlabel("ell")
    ax.set_ylabel("expected squared jumping distance")
    ax.set_title("Jump-distance efficiency across the tuning parameter")
    ax.legend(loc="best", fontsize=8)
    return meta


_RENDERERS = {
    "speed-curve": (_speed_curve, CURVE_COLUMNS),
    "gamma-fan": (_gamma_fan, EXPERIMENT_COLUMNS),
    "q-histogram": (_q_histogram, EXPERIMENT_COLUMNS),
    "acf-overlay": (_acf_overlay, EXPERIMENT_COLUMNS),
    "esjd-curve": (_esjd_curve, EXPERIMENT_COLUMNS),
}


def render(kind: str, inputs, output, dpi: int = 150,
           width: float = 7.0, height: float = 4.5) -> Path:
    """Render one figure kind from result CSVs to an image file.

    Figure parameters read back later (optimum acceptance, overlay moments)
    are stored as PNG text metadata under a ``mala-fig:`` prefix.
    """
    if kind not in _RENDERERS:
        raise ValueError(f"unknown figure kind {kind!r}, expected one of {FIGURE_KINDS}")
    renderer, required = _RENDERERS[kind]
    df = _load(list(inputs), required)
    fig, ax = plt.subplots(figsize=(width, height), dpi=dpi)
    try:
        meta = renderer(df, ax)
        fig.tight_layout()
        output = Path(output)
        output.parent.mkdir(parents=True, exist_ok=True)
        metadata = {f"mala-fig:{k}": v for k, v in meta.items()}
        metadata["mala-fig:kind"] = kind
        fig.savefig(output, metadata=metadata)
    finally:
        plt.close(fig)
    return output
