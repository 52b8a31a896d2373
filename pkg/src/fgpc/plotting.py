"""Optional PNG rendering of solve records (requires matplotlib)."""

from __future__ import annotations

import os


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise ImportError("--plot-dir needs matplotlib; install the 'plot' extra") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_solution(record: dict, out_dir: str) -> list[str]:
    """Predicted versus corrected state and control; returns the written paths."""
    plt = _pyplot()
    os.makedirs(out_dir, exist_ok=True)
    pred, corr = record["trajectories"]["predicted"], record["trajectories"]["corrected"]
    paths = []
    for key, label in (("s", "substrate s(t)"), ("u", "dilution u(t)")):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        ax.plot(pred["t"], pred[key], "o", ms=3, label="predicted")
        ax.plot(corr["t"], corr[key], "-", label="corrected", drawstyle="steps-post" if key == "u" else "default")
        for x in record["xi"]:
            ax.axvline(x, color="0.6", lw=0.8, ls="--")
        ax.set_xlabel("t")
        ax.set_ylabel(label)
        ax.legend()
        fig.tight_layout()
        path = os.path.join(out_dir, f"solution_{key}.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths


def plot_sweep(record: dict, out_dir: str) -> list[str]:
    """Corrected cost against the period."""
    plt = _pyplot()
    os.makedirs(out_dir, exist_ok=True)
    T = [p["T"] for p in record["sweep"]]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(T, [p["J_c"] for p in record["sweep"]], "o-", label="J_c")
    ax.plot(T, [p["J_p"] for p in record["sweep"]], "s--", label="J_p")
    ax.set_xlabel("T")
    ax.set_ylabel("mean substrate")
    ax.legend()
    fig.tight_layout()
    path = os.path.join(out_dir, "sweep_T.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]
