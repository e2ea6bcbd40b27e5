"""Convergence plots for refinement studies (needs the optional matplotlib extra)."""
from __future__ import annotations

from pathlib import Path


def plot_study(study: dict, path) -> Path:
    """Log-log error vs h with the fitted order in the legend; written to ``path``."""
    try:
        import matplotlib
    except ImportError as exc:
        raise RuntimeError("plotting needs matplotlib (pip install 'artifact[plot]')") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = study["rows"]
    h = [r["h"] for r in rows]
    err = [r["error"] for r in rows]
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.loglog(h, err, "o-", label=f"{study['kind']} (order {study['order']:.2f})")
    ax.set_xlabel("h")
    ax.set_ylabel("error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
