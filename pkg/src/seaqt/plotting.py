"""Optional figures from trajectory CSV files. Requires the ``plot`` extra."""

from __future__ import annotations

from pathlib import Path

from .reporting import read_csv

PANELS = (("entropy", "entropy"), ("energy", "energy"), ("entropy_rate", "entropy rate"), ("eig_", "eigenvalues"))


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise RuntimeError("plotting needs matplotlib: pip install 'artifact[plot]'") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_trajectories(csv_paths, out_png, labels=None) -> Path:
    """Four-panel figure (entropy, energy, entropy rate, eigenvalues) for one or more runs."""
    plt = _pyplot()
    csv_paths = [Path(p) for p in csv_paths]
    labels = labels or [p.stem for p in csv_paths]
    fig, axes = plt.subplots(2, 2, figsize=(9, 6.5), sharex=True)
    for path, label in zip(csv_paths, labels):
        _, cols, data = read_csv(path)
        t = data[:, cols.index("t")]
        for ax, (key, title) in zip(axes.flat, PANELS):
            idx = [i for i, c in enumerate(cols) if c == key or (key.endswith("_") and c.startswith(key))]
            for j, i in enumerate(idx):
                ax.plot(t, data[:, i], lw=1.2, label=label if j == 0 else None)
            ax.set_title(title, fontsize=10)
    for ax in axes[1]:
        ax.set_xlabel("t")
    if len(csv_paths) > 1:
        axes[0, 0].legend(fontsize=8, frameon=False)
    fig.tight_layout()
    out_png = Path(out_png)
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return out_png
