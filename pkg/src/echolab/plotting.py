"""Figure rendering for result bundles.

matplotlib is optional (``pip install echolab[plot]``); it is imported on
first use with the non-interactive Agg backend.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

# series drawn on a linear axis in a second panel
_GROWING = ("chi2", "mean_action", "early_time_exponent")


def _pyplot():
    try:
        import matplotlib
    except ImportError:
        return None
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_bundle(bundle, out_dir, fmt: str = "png") -> dict[str, str]:
    """Write ``<kind>.<fmt>`` next to the CSV files; returns {"figure": filename} or {}."""
    plt = _pyplot()
    if plt is None:
        log.warning("matplotlib is not installed; skipping figures")
        return {}
    decays = {k: s for k, s in bundle.series.items() if k not in _GROWING}
    growing = {k: s for k, s in bundle.series.items() if k in _GROWING}
    ncols = 2 if growing else 1
    fig, axes = plt.subplots(1, ncols, figsize=(5.5 * ncols, 4.0), squeeze=False)
    ax = axes[0, 0]
    for name, s in decays.items():
        positive = s.values > 0
        line, = ax.semilogy(s.times[positive], s.values[positive], "o-", ms=3, lw=1, label=name)
        if s.fit is not None:
            t = np.linspace(*s.fit.window, 50)
            ax.semilogy(t, np.exp(-s.fit.rate * t - s.fit.offset), "--", color=line.get_color(), lw=1,
                        label=f"fit {s.fit.rate:.3g}")
    ax.set_xlabel("n" if bundle.kind == "glauber-populations" else "t")
    ax.set_ylabel("value")
    ax.legend(fontsize=7, frameon=False)
    if growing:
        ax2 = axes[0, 1]
        for name, s in growing.items():
            ax2.plot(s.times, s.values, "o-", ms=3, lw=1, label=name)
        ax2.set_xlabel("t")
        ax2.legend(fontsize=7, frameon=False)
    ax.set_title(bundle.kind, fontsize=9)
    fig.tight_layout()
    name = f"{bundle.kind}.{fmt}"
    fig.savefig(Path(out_dir) / name, dpi=120)
    plt.close(fig)
    return {"figure": name}
