"""SVG charts of impulse-response bands, one file per variable role."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .config import COUNTRIES  # noqa: E402
from .irf import QuantileBand  # noqa: E402

COUNTRY_NAMES = {
    "at": "Austria", "be": "Belgium", "de": "Germany", "gr": "Greece",
    "it": "Italy", "pt": "Portugal", "es": "Spain",
}


def default_layout(ids, countries=COUNTRIES) -> dict[str, list[tuple[str, str]]]:
    """Group ids into roles by stripping a country token.

    ``loan_supply_at_inv`` -> role ``loan_supply_inv``, panel ``at``.
    Ids without a country token form single-panel roles.
    """
    countries = {c.lower() for c in countries}
    layout: dict[str, list[tuple[str, str]]] = {}
    for sid in ids:
        tokens = sid.split("_")
        hit = [i for i, tok in enumerate(tokens) if tok.lower() in countries]
        if hit and len(tokens) > 1:
            i = hit[-1]
            role = "_".join(tokens[:i] + tokens[i + 1 :])
            label = tokens[i].lower()
        else:
            role, label = sid, sid
        layout.setdefault(role, []).append((label, sid))
    return layout


def _configure():
    plt.rcParams.update({
        "svg.hashsalt": "ngbvar",
        "svg.fonttype": "path",
        "font.size": 8,
        "axes.titlesize": 9,
    })


def emit_plots(bands: QuantileBand, out_dir: str | Path, layout=None, countries=COUNTRIES,
               variant_medians=None) -> list[Path]:
    """Median line over a shaded 16-84 band; one SVG per role, one panel per country.

    ``variant_medians`` optionally maps a label to ``{variable: path}`` drawn
    as extra lines on top of the band.
    """
    if bands.values.size == 0 or not bands.ordering:
        raise ValueError("no bands to plot")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    layout = layout or default_layout(bands.ordering, countries)
    lo, mid, hi = bands[0.16], bands.median, bands[0.84]
    horizons = np.arange(bands.values.shape[1])
    _configure()
    written = []
    for role, panels in layout.items():
        n = len(panels)
        ncols = min(n, 4)
        nrows = math.ceil(n / ncols)
        fig, axes = plt.subplots(nrows, ncols, figsize=(3.0 * ncols, 2.4 * nrows), squeeze=False)
        for ax in axes.ravel()[n:]:
            ax.set_visible(False)
        for ax, (label, sid) in zip(axes.ravel(), panels):
            j = bands.ordering.index(sid)
            ax.fill_between(horizons, lo[:, j], hi[:, j], color="0.8", linewidth=0)
            ax.plot(horizons, mid[:, j], color="tab:blue", linewidth=1.4)
            for vlabel, paths in (variant_medians or {}).items():
                if sid in paths:
                    ax.plot(horizons[: len(paths[sid])], paths[sid], linewidth=0.9,
                            linestyle="--", label=vlabel)
            ax.axhline(0.0, color="black", linewidth=0.6)
            ax.set_title(COUNTRY_NAMES.get(label, label))
            ax.set_xlabel("months")
            ax.set_xlim(0, horizons[-1])
        if variant_medians:
            axes.ravel()[0].legend(fontsize=6, frameon=False)
        fig.suptitle(role)
        fig.tight_layout()
        path = out_dir / f"{role}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written
