"""Matplotlib rendering of sweep reports.

Figures are written as self-contained SVG (glyphs converted to paths, no
font references) with a fixed hash salt and no creation date, so reruns of
the same configuration reproduce the file byte for byte.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_rate_figure", "save_rate_figure"]

_SVG_RC = {
    "svg.fonttype": "path",
    "svg.hashsalt": "necklab",
    "figure.figsize": (5.0, 3.6),
    "font.size": 9,
}


def render_rate_figure(report):
    """Log-log scatter of the gradient maximum against eps with the fitted
    and predicted power laws drawn as straight segments."""
    eps = np.array([r.epsilon for r in report.rows])
    mg = np.array([r.max_grad for r in report.rows])
    fig, ax = plt.subplots()
    ax.loglog(eps, mg, "o", color="k", label="measured max |grad u|")
    span = np.array([eps.max(), eps.min()])
    fit = report.fit
    ax.loglog(span, np.exp(fit.intercept) * span**fit.slope, "-",
              color="tab:blue", label=f"fit: slope {fit.slope:.4f}")
    anchor = mg[0] / eps[0] ** report.theory_exponent
    ax.loglog(span, anchor * span**report.theory_exponent, "--",
              color="tab:red",
              label=f"theory: slope {report.theory_exponent:.4f}")
    ax.set_xlabel("gap eps")
    ax.set_ylabel("max gradient")
    ax.legend(frameon=False)
    fig.tight_layout()
    return fig


def save_rate_figure(report, path):
    with plt.rc_context(_SVG_RC):
        fig = render_rate_figure(report)
        try:
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
