"""The four figure kinds: histogram, Q-Q, variance growth, density curve."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .contract import KIND_SCHEMAS, check_kind, read_csv

PLOT_KINDS = tuple(KIND_SCHEMAS)
LOG_LAW_REFERENCE = 1.0 / math.pi ** 2


@dataclass
class RenderInfo:
    kind: str
    out_path: str
    n_rows: int
    annotations: list[str] = field(default_factory=list)


def render(csv_path, kind: str, out_path) -> RenderInfo:
    """Render one figure kind from a contract CSV to an image file."""
    if kind not in KIND_SCHEMAS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    meta, columns = read_csv(csv_path)
    check_kind(meta, kind, csv_path)
    fig, info = _FIGURES[kind](meta, columns)
    info.kind = kind
    info.out_path = str(out_path)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return info


def _normal_pdf(z):
    return np.exp(-z * z / 2.0) / math.sqrt(2.0 * math.pi)


def _histogram(meta, columns):
    z = columns["s_norm"]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(z, bins=max(10, int(np.sqrt(len(z)))), density=True,
            alpha=0.65, color="#4878d0", edgecolor="white",
            label="normalized statistic")
    grid = np.linspace(min(-4, z.min()), max(4, z.max()), 400)
    ax.plot(grid, _normal_pdf(grid), "k-", lw=1.5, label="standard normal")
    ax.set_xlabel("normalized statistic")
    ax.set_ylabel("density")
    ax.legend(frameon=False)
    ax.set_title(f"{len(z)} draws against N(0,1)")
    return fig, RenderInfo(kind="", out_path="", n_rows=len(z),
                           annotations=["N(0,1) overlay"])


def _qq(meta, columns):
    z = np.sort(columns["s_norm"])
    n = len(z)
    # plotting positions (i - 1/2) / n against the normal quantile function
    p = (np.arange(1, n + 1) - 0.5) / n
    theoretical = np.sqrt(2.0) * _erfinv_vec(2.0 * p - 1.0)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(theoretical, z, ".", ms=2.5, color="#4878d0")
    lims = [min(theoretical[0], z[0]), max(theoretical[-1], z[-1])]
    ax.plot(lims, lims, "k--", lw=1.0, label="y = x")
    ax.set_xlabel("normal quantiles")
    ax.set_ylabel("sample quantiles")
    ax.legend(frameon=False)
    ax.set_title("Q-Q against the standard normal")
    return fig, RenderInfo(kind="", out_path="", n_rows=n,
                           annotations=["y = x reference"])


def _erfinv_vec(y):
    # Winitzki's approximation is plenty for plotting positions
    a = 0.147
    sign = np.sign(y)
    ln_term = np.log(np.clip(1.0 - y * y, 1e-300, None))
    first = 2.0 / (math.pi * a) + ln_term / 2.0
    return sign * np.sqrt(np.sqrt(first ** 2 - ln_term / a) - first)


def _growth(meta, columns):
    L = columns["L"]
    var = columns["exact_var"]
    fitted = meta.get("fit_var_vs_logL_slope")
    power = meta.get("fit_logvar_vs_logL_slope")
    annotations = []
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.semilogx(L, var, "o-", color="#4878d0")
    ax1.set_xlabel("dilation L")
    ax1.set_ylabel("variance")
    ax1.set_title("variance vs log L")
    if fitted is not None:
        slope = float(fitted)
        mid = var.mean() - slope * np.log(L).mean()
        ax1.semilogx(L, slope * np.log(L) + mid, "r-", lw=1.2,
                     label=f"fitted slope {slope:.4f}")
        annotations.append(f"fitted slope {slope:.4f}")
    ref = slope_ref = LOG_LAW_REFERENCE
    mid_ref = var.mean() - slope_ref * np.log(L).mean()
    ax1.semilogx(L, slope_ref * np.log(L) + mid_ref, "g--", lw=1.2,
                 label=f"reference 1/pi^2 = {ref:.4f}")
    annotations.append(f"reference slope 1/pi^2 = {ref:.5f}")
    ax1.legend(frameon=False, fontsize=8)
    ax2.loglog(L, var, "o-", color="#4878d0")
    ax2.set_xlabel("dilation L")
    ax2.set_ylabel("variance")
    ax2.set_title("variance vs L (log-log)")
    if power is not None:
        annotations.append(f"growth exponent {float(power):.4f}")
        ax2.annotate(f"exponent {float(power):.4f}",
                     xy=(0.05, 0.9), xycoords="axes fraction", fontsize=9)
    return fig, RenderInfo(kind="", out_path="", n_rows=len(L),
                           annotations=annotations)


def _m_curve(meta, columns):
    lam = columns["lambda"]
    m = columns["m_value"]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(lam, m, "o", ms=4, color="#4878d0", label="density m")
    annotations = []
    alpha = meta.get("alpha_hat")
    if alpha is not None and "intercept" in meta:
        a = float(alpha)
        c = math.exp(float(meta["intercept"]))
        ax.loglog(lam, c * lam ** a, "r-", lw=1.2,
                  label=f"fit: {c:.3g} * lambda^{a:.3f}")
        annotations.append(f"alpha_hat {a:.4f}")
    ax.set_xlabel("shift lambda")
    ax.set_ylabel("m(lambda)")
    ax.legend(frameon=False)
    ax.set_title("variance spectral density near the origin")
    return fig, RenderInfo(kind="", out_path="", n_rows=len(lam),
                           annotations=annotations)


_FIGURES = {
    "histogram": _histogram,
    "qq": _qq,
    "growth": _growth,
    "m_curve": _m_curve,
}
