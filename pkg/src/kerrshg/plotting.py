"""Figure rendering for the CLI report path.

Everything here draws on a bare :class:`matplotlib.figure.Figure`, so no
pyplot state or interactive backend is involved.
"""

import math

import numpy as np
from matplotlib.figure import Figure

FIGSIZE = (6.4, 4.2)


def _new_axes(nrows=1):
    fig = Figure(figsize=(FIGSIZE[0], FIGSIZE[1] * (1 + 0.6 * (nrows - 1))))
    axes = fig.subplots(nrows, 1, sharex=True, squeeze=False)[:, 0]
    return fig, axes


def _column(rows, key):
    return np.array([np.nan if row[key] is None else row[key] for row in rows], dtype=float)


def plot_sweep(rows, path, db=True, title=None):
    """Maximum squeezing, conjugate noise and efficiency versus photon number.

    ``rows`` are mappings with the keys of the sweep CSV.
    """
    n = _column(rows, "n")
    s_minus = _column(rows, "s_minus")
    s_plus = _column(rows, "s_plus")
    fig, (ax, ax_eta) = _new_axes(2)
    if db:
        ax.plot(n, 10 * np.log10(s_minus), label="squeezed")
        ax.plot(n, 10 * np.log10(s_plus), "--", label="conjugate")
        ax.set_ylabel("noise [dB rel. vacuum]")
        ax.axhline(0.0, color="0.6", lw=0.8)
    else:
        ax.plot(n, s_minus, label="squeezed")
        ax.set_ylabel("noise [vacuum units]")
    ax.legend(frameon=False)
    ax_eta.plot(n, _column(rows, "eta_a"), label=r"$\eta_a$")
    ax_eta.plot(n, _column(rows, "eta_b"), ":", label=r"$\eta_b$")
    ax_eta.set_ylim(0, 1)
    ax_eta.set_xlabel("intracavity photon number $n$")
    ax_eta.set_ylabel("efficiency")
    ax_eta.legend(frameon=False)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    return path


def plot_surface(n_grid, omega_grid, values, path, db=False, title=None):
    fig, (ax,) = _new_axes()
    z = np.asarray(values, dtype=float)
    mesh = ax.pcolormesh(np.asarray(omega_grid), np.asarray(n_grid), z, shading="auto",
                         cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="$S_-$ [dB]" if db else "$S_-$")
    ax.set_xlabel(r"frequency $\Omega/\gamma_a$")
    ax.set_ylabel("photon number $n$")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    return path


def plot_stability_map(lambda_grid, n_grid, max_re, path, r=None):
    """Sign map of the largest eigenvalue real part with the Hopf curve."""
    fig, (ax,) = _new_axes()
    lam = np.asarray(lambda_grid, dtype=float)
    z = np.sign(np.asarray(max_re, dtype=float))
    ax.pcolormesh(lam, np.asarray(n_grid), z.T, shading="auto", cmap="coolwarm", vmin=-1, vmax=1)
    if r is not None:
        s = 1 - 3 * lam**2
        with np.errstate(divide="ignore", invalid="ignore"):
            nc = np.where(s > 0, (r + 1) / np.sqrt(np.where(s > 0, s, 1.0)), np.nan)
        ax.plot(lam, nc, "k-", lw=1.2, label="$n_c$")
        ax.axvline(1 / math.sqrt(3), color="k", ls=":", lw=0.8)
        ax.set_ylim(min(n_grid), max(n_grid))
        ax.legend(frameon=False, loc="upper left")
    ax.set_xlabel(r"Kerr strength $\Lambda$")
    ax.set_ylabel("photon number $n$")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    return path


_SCRIPT_HEAD = '''"""Plot {csv_name}; generated alongside it."""
import csv
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

CSV = {csv_path!r}
OUT = sys.argv[1] if len(sys.argv) > 1 else {png_path!r}


def conv(x):
    if x == "":
        return np.nan
    if x in ("true", "false"):
        return float(x == "true")
    return float(x)


def load():
    with open(CSV, newline="", encoding="utf-8") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    rows = list(csv.DictReader(lines))
    return {{k: np.array([conv(r[k]) for r in rows]) for k in rows[0]}}


d = load()
'''

_SCRIPT_BODY = {
    "sweep": '''fig, (ax, ax2) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 6.7))
ax.plot(d["n"], d["s_minus_db"], label="squeezed")
ax.plot(d["n"], d["s_plus_db"], "--", label="conjugate")
ax.set_ylabel("noise [dB]")
ax.legend()
ax2.plot(d["n"], d["eta_a"], label="eta_a")
ax2.plot(d["n"], d["eta_b"], ":", label="eta_b")
ax2.set_xlabel("n")
ax2.legend()
''',
    "surface": '''key = "s_minus_db" if "s_minus_db" in d else "s_minus"
n = np.unique(d["n"])
w = np.unique(d["omega"])
z = d[key].reshape(n.size, w.size)
fig, ax = plt.subplots(figsize=(6.4, 4.2))
m = ax.pcolormesh(w, n, z, shading="auto")
fig.colorbar(m, ax=ax, label=key)
ax.set_xlabel("omega")
ax.set_ylabel("n")
''',
    "stability-map": '''lam = np.unique(d["lambda_kerr"])
n = np.unique(d["n"])
z = np.sign(d["max_re"]).reshape(lam.size, n.size)
fig, ax = plt.subplots(figsize=(6.4, 4.2))
ax.pcolormesh(lam, n, z.T, shading="auto", cmap="coolwarm", vmin=-1, vmax=1)
ax.set_xlabel("Lambda")
ax.set_ylabel("n")
''',
}


def plot_script(kind, csv_path, png_path):
    """Source of a standalone script that re-plots ``csv_path``."""
    head = _SCRIPT_HEAD.format(csv_name=str(csv_path).rsplit("/", 1)[-1],
                               csv_path=str(csv_path), png_path=str(png_path))
    return head + _SCRIPT_BODY[kind] + "fig.tight_layout()\nfig.savefig(OUT, dpi=150)\n"
