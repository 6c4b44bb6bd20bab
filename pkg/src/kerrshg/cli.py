"""Command-line front end.

Subcommands write CSV (``#`` comment header with the resolved
configuration, then a header row) and can optionally render a PNG next to
it or emit a standalone plotting script.

Exit codes: 0 success, 1 oracle disagreement, 2 invalid configuration,
3 I/O error.
"""

import argparse
import csv
import io
import math
import sys
from pathlib import Path

import numpy as np

from . import model, oracle, plotting, spectra
from .errors import ConfigTooCoarse, DomainError, UnstableSystem
from .materials import MaterialParams, estimate_lambda
from .spectra import Mode, to_db

EXIT_OK, EXIT_DISAGREE, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

#: literal reading of the scaled-SHG comparison: kappa' = kappa / 5
SCALED_SHG_KAPPA_SCALE = 0.2

SWEEP_HEADER = ["n", "omega_m", "s_minus", "s_plus", "s_minus_db", "s_plus_db",
                "eta_a", "eta_b", "stable"]


class ConfigError(Exception):
    pass


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text):
    return [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]


# name -> (type, default); None defaults mean "required by the subcommand"
OPTIONS = {
    "r": (float, None),
    "lambda_kerr": (float, 0.0),
    "mode": (str, "fundamental"),
    "n": (float, None),
    "n_min": (float, 0.0),
    "n_max": (float, None),
    "n_steps": (int, 101),
    "omega_min": (float, 0.0),
    "omega_max": (float, None),
    "omega_steps": (int, 101),
    "omega_grid": (_floats, None),
    "lambda_min": (float, 0.0),
    "lambda_max": (float, 1.0),
    "lambda_steps": (int, 101),
    "out": (str, None),
    "seed": (int, 42),
    "n_traj": (int, 2000),
    "segments": (int, 3),
    "db": (_bool, True),
    "kappa_scale": (float, 1.0),
    "emit_plot_script": (_bool, False),
    "plot": (_bool, False),
    "workers": (int, 1),
    "t_b": (float, None),
    "lambda_b": (float, None),
    "length": (float, None),
    "chi2": (float, None),
    "chi3": (_floats, None),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p):
    g = p.add_argument_group("common")
    g.add_argument("--config", metavar="FILE", help="key=value file; flags override it")
    g.add_argument("--r", type=float, help="loss ratio gamma_b/gamma_a")
    g.add_argument("--lambda-kerr", type=float, help="scaled Kerr strength")
    g.add_argument("--mode", choices=[m.value for m in Mode])
    g.add_argument("--n-min", type=float)
    g.add_argument("--n-max", type=float)
    g.add_argument("--n-steps", type=int)
    g.add_argument("--omega-min", type=float)
    g.add_argument("--omega-max", type=float)
    g.add_argument("--omega-steps", type=int)
    g.add_argument("--out", metavar="PATH")
    g.add_argument("--seed", type=int)
    g.add_argument("--db", dest="db", action="store_const", const=True,
                   help="report spectra in dB (default)")
    g.add_argument("--linear", dest="db", action="store_const", const=False,
                   help="report spectra in vacuum units")
    g.add_argument("--kappa-scale", type=float, nargs="?", const=SCALED_SHG_KAPPA_SCALE,
                   metavar="X",
                   help="evaluate the model at n*X and report it at n; bare flag "
                        f"uses {SCALED_SHG_KAPPA_SCALE} (kappa' = kappa/5)")
    g.add_argument("--emit-plot-script", action="store_const", const=True,
                   help="write <out>_plot.py that re-plots the CSV")
    g.add_argument("--plot", action="store_const", const=True,
                   help="render <out>.png with matplotlib")
    g.add_argument("--workers", type=int, help="process pool size for sweeps")


def build_parser():
    parser = _Parser(prog="kerrshg", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sweep", help="optimized squeezing and efficiencies versus n")
    _common(p)

    p = sub.add_parser("surface", help="S_- on an (n, omega) grid")
    _common(p)

    p = sub.add_parser("stability-map", help="max Re eigenvalue on a (Lambda, n) grid")
    _common(p)
    p.add_argument("--lambda-min", type=float)
    p.add_argument("--lambda-max", type=float)
    p.add_argument("--lambda-steps", type=int)

    p = sub.add_parser("material", help="Kerr strength from crystal constants")
    _common(p)
    p.add_argument("--t-b", type=float, help="mirror transmission of the harmonic")
    p.add_argument("--lambda-b", type=float, help="harmonic wavelength [m]")
    p.add_argument("--length", type=float, help="crystal length [m]")
    p.add_argument("--chi2", type=float, help="second-order susceptibility [m/V]")
    p.add_argument("--chi3", type=_floats, help="third-order susceptibility, comma list")

    p = sub.add_parser("oracle-check", help="Monte Carlo check of the analytic spectrum")
    _common(p)
    p.add_argument("--n", type=float, help="intracavity photon number")
    p.add_argument("--omega-grid", type=_floats, help="comma-separated probe frequencies")
    p.add_argument("--n-traj", type=int)
    p.add_argument("--segments", type=int, help="non-overlapping windows per trajectory")
    return parser


def read_config_file(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.lstrip("-").replace("-", "_")
            if key not in OPTIONS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


def resolve(args):
    """Merge built-in defaults < config file < command-line flags."""
    file_values = read_config_file(args.config) if args.config else {}
    cfg = {"command": args.command}
    for key, (typ, default) in OPTIONS.items():
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
        elif key in file_values:
            try:
                cfg[key] = typ(file_values[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from None
        else:
            cfg[key] = default
    return cfg


def _require(cfg, *keys):
    missing = [k for k in keys if cfg[k] is None]
    if missing:
        raise ConfigError("missing " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _grid(lo, hi, steps, name):
    if steps < 1 or not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
        raise ConfigError(f"invalid {name} grid [{lo}, {hi}] x {steps}")
    return np.linspace(lo, hi, steps)


def _check_params(cfg):
    _require(cfg, "r")
    if not cfg["r"] > 0:
        raise ConfigError(f"--r must be positive, got {cfg['r']}")
    if not cfg["lambda_kerr"] >= 0:
        raise ConfigError(f"--lambda-kerr must be non-negative, got {cfg['lambda_kerr']}")


def _n_grid(cfg):
    _require(cfg, "n_max")
    grid = _grid(cfg["n_min"], cfg["n_max"], cfg["n_steps"], "n")
    if grid[0] < 0:
        raise ConfigError("photon numbers must be non-negative")
    return grid


def _omega_grid(cfg):
    _require(cfg, "omega_max")
    return _grid(cfg["omega_min"], cfg["omega_max"], cfg["omega_steps"], "omega")


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    return repr(float(x))


def config_line(cfg):
    parts = []
    for key in sorted(cfg):
        value = cfg[key]
        if value is None:
            continue
        if isinstance(value, list):
            value = ",".join(repr(v) for v in value)
        parts.append(f"{key}={value}")
    return "# " + " ".join(parts)


def _write_csv(cfg, header, rows):
    buf = io.StringIO()
    buf.write(config_line(cfg) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) if not isinstance(x, str) else x for x in row])
    text = buf.getvalue()
    if cfg["out"] in (None, "-"):
        sys.stdout.write(text)
        return None
    path = Path(cfg["out"])
    path.write_text(text, encoding="utf-8")
    return path


def _report_extras(cfg, path, kind, render):
    if path is None:
        if cfg["plot"] or cfg["emit_plot_script"]:
            raise ConfigError("--plot and --emit-plot-script need --out")
        return
    png = path.with_suffix(".png")
    if cfg["plot"]:
        render(png)
    if cfg["emit_plot_script"]:
        script = path.with_name(path.stem + "_plot.py")
        script.write_text(plotting.plot_script(kind, path.resolve(), png.resolve()),
                          encoding="utf-8")


def cmd_sweep(cfg):
    _check_params(cfg)
    grid = _n_grid(cfg)
    scale = cfg["kappa_scale"]
    if not scale > 0:
        raise ConfigError("--kappa-scale must be positive")
    mode = Mode(cfg["mode"])
    rows = spectra.sweep(grid * scale, cfg["r"], cfg["lambda_kerr"], mode, workers=cfg["workers"])
    out = []
    for n, row in zip(grid, rows):
        db = (to_db(row.s_minus), to_db(row.s_plus)) if row.stable else (None, None)
        out.append([n, row.omega_m, row.s_minus, row.s_plus, db[0], db[1],
                    row.eta_a, row.eta_b, row.stable])
    path = _write_csv(cfg, SWEEP_HEADER, out)
    records = [dict(zip(SWEEP_HEADER, r)) for r in out]
    _report_extras(cfg, path, "sweep",
                   lambda png: plotting.plot_sweep(records, png, db=cfg["db"]))
    return EXIT_OK


def cmd_surface(cfg):
    _check_params(cfg)
    n_grid = _n_grid(cfg)
    w_grid = _omega_grid(cfg)
    values = spectra.surface(n_grid, w_grid, cfg["r"], cfg["lambda_kerr"], Mode(cfg["mode"]))
    if cfg["db"]:
        values = to_db(values)
    key = "s_minus_db" if cfg["db"] else "s_minus"
    rows = []
    for i, n in enumerate(n_grid):
        for j, w in enumerate(w_grid):
            v = values[i, j]
            rows.append([n, w, None if np.isnan(v) else v])
    path = _write_csv(cfg, ["n", "omega", key], rows)
    _report_extras(cfg, path, "surface",
                   lambda png: plotting.plot_surface(n_grid, w_grid, values, png, db=cfg["db"]))
    return EXIT_OK


def stability_map(lambda_grid, n_grid, r):
    """``max Re k`` on the grid, shape ``(len(lambda_grid), len(n_grid))``."""
    return np.array([[model.max_growth_rate(float(n), r, float(lam)) for n in n_grid]
                     for lam in lambda_grid])


def cmd_stability_map(cfg):
    _require(cfg, "r")
    if not cfg["r"] > 0:
        raise ConfigError(f"--r must be positive, got {cfg['r']}")
    n_grid = _n_grid(cfg)
    lam_grid = _grid(cfg["lambda_min"], cfg["lambda_max"], cfg["lambda_steps"], "lambda")
    if lam_grid[0] < 0:
        raise ConfigError("Kerr strengths must be non-negative")
    growth = stability_map(lam_grid, n_grid, cfg["r"])
    rows = []
    for i, lam in enumerate(lam_grid):
        for j, n in enumerate(n_grid):
            g = growth[i, j]
            rows.append([lam, n, g, g < -model.STABILITY_EPS])
    path = _write_csv(cfg, ["lambda_kerr", "n", "max_re", "stable"], rows)
    _report_extras(cfg, path, "stability-map",
                   lambda png: plotting.plot_stability_map(lam_grid, n_grid, growth, png, r=cfg["r"]))
    return EXIT_OK


def cmd_material(cfg):
    _require(cfg, "t_b", "lambda_b", "length", "chi2", "chi3")
    rows = []
    try:
        for chi3 in cfg["chi3"]:
            m = MaterialParams(cfg["t_b"], cfg["lambda_b"], cfg["length"], cfg["chi2"], chi3)
            lam = estimate_lambda(m)
            rows.append([m.t_b, m.lambda_b, m.length, m.chi2, m.chi3, lam,
                         3.0 * lam**2 >= 1.0])
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    header = ["t_b", "lambda_b", "length", "chi2", "chi3", "lambda_kerr", "always_stable"]
    _write_csv(cfg, header, rows)
    return EXIT_OK


def cmd_oracle_check(cfg):
    _check_params(cfg)
    _require(cfg, "n")
    if not cfg["n"] >= 0:
        raise ConfigError("--n must be non-negative")
    if cfg["n_traj"] < 2 or cfg["segments"] < 1:
        raise ConfigError("--n-traj must be >= 2 and --segments >= 1")
    r, lam, n = cfg["r"], cfg["lambda_kerr"], cfg["n"]
    fp = model.fixed_point(n, r, lam)
    sys_ = spectra.linearize(fp, r, lam)
    if cfg["omega_grid"]:
        omegas = cfg["omega_grid"]
    elif cfg["omega_max"] is not None:
        omegas = list(_omega_grid(cfg))
    else:
        hi = max(2.0, lam * n)
        omegas = list(np.linspace(0.0, hi, 5))
    try:
        ocfg = oracle.OracleConfig.auto(sys_, omegas, n_traj=cfg["n_traj"],
                                        segments_per_traj=cfg["segments"], seed=cfg["seed"])
        est = oracle.simulate_linear_ou(sys_, ocfg)
    except (UnstableSystem, ConfigTooCoarse) as exc:
        raise ConfigError(f"{type(exc).__name__}: {exc}") from None
    F = spectra.spectrum_matrix(sys_, est.omega)
    z = oracle.agreement_zscores(est, F)
    rows = [[w, zk, abs(zk) < 3.0] for w, zk in zip(est.omega, z)]
    cfg = dict(cfg, windows=est.n_windows, dt=ocfg.dt, segment_length=ocfg.segment_length)
    _write_csv(cfg, ["omega", "z", "pass"], rows)
    ok = all(abs(zk) < 3.0 for zk in z)
    print(f"# oracle-check: {'PASS' if ok else 'FAIL'} max|z|={np.max(np.abs(z)):.3f} "
          f"over {len(z)} frequencies, {est.n_windows} windows", file=sys.stderr)
    return EXIT_OK if ok else EXIT_DISAGREE


COMMANDS = {
    "sweep": cmd_sweep,
    "surface": cmd_surface,
    "stability-map": cmd_stability_map,
    "material": cmd_material,
    "oracle-check": cmd_oracle_check,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        if cfg["mode"] not in [m.value for m in Mode]:
            raise ConfigError(f"unknown mode {cfg['mode']!r}")
        return COMMANDS[args.command](cfg)
    except (ConfigError, DomainError, UnstableSystem) as exc:
        print(f"kerrshg: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"kerrshg: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
