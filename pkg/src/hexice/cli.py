"""``hexice`` command line: ``sweep``, ``measures`` and ``validate``.

Exit status: 0 success, 1 usage or configuration error, 2 numerical failure,
3 validation failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import lattice
from .measures import bloch_decomposition
from .numerics import partial_trace, purity
from .open_system import _ice_block, steady_state_ice
from .sweep import (ConfigError, SweepConfig, SweepError, config_from_mapping, emit_csv, emit_plot_script,
                    load_config, record_at, run_sweep)
from .validation import validate

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_VALIDATION = 0, 1, 2, 3
CSV_NAME = "sweep.csv"
PLOT_NAME = "plot_sweep.py"

log = logging.getLogger("hexice")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _model_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model (meV; override the config file)")
    g.add_argument("--config", type=Path, help="flat key-value (TOML) configuration file")
    g.add_argument("--J-x", dest="J_x", type=float)
    g.add_argument("--J-z-intra", dest="J_z_intra", type=float)
    g.add_argument("--W", type=float)
    g.add_argument("--V-inter", dest="V_inter", type=float)
    g.add_argument("--lambda", dest="lambda", type=float)
    g.add_argument("--pairs", help="site pairs as i:j,k:l (default 1:2,2:3)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hexice", description="Proton tunneling in a hexagonal water ring.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sweep", help="temperature sweep of the ice-sector steady state")
    _model_options(p)
    p.add_argument("--tmin", type=float)
    p.add_argument("--tmax", type=float)
    p.add_argument("--tstep", type=float)
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--lamb-shift", dest="lamb_shift", action="store_true", default=None,
                   help="check the steady state against the Lamb-shifted generator")
    p.add_argument("--validation", choices=("none", "quick", "full"),
                   help="run the validation suite first")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("measures", help="all diagnostics at one temperature")
    _model_options(p)
    p.add_argument("--T", type=float, required=True, help="temperature in K")
    p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("validate", help="run the self-check suite")
    p.add_argument("--depth", choices=("quick", "full"), default="quick")
    return parser


_OVERRIDES = ("J_x", "J_z_intra", "W", "V_inter", "lambda", "pairs", "tmin", "tmax", "tstep", "out",
              "lamb_shift", "validation", "workers")


def config_from_args(args: argparse.Namespace) -> SweepConfig:
    base = load_config(args.config) if args.config else SweepConfig()
    overrides = {k: getattr(args, k) for k in _OVERRIDES if getattr(args, k, None) is not None}
    return config_from_mapping(overrides, base) if overrides else base.validate()


def _cmd_sweep(args) -> int:
    cfg = config_from_args(args)
    if cfg.validation != "none":
        report = validate(cfg.validation, cfg.params)
        print(report.text())
        if not report.passed:
            return EXIT_VALIDATION
    t0 = time.perf_counter()
    records = run_sweep(cfg)
    log.info("swept %d temperatures in %.2f s", len(records), time.perf_counter() - t0)
    out = cfg.output_path
    out.mkdir(parents=True, exist_ok=True)
    csv_path = emit_csv(records, out / CSV_NAME)
    plot_path = emit_plot_script(records, out / PLOT_NAME, CSV_NAME)
    print(f"wrote {csv_path} ({len(records)} rows) and {plot_path}")
    return EXIT_OK


def _dump(cfg: SweepConfig, T: float) -> dict:
    rec = record_at(cfg.params, T, cfg.pairs, cfg.lamb_shift)
    rho = steady_state_ice(cfg.params, T)
    evals = _ice_block(cfg.params).eigenvalues
    order = np.argsort(rho.weights)[::-1][:8]
    pops = np.real(np.diag(rho.matrix))
    top = np.argsort(pops)[::-1][:8]
    p = cfg.params
    out = {
        "T_K": T,
        "params_meV": {"W": p.W, "J": p.J, "V_inter": p.V_inter, "V_intra": p.V_intra, "lambda": p.lam,
                       "J_x": p.J_x, "J_z_inter": p.J_z_inter, "J_z_intra": p.J_z_intra,
                       "B": p.B, "lambda_tilde": p.lambda_tilde},
        "P_BF": rec.P_BF,
        "S_bits": rec.S_bits,
        "C_l1": rec.C_l1,
        "C_rel_bits": rec.C_rel_bits,
        "purity": purity(rho),
        "trace": float(np.trace(rho.matrix).real),
        "leading_eigenstates": [{"energy_meV": float(evals[k]), "weight": float(rho.weights[k])} for k in order],
        "leading_configurations": [{"ket": lattice.ket(rho.basis[k]), "class": str(lattice.classify(rho.basis[k])),
                                    "population": float(pops[k])} for k in top],
        "pairs": {},
    }
    for (i, j), pm in rec.pairs.items():
        red = partial_trace(rho, (i, j))
        b = bloch_decomposition(red)
        entry = {f: getattr(pm, f) for f in ("concurrence", "eof_bits", "discord_bits", "geo_discord",
                                              "mutual_info_bits", "classical_J_bits")}
        entry["reduced_state_real"] = np.round(red.matrix.real, 12).tolist()
        entry["reduced_state_imag"] = np.round(red.matrix.imag, 12).tolist()
        entry["bloch_first"] = b.y.tolist()
        entry["bloch_second"] = b.x.tolist()
        entry["correlation_matrix"] = b.T.tolist()
        out["pairs"][f"{i}:{j}"] = entry
    return out


def _print_dump(d: dict) -> None:
    print(f"T = {d['T_K']:g} K")
    print("couplings (meV): " + ", ".join(f"{k}={v:g}" for k, v in d["params_meV"].items()))
    for k in ("P_BF", "S_bits", "C_l1", "C_rel_bits", "purity", "trace"):
        print(f"  {k:<12} {d[k]:.12g}")
    print("leading eigenstates (energy meV, weight):")
    for e in d["leading_eigenstates"]:
        print(f"  {e['energy_meV']:14.6f}  {e['weight']:.6e}")
    print("leading configurations (site 1 first):")
    for c in d["leading_configurations"]:
        print(f"  {c['ket']}  {c['class']:<8}  {c['population']:.6e}")
    for pair, e in d["pairs"].items():
        i, j = pair.split(":")
        print(f"pair ({i},{j}); discord-type quantities measure site {j}:")
        for k in ("concurrence", "eof_bits", "discord_bits", "geo_discord", "mutual_info_bits", "classical_J_bits"):
            print(f"  {k:<18} {e[k]:.12g}")
        print("  reduced state (real part, basis 00 01 10 11):")
        for row in e["reduced_state_real"]:
            print("    " + "  ".join(f"{v: .6e}" for v in row))


def _cmd_measures(args) -> int:
    if not np.isfinite(args.T) or args.T <= 0:
        raise ConfigError(f"--T must be a positive temperature, got {args.T}")
    cfg = config_from_args(args)
    d = _dump(cfg, args.T)
    if args.json:
        print(json.dumps(d, indent=2))
    else:
        _print_dump(d)
    return EXIT_OK


def _cmd_validate(args) -> int:
    report = validate(args.depth)
    print(report.text())
    return EXIT_OK if report.passed else EXIT_VALIDATION


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"sweep": _cmd_sweep, "measures": _cmd_measures, "validate": _cmd_validate}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"hexice: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SweepError as exc:
        print(f"hexice: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"hexice: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"hexice: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
