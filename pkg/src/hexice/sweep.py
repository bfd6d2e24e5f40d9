"""Temperature sweeps of the ice-sector steady state, CSV output and plot scripts."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import lattice
from .hamiltonian import ModelParams
from .measures import c_l1, c_rel_ent, concurrence, discord_optimization, eof_from_concurrence, geometric_discord
from .numerics import partial_trace, von_neumann_entropy
from .open_system import BathSpec, build_liouvillian, p_bf, steady_state_ice, _ice_block

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)

#: Plot annotations only; never model inputs.
T_XI_TO_IH = 58.9
T_IH_TO_XI = 73.4
T_GLASS = 105.0

PAIR_FIELDS = ("concurrence", "eof_bits", "discord_bits", "geo_discord", "mutual_info_bits", "classical_J_bits")
BASE_FIELDS = ("T_K", "P_BF", "S_bits", "C_l1", "C_rel_bits")
VALIDATION_DEPTHS = ("none", "quick", "full")


class ConfigError(ValueError):
    """Invalid sweep configuration (CLI exit status 1)."""


class SweepError(RuntimeError):
    """Numerical failure at one temperature (CLI exit status 2)."""

    def __init__(self, T: float, cause: BaseException):
        super().__init__(f"numerical failure at T = {T:g} K: {cause}")
        self.T = T


def temperature_grid(tmin: float, tmax: float, tstep: float) -> tuple[float, ...]:
    if not (tstep > 0 and tmax >= tmin):
        raise ConfigError(f"bad temperature range tmin={tmin}, tmax={tmax}, tstep={tstep}")
    n = int(math.floor((tmax - tmin) / tstep + 1e-9)) + 1
    return tuple(round(tmin + k * tstep, 10) for k in range(n))


DEFAULT_T_GRID = temperature_grid(2.0, 150.0, 1.0)


@dataclass(frozen=True)
class SweepConfig:
    params: ModelParams = field(default_factory=ModelParams)
    T_grid: tuple[float, ...] = DEFAULT_T_GRID
    pairs: tuple[tuple[int, int], ...] = ((1, 2), (2, 3))
    output_path: Path = Path("sweep_out")
    lamb_shift: bool = False
    validation: str = "none"
    workers: int = 1

    def validate(self) -> "SweepConfig":
        T = np.asarray(self.T_grid, dtype=float)
        if T.ndim != 1 or T.size == 0:
            raise ConfigError("temperature grid is empty")
        if not np.all(np.isfinite(T)) or np.any(T <= 0):
            raise ConfigError("temperatures must be finite and > 0")
        if np.any(np.diff(T) <= 0):
            raise ConfigError("temperature grid must be strictly increasing")
        if not self.pairs:
            raise ConfigError("at least one site pair is required")
        seen = set()
        for pair in self.pairs:
            if len(pair) != 2:
                raise ConfigError(f"bad pair {pair!r}")
            try:
                i, j = (lattice.check_site(k) for k in pair)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            if i == j:
                raise ConfigError(f"pair {pair} repeats a site")
            if (i, j) in seen:
                raise ConfigError(f"pair {pair} listed twice")
            seen.add((i, j))
        if self.validation not in VALIDATION_DEPTHS:
            raise ConfigError(f"validation must be one of {VALIDATION_DEPTHS}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return self


def parse_pairs(text: str | Sequence) -> tuple[tuple[int, int], ...]:
    """``"1:2,2:3"`` or ``[[1, 2], [2, 3]]`` -> ``((1, 2), (2, 3))``."""
    try:
        if isinstance(text, str):
            items = [p.split(":") for p in text.replace(" ", "").split(",") if p]
        else:
            items = list(text)
        return tuple((int(a), int(b)) for a, b in items)
    except (ValueError, TypeError):
        raise ConfigError(f"cannot parse site pairs from {text!r}") from None


_PARAM_KEYS = {"W", "J", "J_x", "V_inter", "V_intra", "J_z_intra", "lambda"}
_RUN_KEYS = {"tmin", "tmax", "tstep", "pairs", "out", "lamb_shift", "validation", "workers"}


def config_from_mapping(data: Mapping[str, Any], base: SweepConfig | None = None) -> SweepConfig:
    """Build a config from flat keys (config-file names) on top of ``base``."""
    base = base or SweepConfig()
    unknown = set(data) - _PARAM_KEYS - _RUN_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    if "J" in data and "J_x" in data:
        raise ConfigError("give either J or J_x, not both")
    if "V_intra" in data and "J_z_intra" in data:
        raise ConfigError("give either V_intra or J_z_intra, not both")
    p = base.params
    kw = dict(W=p.W, J=p.J, V_inter=p.V_inter, V_intra=p.V_intra, lam=p.lam)
    try:
        for key in ("W", "J", "V_inter", "V_intra"):
            if key in data:
                kw[key] = float(data[key])
        if "lambda" in data:
            kw["lam"] = float(data["lambda"])
        if "J_x" in data:
            kw["J"] = -2.0 * float(data["J_x"])
        if "J_z_intra" in data:
            kw["V_intra"] = 4.0 * float(data["J_z_intra"])
        params = ModelParams(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad model parameter: {exc}") from None

    T_grid = base.T_grid
    if {"tmin", "tmax", "tstep"} & set(data):
        try:
            tmin = float(data.get("tmin", base.T_grid[0]))
            tmax = float(data.get("tmax", base.T_grid[-1]))
            base_step = round(base.T_grid[1] - base.T_grid[0], 10) if len(base.T_grid) > 1 else 1.0
            tstep = float(data.get("tstep", base_step))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad temperature setting: {exc}") from None
        T_grid = temperature_grid(tmin, tmax, tstep)
    cfg = SweepConfig(
        params=params,
        T_grid=T_grid,
        pairs=parse_pairs(data["pairs"]) if "pairs" in data else base.pairs,
        output_path=Path(data["out"]) if "out" in data else base.output_path,
        lamb_shift=bool(data.get("lamb_shift", base.lamb_shift)),
        validation=str(data.get("validation", base.validation)),
        workers=int(data.get("workers", base.workers)),
    )
    return cfg.validate()


def load_config(path: str | Path) -> SweepConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid key-value text: {exc}") from None
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"config must be flat; found tables {nested}")
    return config_from_mapping(data)


@dataclass(frozen=True)
class PairMeasures:
    concurrence: float
    eof_bits: float
    discord_bits: float
    geo_discord: float
    mutual_info_bits: float
    classical_J_bits: float

    def values(self) -> tuple[float, ...]:
        return tuple(getattr(self, f) for f in PAIR_FIELDS)


@dataclass(frozen=True)
class SweepRecord:
    T: float
    P_BF: float
    S_bits: float
    C_l1: float
    C_rel_bits: float
    pairs: dict[tuple[int, int], PairMeasures]

    def __post_init__(self):
        values = (self.T, self.P_BF, self.S_bits, self.C_l1, self.C_rel_bits)
        values += tuple(v for pm in self.pairs.values() for v in pm.values())
        if not all(math.isfinite(v) for v in values):
            raise ArithmeticError("non-finite observable")
        if not -1e-9 <= self.P_BF <= 1 + 1e-9:
            raise ArithmeticError(f"P_BF = {self.P_BF} outside [0, 1]")
        if not -1e-9 <= self.S_bits <= 6 + 1e-9:
            raise ArithmeticError(f"entropy {self.S_bits} outside [0, 6] bits")


def pair_measures(rho2) -> PairMeasures:
    d = discord_optimization(rho2)
    C = concurrence(rho2)
    return PairMeasures(
        concurrence=C,
        eof_bits=eof_from_concurrence(C),
        discord_bits=d.discord,
        geo_discord=geometric_discord(rho2),
        mutual_info_bits=d.mutual_information,
        classical_J_bits=d.classical,
    )


def record_at(params: ModelParams, T: float, pairs: Iterable[tuple[int, int]],
              lamb_shift: bool = False) -> SweepRecord:
    try:
        rho = steady_state_ice(params, T)
        if lamb_shift:
            _check_fixed_point(params, T, rho)
        return SweepRecord(
            T=float(T),
            P_BF=p_bf(rho),
            S_bits=von_neumann_entropy(rho),
            C_l1=c_l1(rho),
            C_rel_bits=c_rel_ent(rho),
            pairs={tuple(p): pair_measures(partial_trace(rho, tuple(p))) for p in pairs},
        )
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        raise SweepError(T, exc) from exc


def _check_fixed_point(params: ModelParams, T: float, rho, tol: float = 1e-8) -> None:
    """Guard for ``--lamb-shift``: the steady state must stay stationary."""
    L = build_liouvillian(_ice_block(params), BathSpec(T=T), include_lamb_shift=True)
    res = float(np.abs(L.apply(rho)).max())
    log.debug("T = %g K: fixed-point residual with Lamb shift %.2e", T, res)
    if res > tol:
        raise ArithmeticError(f"steady state not stationary with Lamb shift (residual {res:.2e})")


def _record_task(args) -> SweepRecord:
    return record_at(*args)


def run_sweep(config: SweepConfig) -> list[SweepRecord]:
    """Evaluate every observable on the ice-sector steady state at each T."""
    config.validate()
    tasks = [(config.params, T, config.pairs, config.lamb_shift) for T in config.T_grid]
    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_record_task, tasks))
    else:
        records = [_record_task(t) for t in tasks]
    return sorted(records, key=lambda r: r.T)


def csv_header(pairs: Iterable[tuple[int, int]]) -> list[str]:
    cols = list(BASE_FIELDS)
    for i, j in pairs:
        cols += [f"{name}_s{i}_{j}" for name in PAIR_FIELDS]
    return cols


def _fmt(x: float) -> str:
    return f"{x + 0.0:.12g}"  # no "-0"


def csv_text(records: Sequence[SweepRecord]) -> str:
    if not records:
        raise ValueError("no records to write")
    pairs = list(records[0].pairs)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_header(pairs))
    for r in sorted(records, key=lambda r: r.T):
        if list(r.pairs) != pairs:
            raise ValueError("records disagree on the analysed site pairs")
        row = [r.T, r.P_BF, r.S_bits, r.C_l1, r.C_rel_bits]
        for p in pairs:
            row += list(r.pairs[p].values())
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def emit_csv(records: Sequence[SweepRecord], path: str | Path) -> Path:
    """Write records as UTF-8 CSV with LF line endings; nothing is created for
    an empty record list."""
    text = csv_text(records)
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


_PLOT_TEMPLATE = '''\
"""Four-panel plot of a temperature sweep.

Requires the sweep CSV {csv_name!r} next to this script (or pass another CSV
path as the first argument).  Writes {png_name!r}.
"""
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent
CSV_PATH = Path(sys.argv[1]) if len(sys.argv) > 1 else HERE / {csv_name!r}
PNG_PATH = CSV_PATH.with_suffix(".png")
MARKERS = [({t1}, "tab:blue", "XI -> Ih"), ({t2}, "tab:red", "Ih -> XI"), ({tg}, "black", "glass")]
PAIRS = {pairs!r}

if not CSV_PATH.exists():
    sys.exit(f"missing sweep CSV: {{CSV_PATH}} (run the sweep first)")

with open(CSV_PATH, newline="", encoding="utf-8") as fh:
    rows = list(csv.DictReader(fh))
col = {{name: [float(r[name]) for r in rows] for name in rows[0]}}
T = col["T_K"]

fig, axes = plt.subplots(2, 2, figsize=(11, 8), sharex=True)
ax = axes[0, 0]
ax.plot(T, col["P_BF"], "--", color="navy", label="P_BF")
ax.set_ylabel("P_BF")
ax2 = ax.twinx()
ax2.plot(T, col["S_bits"], "--", color="darkred", label="S [bits]")
ax2.set_ylabel("von Neumann entropy [bits]")
ax.set_title("ice-rule population and entropy")

ax = axes[0, 1]
ax.plot(T, col["C_l1"], label="C_l1")
ax.plot(T, col["C_rel_bits"], label="C_rel [bits]")
ax.set_title("coherence")

ax = axes[1, 0]
for i, j in PAIRS:
    ax.plot(T, col[f"classical_J_bits_s{{i}}_{{j}}"], "--", label=f"J ({{i}},{{j}})")
    ax.plot(T, col[f"mutual_info_bits_s{{i}}_{{j}}"], ":", label=f"I ({{i}},{{j}})")
ax.set_title("classical pairwise correlations [bits]")

ax = axes[1, 1]
for i, j in PAIRS:
    ax.plot(T, col[f"concurrence_s{{i}}_{{j}}"], "-.", label=f"C ({{i}},{{j}})")
    ax.plot(T, col[f"eof_bits_s{{i}}_{{j}}"], "--", label=f"EoF ({{i}},{{j}})")
    ax.plot(T, col[f"discord_bits_s{{i}}_{{j}}"], "-.", label=f"discord ({{i}},{{j}})")
    ax.plot(T, col[f"geo_discord_s{{i}}_{{j}}"], "--", label=f"geometric discord ({{i}},{{j}})")
ax.set_title("quantum pairwise correlations")

for ax in axes.flat:
    for t, color, _ in MARKERS:
        ax.axvline(t, color=color, lw=1)
    ax.legend(fontsize=7)
for ax in axes[1]:
    ax.set_xlabel("T [K]")
fig.tight_layout()
fig.savefig(PNG_PATH, dpi=150)
print(f"wrote {{PNG_PATH}}")
'''


def plot_script_text(records: Sequence[SweepRecord], csv_name: str = "sweep.csv") -> str:
    pairs = [tuple(p) for p in records[0].pairs] if records else []
    png_name = str(Path(csv_name).with_suffix(".png"))
    return _PLOT_TEMPLATE.format(csv_name=csv_name, png_name=png_name, pairs=pairs,
                                 t1=T_XI_TO_IH, t2=T_IH_TO_XI, tg=T_GLASS)


def emit_plot_script(records: Sequence[SweepRecord], path: str | Path, csv_name: str = "sweep.csv") -> Path:
    """Write a matplotlib script that renders the sweep CSV in four panels
    with the two transition temperatures and the glass band midpoint marked."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(plot_script_text(records, csv_name))
    return path


def with_overrides(config: SweepConfig, **changes) -> SweepConfig:
    return replace(config, **changes).validate()
