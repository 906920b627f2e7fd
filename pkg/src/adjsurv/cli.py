"""``adjsurv`` command-line interface.

Subcommands: ``estimate``, ``diff``, ``quantile``, ``rmst`` and ``simulate``.
Every run writes a CSV (to ``--out-csv`` or stdout) and, for file output, a
JSON sidecar holding the fully materialized configuration. Errors go to
stderr as ``{"category", "message", "context"}`` JSON.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Any, Optional, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import __version__
from .adjust import MethodSpec, adjustedsurv
from .data import ColumnBindings, SurvDataset, is_missing, validate_dataset
from .effects import EffectEstimate, curve_diff, rmst, surv_quantile
from .errors import AdjSurvError, ConfigurationError, ParseError, UsageError
from .plotting import render_diff_svg, render_svg
from .simoracle import DGPSpec, simulate_arrays

# built-in defaults; config file values sit between these and explicit flags
DEFAULTS: dict[str, Any] = {
    "time_col": "time", "event_col": "event", "treatment_col": "treatment",
    "covariates": None, "method": "km", "ps_formula": None, "outcome_formula": None,
    "strata": None, "times": None, "conf_int": False, "conf_level": 0.95,
    "bootstrap": False, "n_boot": 500, "seed": None, "workers": 1, "force_bounds": False,
    "iso_reg": False, "ci_transform": "plain", "boot_ci": "percentile", "stabilize": None,
    "trim_quantile": None, "gee_link": "identity", "treated_level": None, "caliper": None,
    "out_csv": None, "out_json": None, "out_svg": None, "svg_ci": False, "svg_cif": False,
    "svg_censor_ticks": False, "svg_median_lines": False, "group_a": None, "group_b": None,
    "p": 0.5, "tau": None,
}
DGP_KEYS = ("n", "baseline_hazard", "treatment_effect", "confounder_effect", "a0", "a1",
            "censor_rate")


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs) -> None:
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message: str):
        raise UsageError(message)


def _csv_list(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def _float_list(text: str) -> list[float]:
    try:
        return [float(s) for s in _csv_list(text)]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("input", help="input CSV with a header row")
    p.add_argument("--config", default=S, help="TOML file with default settings")
    g = p.add_argument_group("columns")
    g.add_argument("--time-col", default=S)
    g.add_argument("--event-col", default=S)
    g.add_argument("--treatment-col", default=S)
    g.add_argument("--covariates", type=_csv_list, default=S,
                   help="comma-separated covariate columns (default: all others)")
    g = p.add_argument_group("method")
    g.add_argument("--method", default=S)
    g.add_argument("--ps-formula", default=S, help="treatment model, e.g. 'x + age'")
    g.add_argument("--outcome-formula", default=S)
    g.add_argument("--strata", type=_csv_list, default=S)
    g.add_argument("--stabilize", action=argparse.BooleanOptionalAction, default=S)
    g.add_argument("--trim-quantile", type=float, default=S)
    g.add_argument("--gee-link", choices=("identity", "cloglog"), default=S)
    g.add_argument("--treated-level", default=S)
    g.add_argument("--caliper", type=float, default=S)
    g.add_argument("--times", type=_float_list, default=S)
    g = p.add_argument_group("inference")
    g.add_argument("--conf-int", action=argparse.BooleanOptionalAction, default=S)
    g.add_argument("--conf-level", type=float, default=S)
    g.add_argument("--ci-transform", choices=("plain", "loglog"), default=S)
    g.add_argument("--bootstrap", action=argparse.BooleanOptionalAction, default=S)
    g.add_argument("--n-boot", type=int, default=S)
    g.add_argument("--boot-ci", choices=("percentile", "normal"), default=S)
    g.add_argument("--seed", type=int, default=S)
    g.add_argument("--workers", type=int, default=S)
    g.add_argument("--force-bounds", action=argparse.BooleanOptionalAction, default=S)
    g.add_argument("--iso-reg", action=argparse.BooleanOptionalAction, default=S)
    g = p.add_argument_group("output")
    g.add_argument("--out-csv", default=S)
    g.add_argument("--out-json", default=S)


def _add_svg(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--out-svg", default=S)
    p.add_argument("--svg-ci", action=argparse.BooleanOptionalAction, default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="adjsurv", description="Confounder-adjusted survival curves.")
    parser.add_argument("--version", action="version", version=f"adjsurv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="estimate adjusted survival curves")
    _add_common(p)
    _add_svg(p)
    S = argparse.SUPPRESS
    p.add_argument("--svg-cif", action=argparse.BooleanOptionalAction, default=S)
    p.add_argument("--svg-censor-ticks", action=argparse.BooleanOptionalAction, default=S)
    p.add_argument("--svg-median-lines", action=argparse.BooleanOptionalAction, default=S)

    p = sub.add_parser("diff", help="difference between two adjusted curves")
    _add_common(p)
    _add_svg(p)
    p.add_argument("--group-a", default=S)
    p.add_argument("--group-b", default=S)

    p = sub.add_parser("quantile", help="adjusted survival-time quantiles")
    _add_common(p)
    p.add_argument("--p", type=float, default=S)

    p = sub.add_parser("rmst", help="restricted mean survival time")
    _add_common(p)
    p.add_argument("--tau", type=float, default=S)

    p = sub.add_parser("simulate", help="simulate a confounded dataset")
    p.add_argument("--config", default=S)
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--baseline-hazard", type=float, default=S)
    p.add_argument("--treatment-effect", type=float, default=S)
    p.add_argument("--confounder-effect", type=float, default=S)
    p.add_argument("--a0", type=float, default=S)
    p.add_argument("--a1", type=float, default=S)
    p.add_argument("--censor-rate", type=float, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--out-csv", default=S)
    p.add_argument("--out-json", default=S)
    return parser


def load_config(path: str) -> dict:
    """Read a flat TOML table; keys use flag names with ``_`` or ``-``."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path!r}: {exc.strerror}", path=path) from None
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"invalid TOML in {path!r}: {exc}", path=path) from None
    return {k.replace("-", "_"): v for k, v in raw.items()}


def resolve(args: argparse.Namespace) -> dict:
    """Merge built-in defaults, the config file and explicit flags."""
    flags = vars(args).copy()
    command = flags.pop("command")
    config = load_config(flags.pop("config")) if "config" in flags else {}
    if command == "simulate":
        base = {**DGPSpec().to_dict(), "seed": None, "out_csv": None, "out_json": None}
    else:
        base = dict(DEFAULTS)
    unknown = sorted(set(config) - set(base))
    if unknown:
        raise ConfigurationError(f"unknown config keys {unknown}", keys=unknown)
    cfg = {**base, **config, **flags}
    cfg["command"] = command
    return cfg


def read_csv(path: str, bindings: Optional[ColumnBindings] = None) -> SurvDataset:
    """Parse a headed CSV file and validate it.

    Columns whose non-missing cells all parse as numbers become floats;
    anything else is kept as text.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path!r}: {exc.strerror}", path=path) from None
    except UnicodeDecodeError:
        raise ParseError(f"{path!r} is not UTF-8", path=path) from None
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(f"{path!r} is empty", path=path) from None
    except csv.Error as exc:
        raise ParseError(f"malformed header: {exc}", path=path, line=1) from None
    header = [h.strip() for h in header]
    if len(set(header)) != len(header):
        raise ParseError("duplicate column names in header", path=path, line=1)
    rows: list[list[str]] = []
    try:
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"line {reader.line_num}: expected {len(header)} fields, "
                                 f"got {len(row)}", path=path, line=reader.line_num)
            rows.append(row)
    except csv.Error as exc:
        raise ParseError(f"line {reader.line_num}: {exc}", path=path,
                         line=reader.line_num) from None

    columns: dict[str, list] = {}
    for j, name in enumerate(header):
        cells = [r[j].strip() for r in rows]
        present = [c for c in cells if not is_missing(c)]
        try:
            [float(c) for c in present]
            columns[name] = [math.nan if is_missing(c) else float(c) for c in cells]
        except ValueError:
            columns[name] = [None if is_missing(c) else c for c in cells]
    return validate_dataset(columns, bindings)


def _fmt(v) -> str:
    if v is None:
        return ""
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def _write_csv(path: Optional[str], header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if path is None:
        sys.stdout.write(buf.getvalue())
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(buf.getvalue())


def _write_json(path: Optional[str], payload: dict) -> None:
    if path is None:
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n")


def _sidecar(cfg: dict) -> Optional[str]:
    if cfg.get("out_json"):
        return cfg["out_json"]
    if cfg.get("out_csv"):
        return os.path.splitext(cfg["out_csv"])[0] + ".json"
    return None


def _spec(cfg: dict) -> MethodSpec:
    options = {"gee_link": cfg["gee_link"]}
    for key in ("stabilize", "trim_quantile", "treated_level", "caliper"):
        if cfg[key] is not None:
            options[key] = cfg[key]
    strata = cfg["strata"]
    if isinstance(strata, str):
        strata = _csv_list(strata)
    return MethodSpec(cfg["method"], cfg["ps_formula"], cfg["outcome_formula"],
                      tuple(strata) if strata else None, options)


def _estimate(cfg: dict):
    covs = cfg["covariates"]
    if isinstance(covs, str):
        covs = _csv_list(covs)
    bindings = ColumnBindings(cfg["time_col"], cfg["event_col"], cfg["treatment_col"],
                              tuple(covs) if covs is not None else None)
    data = read_csv(cfg["input"], bindings)
    spec = _spec(cfg)
    if cfg["bootstrap"] and cfg["seed"] is None:
        raise ConfigurationError("bootstrap requires a seed", missing="seed")
    adj = adjustedsurv(data, spec, times=cfg["times"], conf_int=cfg["conf_int"],
                       conf_level=cfg["conf_level"], bootstrap=cfg["bootstrap"],
                       n_boot=cfg["n_boot"], seed=cfg["seed"], workers=cfg["workers"],
                       force_bounds=cfg["force_bounds"], iso_reg=cfg["iso_reg"],
                       ci_transform=cfg["ci_transform"], boot_ci=cfg["boot_ci"])
    return data, spec, adj


def _metadata(cfg: dict, spec: MethodSpec, data: SurvDataset, adj) -> dict:
    meta = {k: cfg[k] for k in sorted(cfg) if not k.startswith("out_")}
    meta.update({
        "version": __version__,
        "spec": spec.to_dict(),
        "groups": list(adj.groups),
        "n": data.n,
        "dropped_rows": data.dropped_rows,
        "corrections": dict(adj.corrections_applied),
        "raw_violations": adj.raw_violations,
        "failed_bootstrap_replicates": adj.boot.failed_replicates if adj.boot else None,
    })
    return meta


def _effect_rows(estimates: Sequence[EffectEstimate]):
    for e in estimates:
        yield [e.kind, e.group_a, e.group_b or "", _fmt(e.at), _fmt(e.estimate), _fmt(e.se),
               _fmt(e.ci_lower), _fmt(e.ci_upper), _fmt(e.p_value)]


EFFECT_HEADER = ("kind", "group_a", "group_b", "at", "estimate", "se", "ci_lower", "ci_upper",
                 "p_value")


def cmd_estimate(cfg: dict) -> None:
    data, spec, adj = _estimate(cfg)
    rows = []
    for g, c in adj.curves.items():
        for j, t in enumerate(c.times):
            rows.append([_fmt(t), g, _fmt(c.surv[j]),
                         _fmt(None if c.se is None else c.se[j]),
                         _fmt(None if c.ci_lower is None else c.ci_lower[j]),
                         _fmt(None if c.ci_upper is None else c.ci_upper[j])])
    _write_csv(cfg["out_csv"], ("time", "group", "surv", "se", "ci_lower", "ci_upper"), rows)
    _write_json(_sidecar(cfg), _metadata(cfg, spec, data, adj))
    if cfg["out_svg"]:
        censor = None
        if cfg["svg_censor_ticks"]:
            censor = {g: data.time[data.group_mask(g) & (data.event == 0)].tolist()
                      for g in adj.groups}
        svg = render_svg(adj, conf_int=cfg["svg_ci"], cif=cfg["svg_cif"], censor_times=censor,
                         median_lines=cfg["svg_median_lines"])
        with open(cfg["out_svg"], "w", encoding="utf-8", newline="\n") as fh:
            fh.write(svg)


def _pair(cfg: dict, adj) -> tuple[str, str]:
    groups = adj.groups
    a = cfg["group_a"] if cfg["group_a"] is not None else groups[-1]
    b = cfg["group_b"] if cfg["group_b"] is not None else groups[0]
    return str(a), str(b)


def cmd_diff(cfg: dict) -> None:
    data, spec, adj = _estimate(cfg)
    a, b = _pair(cfg, adj)
    est = curve_diff(adj, a, b, times=cfg["times"])
    _write_csv(cfg["out_csv"], EFFECT_HEADER, _effect_rows(est))
    meta = _metadata(cfg, spec, data, adj)
    meta.update(group_a=a, group_b=b, se_source=est[0].se_source if est else None)
    _write_json(_sidecar(cfg), meta)
    if cfg["out_svg"]:
        with open(cfg["out_svg"], "w", encoding="utf-8", newline="\n") as fh:
            fh.write(render_diff_svg(est, conf_int=cfg["svg_ci"]))


def cmd_quantile(cfg: dict) -> None:
    data, spec, adj = _estimate(cfg)
    conf = cfg["conf_level"] if (cfg["conf_int"] or cfg["bootstrap"]) else None
    est = surv_quantile(adj, cfg["p"], conf_level=conf)
    _write_csv(cfg["out_csv"], EFFECT_HEADER, _effect_rows(est))
    meta = _metadata(cfg, spec, data, adj)
    meta["not_reached"] = [e.group_a for e in est if not e.reached]
    _write_json(_sidecar(cfg), meta)


def cmd_rmst(cfg: dict) -> None:
    if cfg["tau"] is None:
        raise ConfigurationError("rmst requires --tau", missing="tau")
    data, spec, adj = _estimate(cfg)
    est = rmst(adj, cfg["tau"])
    _write_csv(cfg["out_csv"], EFFECT_HEADER, _effect_rows(est))
    _write_json(_sidecar(cfg), _metadata(cfg, spec, data, adj))


def cmd_simulate(cfg: dict) -> None:
    if cfg["seed"] is None:
        raise ConfigurationError("simulate requires --seed", missing="seed")
    spec = DGPSpec.from_dict({k: cfg[k] for k in DGP_KEYS})
    arr = simulate_arrays(spec, np.random.default_rng(cfg["seed"]))
    rows = ([_fmt(t), str(int(e)), str(int(z)), str(int(x))]
            for t, e, z, x in zip(arr["time"], arr["event"], arr["z"], arr["x"]))
    _write_csv(cfg["out_csv"], ("time", "event", "z", "x"), rows)
    _write_json(_sidecar(cfg), {"version": __version__, "seed": cfg["seed"], **spec.to_dict()})


COMMANDS = {"estimate": cmd_estimate, "diff": cmd_diff, "quantile": cmd_quantile,
            "rmst": cmd_rmst, "simulate": cmd_simulate}


def _error_json(exc: AdjSurvError) -> str:
    return json.dumps(exc.to_dict(), sort_keys=True, default=str)


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns the process exit status."""
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve(args)
        with np.errstate(all="ignore"):
            COMMANDS[cfg["command"]](cfg)
    except AdjSurvError as exc:
        sys.stderr.write(_error_json(exc) + "\n")
        return exc.exit_code
    except OSError as exc:
        err = AdjSurvError(f"I/O failure: {exc}", path=getattr(exc, "filename", None))
        err.category = "io"
        sys.stderr.write(_error_json(err) + "\n")
        return 1
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
