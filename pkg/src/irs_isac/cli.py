"""Command-line front end.

Usage::

    irs-isac run --config default_scenario.cfg --override quantization.M=4 --format csv
    irs-isac sweep --config default_scenario.cfg --override sweep.M=2,4,8,continuous --override sweep.seeds=20
    irs-isac validate --config broken.cfg

Config files are INI-style: ``[section]`` headers, ``key = value`` lines and
``#`` / ``;`` comments. Keys are the :class:`ScenarioConfig` field names,
grouped as in :data:`SECTIONS`. Overrides use dotted ``section.key=value``
and win over file values. Every output starts with the fully resolved
configuration so a trace is reproducible from the file alone.

Exit codes: 0 success, 2 configuration error, 3 numerical abort.
"""

import argparse
import configparser
import csv
import io
import json
import logging
import math
import re
import sys
from pathlib import Path

from ._validation import ConfigError, NumericalError
from .orchestrator import SWEEP_COLUMNS, TRACE_COLUMNS, run, sweep_quantization
from .scene import CONTINUOUS, ScenarioConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

SECTIONS = {
    "system": ("N", "L_x", "L_y", "K", "mode"),
    "power": ("P_T_dBm", "P_IRS_dBm", "sigma_c_sq_dBm", "sigma_r_sq_dBm"),
    "target": ("alpha_T", "theta_h", "theta_v", "r_t", "path_loss"),
    "channel": ("rician_kappa", "theta_h_inc", "theta_v_inc", "tx_aod"),
    "quantization": ("M", "nu1", "nu2"),
    "solver": (
        "beta", "gamma", "tau", "tau_breve", "tau_check", "epsilon", "convergence_scale",
        "max_outer_iter", "inner_iters", "update_scheme", "eig_tol", "eig_max_iter",
    ),
    "run": ("seed",),
    "sweep": ("M", "seeds", "n_jobs"),
}

SWEEP_DEFAULTS = {"M": "2,4,8,continuous", "seeds": "20", "n_jobs": "1"}

_INT_FIELDS = {"N", "L_x", "L_y", "K", "max_outer_iter", "inner_iters", "eig_max_iter", "seed"}
_STR_FIELDS = {"mode", "convergence_scale", "update_scheme", "M"}
_OPTIONAL_FIELDS = {"theta_h_inc", "theta_v_inc"}


def valid_keys():
    return [f"{section}.{key}" for section, keys in SECTIONS.items() for key in keys]


def _key_error(key, where=""):
    return ConfigError(
        f"unknown key {key!r}{where}; valid keys are: " + ", ".join(valid_keys())
    )


def _parse_value(key, raw):
    raw = raw.strip()
    if key in _OPTIONAL_FIELDS and raw.lower() in ("", "none"):
        return None
    if key in _STR_FIELDS:
        return raw
    if key in _INT_FIELDS:
        return int(raw)
    if key == "alpha_T":
        return complex(raw.replace(" ", ""))
    return float(raw)


def _line_of(text, section, key):
    """1-based line of `key` inside `[section]` of an INI text, or None."""
    current = None
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*[=:]", re.IGNORECASE)
    for n, line in enumerate(text.splitlines(), 1):
        header = re.match(r"^\s*\[([^\]]+)\]", line)
        if header:
            current = header.group(1).strip()
        elif current == section and pattern.match(line):
            return n
    return None


def load_config(path=None, overrides=()):
    """Resolve a config file plus ``section.key=value`` overrides.

    Returns
    -------
    config : ScenarioConfig
    sweep : dict
        Raw ``[sweep]`` values (``M``, ``seeds``, ``n_jobs``).

    Raises
    ------
    ConfigError
        On syntax errors, unknown keys or values violating an invariant; the
        message carries the file line or the override that caused it.
    """
    # (section, key) -> (raw value, origin string)
    entries = {}
    text = ""
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        parser = configparser.ConfigParser(
            interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#", ";")
        )
        parser.optionxform = str
        try:
            parser.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        for section in parser.sections():
            if section not in SECTIONS:
                raise ConfigError(
                    f"{path}: unknown section [{section}]; valid sections are: "
                    + ", ".join(SECTIONS)
                )
            for key, raw in parser.items(section):
                line = _line_of(text, section, key)
                where = f"{path}:{line}" if line else str(path)
                if key not in SECTIONS[section]:
                    raise _key_error(f"{section}.{key}", f" at {where}")
                entries[(section, key)] = (raw, where)

    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must have the form section.key=value")
        dotted, raw = item.split("=", 1)
        section, _, key = dotted.strip().partition(".")
        if section not in SECTIONS or key not in SECTIONS[section]:
            raise _key_error(dotted.strip(), " in --override")
        entries[(section, key)] = (raw, f"--override {item}")

    values = {}
    origins = {}
    sweep = dict(SWEEP_DEFAULTS)
    for (section, key), (raw, where) in entries.items():
        if section == "sweep":
            sweep[key] = raw.strip()
            continue
        try:
            values[key] = _parse_value(key, raw)
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value for {section}.{key}: {raw.strip()!r} ({exc})") from exc
        origins[key] = where
    try:
        config = ScenarioConfig(**values)
    except ConfigError as exc:
        # point at the entry that set the offending field, if any
        culprit = next((k for k in origins if str(exc).startswith(k + " ")), None)
        prefix = f"{origins[culprit]}: " if culprit else ""
        raise ConfigError(prefix + str(exc)) from exc
    return config, sweep


def parse_sweep(sweep, base_seed):
    """Turn raw ``[sweep]`` strings into (M values, seed list, n_jobs).

    ``seeds`` is either a count (seeds ``base_seed .. base_seed + n - 1``) or
    a comma-separated list of seeds.
    """
    try:
        M_values = []
        for tok in sweep["M"].split(","):
            tok = tok.strip()
            M_values.append(CONTINUOUS if tok.lower() in ("continuous", "inf", "infinity") else int(tok))
        seeds_raw = sweep["seeds"].strip()
        if "," in seeds_raw:
            seeds = [int(s) for s in seeds_raw.split(",") if s.strip()]
        else:
            seeds = list(range(base_seed, base_seed + int(seeds_raw)))
        n_jobs = int(sweep["n_jobs"])
    except ValueError as exc:
        raise ConfigError(f"bad [sweep] value: {exc}") from exc
    if len(M_values) < 1 or any(m != CONTINUOUS and m < 2 for m in M_values):
        raise ConfigError("sweep.M must list integers >= 2 or 'continuous'")
    if not seeds:
        raise ConfigError("sweep.seeds must give at least one seed")
    return M_values, seeds, n_jobs


# ---------------------------------------------------------------- output
def config_echo(config, sweep=None):
    """Flat ``section.key -> value`` mapping of the resolved configuration."""
    d = config.to_dict()
    echo = {}
    for section, keys in SECTIONS.items():
        if section == "sweep":
            continue
        for key in keys:
            echo[f"{section}.{key}"] = d[key]
    if sweep is not None:
        for key, value in sweep.items():
            echo[f"sweep.{key}"] = value
    return echo


def _fmt(x):
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return format(float(x), ".12g")


def _json_number(x):
    x = float(x)
    return x if math.isfinite(x) else format(x)  # "inf" / "-inf" sentinels


def _csv_text(echo, columns, rows):
    buf = io.StringIO()
    for key, value in echo.items():
        buf.write(f"# {key} = {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(x) if not isinstance(x, str) else x for x in row])
    return buf.getvalue()


def serialize_trace(result, fmt="csv"):
    """Encode a RunResult trace as CSV or JSON bytes, headed by the config echo."""
    echo = config_echo(result.config_echo)
    if fmt == "csv":
        return _csv_text(echo, TRACE_COLUMNS, (r.row() for r in result.trace)).encode()
    if fmt == "json":
        doc = {
            "config": echo,
            "converged": bool(result.converged),
            "iterations_used": int(result.iterations_used),
            "columns": list(TRACE_COLUMNS),
            "trace": [
                {c: (v if c == "iter" else _json_number(v)) for c, v in zip(TRACE_COLUMNS, r.row())}
                for r in result.trace
            ],
        }
        return (json.dumps(doc, indent=2) + "\n").encode()
    raise ValueError(f"unknown format {fmt!r}")


def serialize_summary(summary, config, sweep, fmt="csv"):
    echo = config_echo(config, sweep)
    rows = [tuple(getattr(r, c) for c in SWEEP_COLUMNS) for r in summary.rows]
    if fmt == "csv":
        return _csv_text(echo, SWEEP_COLUMNS, rows).encode()
    if fmt == "json":
        doc = {
            "config": echo,
            "columns": list(SWEEP_COLUMNS),
            "summary": [
                {c: (v if c in ("M", "n_runs", "n_converged") else _json_number(v))
                 for c, v in zip(SWEEP_COLUMNS, row)}
                for row in rows
            ],
        }
        return (json.dumps(doc, indent=2) + "\n").encode()
    raise ValueError(f"unknown format {fmt!r}")


def _emit(data, output):
    if output is None or output == "-":
        sys.stdout.write(data.decode())
        sys.stdout.flush()
        return
    try:
        Path(output).write_bytes(data)
    except OSError as exc:
        raise OSError(f"cannot write output {output}: {exc}") from exc


# ------------------------------------------------------------------ main
def build_parser():
    parser = argparse.ArgumentParser(
        prog="irs-isac", description="Joint quantized active-IRS and precoder design for ISAC."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "run one design and write its convergence trace"),
        ("sweep", "sweep phase resolutions M over seeds and summarize final SNR_T"),
        ("validate", "check a configuration and print the resolved values"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", "-c", help="INI config file (defaults apply when omitted)")
        p.add_argument(
            "--override", "-o", action="append", default=[], metavar="SECTION.KEY=VALUE",
            help="override one config entry; repeatable",
        )
        if name != "validate":
            p.add_argument("--output", help="output path (default: stdout)")
            p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--verbose", "-v", action="store_true")
    return parser


def parse_and_run(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config, sweep = load_config(args.config, args.override)
        if args.command == "validate":
            for key, value in config_echo(config, sweep).items():
                print(f"{key} = {value}")
            return EXIT_OK
        if args.command == "run":
            result = run(config)
            _emit(serialize_trace(result, args.format), args.output)
            return EXIT_OK
        M_values, seeds, n_jobs = parse_sweep(sweep, config.seed)
        summary = sweep_quantization(config, M_values, seeds, n_jobs=n_jobs)
        _emit(serialize_summary(summary, config, sweep, args.format), args.output)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main():
    sys.exit(parse_and_run())


if __name__ == "__main__":
    main()
