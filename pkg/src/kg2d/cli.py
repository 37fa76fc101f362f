"""Command-line front end.

Usage::

    kg2d <command> --config <file> [--out <dir>] [--m <int|range>] [--quiet]

Commands are ``spectrum``, ``phases``, ``ledger``, ``levinson`` and ``sweep``.
The configuration is an INI file with the sections ``[potential]``, ``[run]``
and ``[tolerances]``; see ``demo/`` for examples.  Every command writes CSV
files plus a ``manifest.json`` into the output directory and prints a table
unless ``--quiet`` is given.

Exit status: 0 success (including advisory results), 1 verification failure,
2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import ConfigError, DomainError, KG2DError
from .exterior import ThresholdSide, threshold_rho
from .interior import DEFAULT_RTOL, shoot
from .levinson import CRITICAL_TOL, detect_critical, lambda_ledger, verify_theorem
from .phase import K_PROBES, threshold_crossings, threshold_phase, unwrap_phase
from .potential import PotentialSpec, validate
from .spectrum import EPS_TOL, N_PANELS, find_bound_states

SCHEMA_VERSION = "1"
COMMANDS = ("spectrum", "phases", "ledger", "levinson", "sweep")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def fmt(x):
    """Twelve significant digits; integers and markers pass through."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.12g}"
    return str(x)


# ------------------------------------------------------------------ configuration


@dataclass
class Tolerances:
    integrator_rtol: float = DEFAULT_RTOL
    critical_tol: float = CRITICAL_TOL
    extrapolation_tol: float = 1e-3      # units of pi
    epsilon_tol: float = EPS_TOL
    n_panels: int = N_PANELS


@dataclass
class RunConfig:
    potential: PotentialSpec
    m_values: tuple
    output_dir: str = "out"
    commands: tuple = COMMANDS
    k_probe: float = 0.01
    lambda_points: int = 33
    lambda_reverse: bool = False
    tolerances: Tolerances = field(default_factory=Tolerances)
    source: str = ""


def _line_of(text, section, key):
    """1-based line number of ``key`` inside ``[section]`` (None if absent)."""
    current = None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"\[(.+)\]", line)
        if m:
            current = m.group(1).strip().lower()
            continue
        if current == section and re.match(rf"{re.escape(key)}\s*[=:]", line, re.IGNORECASE):
            return i
    return None


def parse_m(text):
    """``"3"``, ``"0-4"``, ``"0..4"`` or ``"0,2,5"`` to a tuple of partial waves."""
    text = str(text).strip()
    try:
        if "," in text:
            vals = [int(t) for t in text.split(",") if t.strip()]
        else:
            m = re.fullmatch(r"(\d+)\s*(?:-|\.\.)\s*(\d+)", text)
            vals = list(range(int(m.group(1)), int(m.group(2)) + 1)) if m else [int(text)]
    except (ValueError, AttributeError) as exc:
        raise ConfigError(f"cannot read partial waves from {text!r}", field="run.m") from exc
    if not vals or any(v < 0 or v > 16 for v in vals):
        raise ConfigError(f"partial waves must be a non-empty set within 0..16, got {text!r}",
                          field="run.m")
    return tuple(sorted(set(vals)))


def _floats(text):
    return [float(t) for t in re.split(r"[,\s]+", text.strip()) if t]


def load_config(path):
    """Read and validate an INI run configuration."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=str(path))
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"malformed config line {line}", line=line) from exc
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], line=getattr(exc, "lineno", None)) from exc

    def get(section, key, conv, default=None, required=False):
        if not parser.has_option(section, key):
            if required:
                raise ConfigError(f"missing required field {section}.{key}",
                                  field=f"{section}.{key}")
            return default
        raw = parser.get(section, key)
        try:
            return conv(raw)
        except (ValueError, TypeError, ConfigError) as exc:
            raise ConfigError(f"invalid value {raw!r} for {section}.{key}",
                              field=f"{section}.{key}", line=_line_of(text, section, key)) from exc

    def positive(section, key, value):
        if value is not None and not (math.isfinite(value) and value > 0):
            raise ConfigError(f"{section}.{key} must be positive, got {value}",
                              field=f"{section}.{key}", line=_line_of(text, section, key))
        return value

    if not parser.has_section("potential"):
        raise ConfigError("missing [potential] section", field="potential")
    shape = get("potential", "shape", str, required=True).strip().lower()
    r0 = positive("potential", "r0", get("potential", "r0", float, 1.0))
    mass = positive("potential", "mass", get("potential", "mass", float, 1.0))
    try:
        if shape == "free":
            spec = PotentialSpec.free(r0, mass)
        elif shape == "square_well":
            spec = PotentialSpec.square_well(get("potential", "depth", float, required=True), r0, mass)
        elif shape == "piecewise_constant":
            spec = PotentialSpec.piecewise_constant(
                get("potential", "breakpoints", _floats, required=True),
                get("potential", "values", _floats, required=True), r0, mass)
        elif shape == "tabulated":
            spec = PotentialSpec.tabulated(get("potential", "r", _floats, required=True),
                                           get("potential", "v", _floats, required=True), r0, mass)
        else:
            raise ConfigError(f"unknown potential shape {shape!r}", field="potential.shape",
                              line=_line_of(text, "potential", "shape"))
    except DomainError as exc:
        raise ConfigError(str(exc), field="potential") from exc
    report = validate(spec)
    if not report.passed:
        raise ConfigError(f"potential rejected ({report.condition} condition at r = "
                          f"{report.radius:g}): {report.message}", field="potential")

    m_values = get("run", "m", parse_m, (0, 1, 2))
    tol = Tolerances(
        integrator_rtol=positive("tolerances", "integrator_rtol",
                                 get("tolerances", "integrator_rtol", float, DEFAULT_RTOL)),
        critical_tol=positive("tolerances", "critical_tol",
                              get("tolerances", "critical_tol", float, CRITICAL_TOL)),
        extrapolation_tol=positive("tolerances", "extrapolation_tol",
                                   get("tolerances", "extrapolation_tol", float, 1e-3)),
        epsilon_tol=positive("tolerances", "epsilon_tol",
                             get("tolerances", "epsilon_tol", float, EPS_TOL)),
        n_panels=int(positive("tolerances", "n_panels",
                              get("tolerances", "n_panels", float, N_PANELS))),
    )
    k_probe = positive("run", "k_probe", get("run", "k_probe", float, 0.01))
    if k_probe > 0.01 / r0:
        raise ConfigError("run.k_probe must not exceed 0.01 / r0", field="run.k_probe",
                          line=_line_of(text, "run", "k_probe"))
    points = int(positive("run", "lambda_points", get("run", "lambda_points", float, 33)))
    if points < 2:
        raise ConfigError("run.lambda_points must be at least 2", field="run.lambda_points",
                          line=_line_of(text, "run", "lambda_points"))
    commands = get("run", "commands", lambda s: tuple(c.strip() for c in s.split(",") if c.strip()),
                   COMMANDS)
    bad = [c for c in commands if c not in COMMANDS]
    if bad:
        raise ConfigError(f"unknown command(s) {', '.join(bad)}", field="run.commands",
                          line=_line_of(text, "run", "commands"))
    reverse = get("run", "lambda_reverse", lambda s: parser.BOOLEAN_STATES[s.strip().lower()], False)
    return RunConfig(
        potential=spec, m_values=m_values,
        output_dir=get("run", "output_dir", str, "out"), commands=commands, k_probe=k_probe,
        lambda_points=points, lambda_reverse=reverse, tolerances=tol, source=text,
    )


# ------------------------------------------------------------------ output


class Output:
    """Collects tables; writes CSV files and the manifest in one place."""

    def __init__(self, directory, quiet):
        self.directory = directory
        self.quiet = quiet
        self.files = {}

    def table(self, name, header, rows):
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
        self.files[name] = buf.getvalue()
        if not self.quiet:
            self._print(name, header, rows)

    def note(self, text):
        if not self.quiet:
            print(text)

    def _print(self, name, header, rows):
        cells = [list(header)] + [[fmt(v) for v in row] for row in rows]
        widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
        print(f"== {name}")
        for j, r in enumerate(cells):
            print("  ".join(c.rjust(w) for c, w in zip(r, widths)))
            if j == 0:
                print("  ".join("-" * w for w in widths))
        print()

    def write(self, command, config):
        os.makedirs(self.directory, exist_ok=True)
        for name, content in self.files.items():
            with open(os.path.join(self.directory, name), "w", encoding="utf-8", newline="") as fh:
                fh.write(content)
        path = os.path.join(self.directory, "manifest.json")
        runs = {}
        if os.path.exists(path):
            try:
                with open(path, encoding="utf-8") as fh:
                    previous = json.load(fh)
                if previous.get("schema_version") == SCHEMA_VERSION:
                    runs = previous.get("runs", {})
            except (OSError, ValueError):
                runs = {}
        # one entry per command, so running several commands into one directory
        # gives the same manifest regardless of order
        runs[command] = {
            "config_sha256": hashlib.sha256(config.source.encode("utf-8")).hexdigest(),
            "m_values": list(config.m_values),
            "files": {n: hashlib.sha256(c.encode("utf-8")).hexdigest()
                      for n, c in sorted(self.files.items())},
        }
        manifest = {"schema_version": SCHEMA_VERSION, "package_version": __version__,
                    "runs": runs}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


# ------------------------------------------------------------------ commands


def cmd_spectrum(config, out):
    spec, tol = config.potential, config.tolerances
    rows, summary = [], []
    for m in config.m_values:
        res = find_bound_states(spec, 1.0, m, n_panels=tol.n_panels, rtol=tol.integrator_rtol,
                                eps_tol=tol.epsilon_tol)
        for s in res.states:
            rows.append((m, s.E / spec.mass, s.kappa * spec.r0, s.epsilon, s.kind.value))
        summary.append((m, res.n_plus, res.n_minus, res.pair_count, res.net_count,
                        res.complex_energy_warning))
    out.table("spectrum.csv", ("m", "E_over_M", "kappa_r0", "epsilon", "kind"), rows)
    out.table("spectrum_summary.csv",
              ("m", "n_plus", "n_minus", "pair_count", "N_m", "complex_energy_warning"), summary)
    return EXIT_OK


def cmd_phases(config, out):
    spec, tol = config.potential, config.tolerances
    rows = []
    for m in config.m_values:
        for side in (ThresholdSide.PLUS, ThresholdSide.MINUS):
            cls = detect_critical(spec, m, side, critical_tol=tol.critical_tol)
            cr = threshold_crossings(spec, m, side, rtol=tol.integrator_rtol,
                                     critical_tol=tol.critical_tol, locate=False)
            if cls.is_critical:
                delta = cr.count + (1 if cr.arrival == -1 else 0)
                rows.append((m, side.label, delta, cr.count, 0.0, cls.case_id))
                continue
            tp = threshold_phase(spec, m, side, rtol=tol.integrator_rtol,
                                 accuracy=tol.extrapolation_tol * math.pi, crossing=cr.count)
            rows.append((m, side.label, tp.delta / math.pi, tp.crossing_count,
                         tp.extrapolation_residual / math.pi, "none"))
    out.table("phases.csv", ("m", "side", "delta_over_pi", "crossing_count",
                             "extrapolation_residual_over_pi", "critical_case"), rows)
    return EXIT_OK


def cmd_levinson(config, out):
    spec, tol = config.potential, config.tolerances
    rows, status = [], EXIT_OK
    for m in config.m_values:
        spectrum = find_bound_states(spec, 1.0, m, n_panels=tol.n_panels, rtol=tol.integrator_rtol,
                                     eps_tol=tol.epsilon_tol)
        rep = verify_theorem(spec, m, critical_tol=tol.critical_tol,
                             accuracy=tol.extrapolation_tol * math.pi, rtol=tol.integrator_rtol,
                             spectrum=spectrum)
        rows.append((m, rep.n_plus, rep.n_minus, rep.net_count, rep.delta_plus / math.pi,
                     rep.delta_minus / math.pi, rep.beta1, rep.beta2, rep.residual / math.pi,
                     rep.class_plus.case_id, rep.class_minus.case_id, rep.status))
        if rep.status == "fail":
            status = EXIT_FAIL
        for n in rep.notes:
            out.note(f"m={m}: {n}")
    out.table("levinson.csv", ("m", "n_plus", "n_minus", "N_m", "delta_plus_over_pi",
                               "delta_minus_over_pi", "beta1", "beta2", "residual_over_pi",
                               "case_plus", "case_minus", "status"), rows)
    if any(r[-1] == "advisory" for r in rows):
        out.note("advisory rows: critical configuration without a listed correction rule")
    return status


def _ledger_rows(spec, m, tol):
    rows = []
    for e in lambda_ledger(spec, m, rtol=tol.integrator_rtol, critical_tol=tol.critical_tol):
        rows.append((m, e.lam, e.kind, e.side.label if e.side else "", e.direction,
                     e.d_plus, e.d_minus, e.n_plus, e.n_minus, e.net_count))
    return rows


def cmd_ledger(config, out):
    spec, tol = config.potential, config.tolerances
    rows = []
    for m in config.m_values:
        rows.extend(_ledger_rows(spec, m, tol))
    out.table("ledger.csv", ("m", "lambda", "event", "side", "direction", "d_plus", "d_minus",
                             "n_plus", "n_minus", "N_m"), rows)
    return EXIT_OK


def cmd_sweep(config, out):
    spec, tol = config.potential, config.tolerances
    grid = np.linspace(0.0, 1.0, config.lambda_points)
    r0 = spec.r0
    rows = []
    for m in config.m_values:
        ends = {}
        for side in (ThresholdSide.PLUS, ThresholdSide.MINUS):
            shot = shoot(spec, m, np.full(grid.shape, side.sign * spec.mass), grid,
                         rtol=tol.integrator_rtol)
            ends[side] = shot.log_derivative
        rec = unwrap_phase(spec, m, config.k_probe, ThresholdSide.PLUS, grid,
                           rtol=tol.integrator_rtol)
        # keep the grid nodes of the (possibly refined) continuation path
        idx = np.searchsorted(rec.path_lam, grid)
        etas = rec.path_eta[idx]
        events = lambda_ledger(spec, m, rtol=tol.integrator_rtol, critical_tol=tol.critical_tol)
        block = []
        for lam, ap, am, eta in zip(grid, ends[ThresholdSide.PLUS], ends[ThresholdSide.MINUS], etas):
            passed = [e for e in events if 0.0 < lam and e.lam <= lam]
            n_p = passed[-1].n_plus if passed else 0
            n_m = passed[-1].n_minus if passed else 0
            block.append((m, float(lam), float(ap), float(am), threshold_rho(m, r0),
                          float(eta) / math.pi, n_p, n_m))
        if config.lambda_reverse:
            block.reverse()
        rows.extend(block)
    out.table("sweep.csv", ("m", "lambda", "A_plus", "A_minus", "B_threshold", "eta_over_pi",
                            "n_plus", "n_minus"), rows)
    return EXIT_OK


DISPATCH = {
    "spectrum": cmd_spectrum,
    "phases": cmd_phases,
    "ledger": cmd_ledger,
    "levinson": cmd_levinson,
    "sweep": cmd_sweep,
}


def build_parser():
    p = argparse.ArgumentParser(prog="kg2d", description="2D Klein-Gordon bound states, "
                                "threshold phases and the counting theorem for cutoff potentials")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="INI configuration file")
    p.add_argument("--out", help="output directory (overrides run.output_dir)")
    p.add_argument("--m", help="partial waves: N, A-B, A..B or a comma list")
    p.add_argument("--quiet", action="store_true", help="suppress the console tables")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.m is not None:
            config.m_values = parse_m(args.m)
        if args.out:
            config.output_dir = args.out
        if args.command not in config.commands:
            raise ConfigError(f"command {args.command!r} not enabled in run.commands",
                              field="run.commands")
    except ConfigError as exc:
        where = []
        if exc.field:
            where.append(f"field {exc.field}")
        if exc.line:
            where.append(f"line {exc.line}")
        suffix = f" ({', '.join(where)})" if where else ""
        print(f"kg2d: configuration error{suffix}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Output(config.output_dir, args.quiet)
    try:
        status = DISPATCH[args.command](config, out)
    except KG2DError as exc:
        print(f"kg2d: numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    out.write(args.command, config)
    return status


if __name__ == "__main__":
    sys.exit(main())
