"""``entropica`` command-line interface.

Exit codes: 0 every check satisfied, 1 some check violated (after the grid
refinement retry), 2 usage or input error, 3 capacity solver did not converge.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .capacity import (
    ChannelSpec,
    SolverError,
    SolverOptions,
    capacity_power_constrained,
    check_multiplicative,
    gaussian_input_mi,
    mi_ratio_check,
)
from .config import ConfigError, RunConfig, resolve_config
from .density import (
    DensityError,
    DensityGrid,
    GaussianSpec,
    center,
    entropy,
    entropy_power,
    fisher_information,
    from_family,
    relative_entropy_to_gaussianity,
    variance_profile,
)
from .families import FamilyError, make_family
from .inequalities import (
    MAX_SUMMANDS,
    check_combined_doubling,
    check_epi_doubling,
    check_fractional_superadditivity,
    check_golden_ratio_bound,
    check_large_doubling,
    check_submodularity,
    combined_branch,
    doubling_constant,
    small_doubling_sweep,
    ze_gap_check,
)
from .mac import MacTriplet, check_mac_fractional_bound, mac_inner_corners
from .mimo import MimoChannel, compare_bounds, mimo_robustness_factor
from .parsing import SpecSyntaxError, parse_density_spec
from .reports import GapReport

__all__ = ["main", "run_subcommand", "RunManifest", "UsageError"]

EXIT_OK, EXIT_VIOLATED, EXIT_USAGE, EXIT_NONCONVERGED = 0, 1, 2, 3

log = logging.getLogger("entropica")


class UsageError(Exception):
    """Bad arguments or unreadable inputs; maps to exit code 2."""


@dataclass
class RunManifest:
    command: str
    config: RunConfig
    reports: list
    timestamp: str = ""
    version: str = __version__

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config.to_dict(),
            "reports": self.reports,
            "timestamp": self.timestamp,
            "version": self.version,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(d["command"], RunConfig.from_dict(d["config"]), list(d["reports"]), d.get("timestamp", ""), d["version"])

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls.from_dict(json.loads(text))


@dataclass
class Outcome:
    reports: list = field(default_factory=list)
    table: tuple | None = None  # (header, rows) for csv output
    violated: bool = False
    nonconverged: bool = False

    def add_gap(self, r: GapReport):
        self.reports.append({"kind": "gap", **r.to_dict()})
        self.violated |= not r.satisfied

    @property
    def exit_code(self) -> int:
        if self.nonconverged:
            return EXIT_NONCONVERGED
        return EXIT_VIOLATED if self.violated else EXIT_OK


# -- helpers ------------------------------------------------------------------


def _family(text: str):
    try:
        return parse_density_spec(text)
    except (SpecSyntaxError, FamilyError) as exc:
        raise UsageError(f"bad density spec {text!r}: {exc}") from exc


def _grid(spec, cfg: RunConfig):
    if isinstance(spec, DensityGrid):
        return spec
    fam = _family(spec) if isinstance(spec, str) else spec
    try:
        return from_family(fam, grid_points=cfg.grid_points, truncation_sigmas=cfg.truncation_sigmas)
    except (OSError, FamilyError, DensityError) as exc:
        raise UsageError(str(exc)) from exc


def _solver(cfg: RunConfig, args) -> SolverOptions:
    extra = {}
    if getattr(args, "radius", None) is not None:
        extra["input_radius"] = args.radius
    if getattr(args, "points", None) is not None:
        extra["input_points"] = args.points
    return SolverOptions(gap_threshold=cfg.ba_gap_threshold, max_iterations=cfg.ba_max_iterations, **extra)


def _load_json(path: str):
    """Parse ``path`` as inline JSON when it looks like an object or list, else read the file."""
    if path.lstrip()[:1] in ("{", "["):
        try:
            return json.loads(path)
        except json.JSONDecodeError as exc:
            raise UsageError(f"inline JSON is not valid: {exc}") from exc
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v).lower()
    if isinstance(v, float):
        return f"{v + 0.0:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}={_fmt(x)}" for k, x in v.items()) + "}"
    return str(v)


def _text(reports: list) -> str:
    lines = []
    for r in reports:
        kind = r.get("kind", "")
        if kind == "gap":
            verdict = "ok" if r["satisfied"] else "VIOLATED"
            lines.append(
                f"{r['name']}: lhs={_fmt(r['lhs'])} rhs={_fmt(r['rhs'])} slack={_fmt(r['slack'])} "
                f"tol={_fmt(r['tolerance'])} {verdict}"
            )
            continue
        if kind == "criterion":
            lines.append(f"criterion {r['criterion']} [{'PASS' if r['passed'] else 'FAIL'}] {r['title']} ({r['seconds']:.1f}s)")
            continue
        body = " ".join(f"{k}={_fmt(v)}" for k, v in r.items() if k not in ("kind", "bound_reports"))
        lines.append(f"{kind}: {body}")
        for b in r.get("bound_reports", []):
            lines.append("  " + _text([{"kind": "gap", **b}]))
    return "\n".join(lines) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _gap_table(reports: list):
    gaps = [r for r in reports if r.get("kind") == "gap"]
    fields = ["name", "lhs", "rhs", "slack", "tolerance", "satisfied", "inputs_digest"]
    return fields, [[g[k] for k in fields] for g in gaps]


# -- subcommands --------------------------------------------------------------


def cmd_entropy(args, cfg):
    out = Outcome()
    for spec in args.density:
        f = _grid(spec, cfg)
        rep = {
            "kind": "entropy",
            "density": f.label,
            "entropy": entropy(f),
            "entropy_power": entropy_power(f),
            "mean": f.mean,
            "variance": f.variance,
            "relative_entropy_to_gaussianity": relative_entropy_to_gaussianity(f),
        }
        if args.fisher:
            value, excluded = fisher_information(f, details=True)
            rep["fisher_information"] = value
            rep["fisher_excluded_mass"] = excluded
        for radius in args.radius or []:
            rep[f"variance_profile(R={radius:g})"] = variance_profile(f, radius)
        out.reports.append(rep)
    keys = [k for k in out.reports[0] if k != "kind"]
    out.table = (keys, [[r.get(k) for k in keys] for r in out.reports])
    return out


def cmd_doubling(args, cfg):
    out = Outcome()
    f = _grid(args.density, cfg)
    sigma = doubling_constant(f)
    out.reports.append({"kind": "doubling", "density": f.label, "sigma": sigma, "doubling_gap": sigma - 1.0, "branch": combined_branch(sigma)})
    out.add_gap(check_epi_doubling(f, cfg.tolerance_nats))
    out.table = _gap_table(out.reports)
    return out


CHECKS = {
    # name: (number of densities, or (min, max))
    "epi_doubling": 1,
    "golden": 1,
    "large_doubling": 1,
    "combined": 1,
    "submodularity": 3,
    "gaussianization": 2,
    "superadditivity": (2, MAX_SUMMANDS),
    "mi_ratio": 1,
}


def cmd_check(args, cfg):
    name = args.inequality
    want = CHECKS[name]
    dens = args.density or []
    lo, hi = (want, want) if isinstance(want, int) else want
    if not lo <= len(dens) <= hi:
        expected = str(lo) if lo == hi else f"{lo}-{hi}"
        raise UsageError(f"check {name} needs {expected} --density argument(s), got {len(dens)}")
    fs = [_grid(d, cfg) for d in dens]
    tol = cfg.tolerance_nats
    out = Outcome()
    if name == "epi_doubling":
        r = check_epi_doubling(fs[0], tol)
    elif name == "golden":
        r = check_golden_ratio_bound(fs[0], tol)
    elif name == "large_doubling":
        var = args.noise_var if args.noise_var is not None else fs[0].variance
        r = check_large_doubling(fs[0], GaussianSpec(0.0, var), tol)
    elif name == "combined":
        r = check_combined_doubling(fs[0], tol)
    elif name == "submodularity":
        r = check_submodularity(*fs, tol)
    elif name == "gaussianization":
        r = ze_gap_check(fs[0], fs[1], tol)
    elif name == "superadditivity":
        k = args.k if args.k is not None else 1
        if not 1 <= k <= len(fs):
            raise UsageError(f"--k must lie in [1, {len(fs)}]")
        r = check_fractional_superadditivity(fs, k, tol)
    else:  # mi_ratio
        if args.noise is None or args.power is None:
            raise UsageError("check mi_ratio needs --noise and --power")
        try:
            r = mi_ratio_check(fs[0], ChannelSpec(_grid(args.noise, cfg), args.power), tol)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    out.add_gap(r)
    out.table = _gap_table(out.reports)
    return out


def _channel(noise, power, cfg):
    try:
        return ChannelSpec(_grid(noise, cfg), power)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_capacity(args, cfg):
    ch = _channel(args.noise, args.power, cfg)
    try:
        res = capacity_power_constrained(ch, _solver(cfg, args))
    except SolverError as exc:
        log.error("%s", exc)
        out = Outcome(nonconverged=True)
        out.reports.append({"kind": "capacity", "noise": ch.noise.label, "error": str(exc)})
        return out
    rep = {"kind": "capacity", "noise": ch.noise.label, "power": ch.power, "snr": ch.snr, **res.to_dict(), "gaussian_mi": gaussian_input_mi(ch)}
    out = Outcome(reports=[rep], nonconverged=not res.converged)
    if args.pmf_out:
        Path(args.pmf_out).write_text(_csv(["x", "p"], zip(res.input_support.tolist(), res.input_pmf.tolist())))
    keys = [k for k in rep if k != "kind"]
    out.table = (keys, [[rep[k] for k in keys]])
    return out


def _corpus(path, cfg):
    data = _load_json(path)
    if not isinstance(data, list):
        raise UsageError(f"{path}: channel corpus must be a JSON list")
    chans = []
    for i, entry in enumerate(data):
        try:
            fam = make_family(entry["noise_family"], entry.get("params", []))
            chans.append(_channel(fam, float(entry["P"]), cfg))
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"{path}: bad corpus entry {i}: {exc}") from exc
    return chans


def cmd_robustness(args, cfg):
    if args.corpus:
        channels = _corpus(args.corpus, cfg)
    else:
        if args.noise is None:
            raise UsageError("robustness needs --noise or --corpus")
        z = _grid(args.noise, cfg)
        powers = list(args.power or [])
        powers += [s * center(z).variance for s in args.snr or []]
        if not powers:
            raise UsageError("robustness needs --power or --snr")
        channels = [_channel(z, p, cfg) for p in powers]
    out = Outcome()
    rows = []
    for ch in channels:
        try:
            res = capacity_power_constrained(ch, _solver(cfg, args))
        except SolverError as exc:
            raise UsageError(str(exc)) from exc
        rep = check_multiplicative(ch, res, cfg.tolerance_nats)
        out.reports.append({"kind": "robustness", "noise": ch.noise.label, "power": ch.power, **rep.to_dict()})
        out.violated |= not rep.satisfied
        out.nonconverged |= not rep.converged
        rows.append([ch.snr, rep.capacity_estimate, rep.gaussian_mi, rep.additive_gap, rep.multiplicative_factor, rep.bound_reports[2].satisfied])
    out.table = (["snr", "capacity", "gaussian_mi", "additive_gap", "mult_factor", "mult_bound_satisfied"], rows)
    return out


def _triplet(path, cfg):
    d = _load_json(path)
    try:
        probs = d["v_probs"]
        x1 = [_grid(s, cfg) for s in d["x1"]]
        x2 = [_grid(s, cfg) for s in d["x2"]]
        return MacTriplet(tuple(probs), tuple(x1), tuple(x2), float(d["P1"]), float(d["P2"]))
    except (KeyError, TypeError) as exc:
        raise UsageError(f"{path}: triplet needs v_probs, x1, x2, P1, P2 ({exc})") from exc
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def cmd_mac(args, cfg):
    t = _triplet(args.triplet, cfg)
    z = _grid(args.noise, cfg)
    rep = check_mac_fractional_bound(t, z, cfg.tolerance_nats)
    corners = mac_inner_corners(t, z)
    out = Outcome()
    body = rep.to_dict()
    out.reports.append({"kind": "mac_rates", "v_probabilities": body["v_probabilities"], "per_v_rates": body["per_v_rates"]})
    for b in rep.bound_reports:
        out.add_gap(b)
    out.reports.append({"kind": "mac_corners", "corners": [list(c) for c in corners]})
    out.table = (["R1", "R2"], [list(c) for c in corners]) if args.corners else _gap_table(out.reports)
    return out


def cmd_mimo(args, cfg):
    d = _load_json(args.channel)
    if not isinstance(d, dict):
        raise UsageError(f"{args.channel}: expected a JSON object with H, N, P")
    try:
        ch = MimoChannel.from_dict(d)
        cmp = compare_bounds(ch, args.capacity)
    except ValueError as exc:
        raise UsageError(f"{args.channel}: {exc}") from exc
    factor = mimo_robustness_factor(ch, details=True)
    rep = {"kind": "mimo", "d_r": ch.d_r, "d_t": ch.d_t, "snr_m": ch.snr_m, "factor": factor.value, **cmp.to_dict()}
    out = Outcome(reports=[rep])
    keys = [k for k in rep if k != "kind"]
    out.table = (keys, [[rep[k] for k in keys]])
    return out


def cmd_sweep(args, cfg):
    try:
        params = [float(p) for p in args.params.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad --params: {exc}") from exc
    try:
        rows = small_doubling_sweep(args.family, params)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = Outcome()
    for r in rows:
        out.reports.append({"kind": "sweep_row", **r.__dict__})
    out.table = (["parameter", "doubling_gap", "levy_distance", "relative_entropy"], [list(r.__dict__.values()) for r in rows])
    return out


def cmd_suite(args, cfg):
    from .suite import CRITERIA, run_suite

    only = None
    if args.only:
        try:
            only = {int(x) for x in args.only.split(",")}
        except ValueError as exc:
            raise UsageError(f"bad --only: {exc}") from exc
        unknown = only - set(CRITERIA)
        if unknown:
            raise UsageError(f"unknown criteria {sorted(unknown)}")
    progress = (lambda line: print(line, file=sys.stderr, flush=True)) if args.progress else None
    results = run_suite(cfg, only, progress)
    out = Outcome(reports=[r.to_dict() for r in results])
    out.violated = not all(r.passed for r in results)
    out.table = (["criterion", "passed", "seconds", "title"], [[r.number, r.passed, r.seconds, r.title] for r in results])
    return out


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("configuration")
    g.add_argument("--config", help="JSON config file")
    g.add_argument("--grid-points", type=int, dest="grid_points")
    g.add_argument("--truncation-sigmas", type=float, dest="truncation_sigmas")
    g.add_argument("--tol", type=float, dest="tolerance_nats", help="tolerance in nats")
    g.add_argument("--ba-gap", type=float, dest="ba_gap_threshold")
    g.add_argument("--ba-max-iterations", type=int, dest="ba_max_iterations")
    g.add_argument("--seed", type=int)
    g.add_argument("--format", choices=["text", "json", "csv"], dest="output_format")
    g.add_argument("--out", help="write output here instead of stdout")
    g.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="entropica", description="Entropy inequalities and Gaussian-input robustness checks.")
    p.add_argument("--version", action="version", version=f"entropica {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("entropy", parents=[common], help="entropy functionals of densities")
    s.add_argument("--density", action="append", required=True)
    s.add_argument("--fisher", action="store_true", help="also report Fisher information")
    s.add_argument("--radius", type=float, action="append", help="variance profile radius (repeatable)")
    s.set_defaults(func=cmd_entropy)

    s = sub.add_parser("doubling", parents=[common], help="doubling constant of a density")
    s.add_argument("--density", required=True)
    s.set_defaults(func=cmd_doubling)

    s = sub.add_parser("check", parents=[common], help="verify one inequality")
    s.add_argument("inequality", choices=sorted(CHECKS))
    s.add_argument("--density", action="append")
    s.add_argument("--k", type=int, help="subset size for superadditivity")
    s.add_argument("--noise-var", type=float, dest="noise_var", help="Gaussian noise variance for large_doubling")
    s.add_argument("--noise", help="noise density for mi_ratio")
    s.add_argument("--power", type=float)
    s.set_defaults(func=cmd_check)

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--radius", type=float, help="input support radius in units of sqrt(P)")
    solver.add_argument("--points", type=int, help="input lattice size")

    s = sub.add_parser("capacity", parents=[common, solver], help="power-constrained capacity")
    s.add_argument("--noise", required=True)
    s.add_argument("--power", type=float, required=True)
    s.add_argument("--pmf-out", dest="pmf_out", help="write the optimizing input pmf as CSV x,p")
    s.set_defaults(func=cmd_capacity)

    s = sub.add_parser("robustness", parents=[common, solver], help="Gaussian-input robustness bounds")
    s.add_argument("--noise")
    s.add_argument("--power", type=float, action="append")
    s.add_argument("--snr", type=float, action="append")
    s.add_argument("--corpus", help="JSON list of {noise_family, params, P}")
    s.set_defaults(func=cmd_robustness)

    s = sub.add_parser("mac", parents=[common], help="two-user MAC fractional bounds")
    s.add_argument("--triplet", required=True, help="JSON {v_probs, x1, x2, P1, P2}")
    s.add_argument("--noise", required=True)
    s.add_argument("--corners", action="store_true", help="csv output lists region corners R1,R2")
    s.set_defaults(func=cmd_mac)

    s = sub.add_parser("mimo", parents=[common], help="MIMO robustness factor and additive loss")
    s.add_argument("--channel", required=True, help="JSON {H, N, P}")
    s.add_argument("--capacity", type=float, help="capacity in nats, to rank the bounds")
    s.set_defaults(func=cmd_mimo)

    s = sub.add_parser("sweep", parents=[common], help="stability sweep of the doubling constant")
    s.add_argument("--family", default="mix_separation")
    s.add_argument("--params", required=True, help="comma-separated parameter values")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("suite", parents=[common], help="run the full verification battery")
    s.add_argument("--only", help="comma-separated criterion numbers")
    s.add_argument("--progress", action="store_true", help="print one line per criterion to stderr")
    s.set_defaults(func=cmd_suite)
    return p


def run_subcommand(argv, environ=None) -> tuple[int, RunManifest | None]:
    """Run one invocation; returns the exit code and the manifest (None on usage errors)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0), None
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    flags = {k: getattr(args, k) for k in ("grid_points", "truncation_sigmas", "tolerance_nats", "ba_gap_threshold", "ba_max_iterations", "seed", "output_format")}
    try:
        cfg = resolve_config(flags, args.config, environ)
        outcome = args.func(args, cfg)
    except (UsageError, ConfigError) as exc:
        print(f"entropica: error: {exc}", file=sys.stderr)
        return EXIT_USAGE, None
    manifest = RunManifest(
        command=" ".join(["entropica", *argv]),
        config=cfg,
        reports=outcome.reports,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    if cfg.output_format == "json":
        text = manifest.to_json() + "\n"
    elif cfg.output_format == "csv":
        text = _csv(*outcome.table) if outcome.table else ""
    else:
        text = _text(outcome.reports)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return outcome.exit_code, manifest


def main(argv=None) -> int:
    code, _ = run_subcommand(sys.argv[1:] if argv is None else list(argv))
    return code


if __name__ == "__main__":
    sys.exit(main())
