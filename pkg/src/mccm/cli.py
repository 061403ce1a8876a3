"""``mccm`` command-line front end.

Subcommands: analyze, simulate, estimate, sweep, verify.  Settings come from
flags, then from a JSON ``--config`` file, then from built-in defaults.
Exit codes: 0 success, 1 usage or input error, 2 numerical failure,
3 acceptance failure.
"""

from __future__ import annotations

import argparse
import glob
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__, kernels
from .cascade import MAX_LEAVES, _check_depth, sample_field, write_field
from .errors import ConfigError, MCCMError, NumericalError
from .estimators import decay_fit, entropy_dimension, frostman_stat, lp_dimension
from .regimes import dimension_report, hausdorff_dimension, fourier_dimension, is_nondegenerate
from .spectrum import fourier_all, read_spectrum, write_spectrum_bin, write_spectrum_csv
from .svg import line_plot
from .weights import Discrete, LogNormal, ModelSpec, TwoPoint, mean_w_log_w, validate

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 1, 2, 3

MODEL_KEYS = ("model", "sigma", "sigma2_over_logb", "x", "atoms", "b")
DEFAULTS = {
    "model": "lognormal", "sigma": None, "sigma2_over_logb": None, "x": None, "atoms": None,
    "b": 2, "depth": 10, "reps": 1, "seed": 0, "kmax": None, "out": None, "threads": None,
    "format": None,
}
COMMAND_DEFAULTS = {
    "analyze": {},
    "simulate": {"out": "mccm_out", "format": "csv", "fields": False},
    "estimate": {"spectra": None, "fields_in": None, "p": 2.0, "gamma": None, "block_base": None},
    "sweep": {"b": 3, "points": 25, "sigma_min": None, "sigma_max": None, "out": "mccm_sweep",
              "estimate": False, "depth": 10, "reps": 20},
    "verify": {"only": None, "scale": 1.0, "seed": 1, "out": "mccm_verify",
               "no_time_limits": False},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="JSON file of settings (flags take precedence)")
    p.add_argument("--model", choices=["lognormal", "twopoint", "discrete"], default=S)
    p.add_argument("--sigma", type=float, default=S)
    p.add_argument("--sigma2-over-logb", dest="sigma2_over_logb", type=float, default=S)
    p.add_argument("--x", type=float, default=S)
    p.add_argument("--atoms", default=S, help='"value:prob,value:prob,..."')
    p.add_argument("--b", type=int, default=S)
    p.add_argument("--depth", type=int, default=S)
    p.add_argument("--reps", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--kmax", type=int, default=S)
    p.add_argument("--out", default=S)
    p.add_argument("--threads", type=int, default=S)
    p.add_argument("--format", choices=["csv", "json", "bin"], default=S)


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    ap = _Parser(prog="mccm", description="Mandelbrot cascade measures: dimensions and spectra")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="closed-form dimension report")
    _common(p)

    p = sub.add_parser("simulate", help="sample fields and write spectra")
    _common(p)
    p.add_argument("--fields", action="store_true", default=S, help="also dump the leaf masses")

    p = sub.add_parser("estimate", help="estimators on dumped spectra or fields")
    _common(p)
    p.add_argument("--spectra", nargs="+", default=S, help="spectrum files or directories")
    p.add_argument("--fields-in", dest="fields_in", nargs="+", default=S, help="field dumps")
    p.add_argument("--p", type=float, default=S)
    p.add_argument("--gamma", type=float, default=S)
    p.add_argument("--block-base", dest="block_base", type=int, default=S)

    p = sub.add_parser("sweep", help="log-normal dimension curves over sigma")
    _common(p)
    p.add_argument("--points", type=int, default=S)
    p.add_argument("--sigma-min", dest="sigma_min", type=float, default=S)
    p.add_argument("--sigma-max", dest="sigma_max", type=float, default=S)
    p.add_argument("--estimate", action="store_true", default=S,
                   help="add Monte Carlo decay-fit estimates")

    p = sub.add_parser("verify", help="run the acceptance suite")
    _common(p)
    p.add_argument("--only", default=S, help="comma-separated criterion numbers")
    p.add_argument("--scale", type=float, default=S, help="multiply replicate counts")
    p.add_argument("--no-time-limits", dest="no_time_limits", action="store_true", default=S)
    return ap


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def resolve(command: str, flags: dict) -> dict:
    """Merge defaults, config file and flags (in increasing precedence)."""
    cfg = dict(DEFAULTS)
    cfg.update(COMMAND_DEFAULTS[command])
    path = flags.pop("config", None)
    if path is not None:
        file_cfg = load_config(path)
        for key, val in file_cfg.items():
            if key not in cfg:
                raise ConfigError(f"{path}: unknown field {key!r} for '{command}'")
            cfg[key] = val
    cfg.update(flags)
    return cfg


def _parse_atoms(atoms):
    if isinstance(atoms, list):
        return [(float(v), float(p)) for v, p in atoms]
    try:
        return [tuple(float(t) for t in item.split(":")) for item in str(atoms).split(",")]
    except ValueError as exc:
        raise ConfigError(f"field 'atoms': cannot parse {atoms!r} (want value:prob,...)") from exc


def build_spec(cfg: dict, check: bool = True) -> ModelSpec:
    kind = cfg["model"]
    b = cfg["b"]
    if not isinstance(b, int) or b < 2:
        raise ConfigError(f"field 'b': need an integer >= 2, got {b!r}")
    if kind == "lognormal":
        if cfg["sigma"] is not None:
            weight = LogNormal(float(cfg["sigma"]))
        elif cfg["sigma2_over_logb"] is not None:
            weight = LogNormal(math.sqrt(float(cfg["sigma2_over_logb"]) * math.log(b)))
        else:
            raise ConfigError("field 'sigma' (or 'sigma2_over_logb') is required for lognormal")
    elif kind == "twopoint":
        if cfg["x"] is None:
            raise ConfigError("field 'x' is required for twopoint")
        weight = TwoPoint(float(cfg["x"]))
    elif kind == "discrete":
        if cfg["atoms"] is None:
            raise ConfigError("field 'atoms' is required for discrete")
        weight = Discrete(_parse_atoms(cfg["atoms"]))
    else:
        raise ConfigError(f"field 'model': unknown kind {kind!r}")
    if check:
        validate(weight)
    return ModelSpec(weight, b)


def sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: str, command: str, cfg: dict, files, started: float) -> str:
    """Written last: a run is complete once its manifest exists."""
    manifest = {
        "command": command,
        "config": cfg,
        "seed": cfg.get("seed"),
        "version": __version__,
        "wall_time": round(time.time() - started, 3),
        "files": {os.path.relpath(f, out_dir): sha256(f) for f in sorted(files)},
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _emit(record: dict, fmt: str | None) -> None:
    if fmt == "json":
        print(json.dumps(record, indent=2, sort_keys=True))
    elif fmt == "csv":
        print("key,value")
        for k, v in record.items():
            print(f"{k},{_text(v)}")
    else:
        for k, v in record.items():
            print(f"{k}={_text(v)}")


def _text(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _finish(out_dir, command, cfg, files, started) -> None:
    if out_dir:
        write_manifest(out_dir, command, cfg, files, started)


# -- commands ----------------------------------------------------------------------------

def cmd_analyze(cfg: dict) -> int:
    spec = build_spec(cfg, check=True)
    if not is_nondegenerate(spec):
        record = {"nondegenerate": False, "e_w_log_w": mean_w_log_w(spec.weight),
                  "log_b": spec.log_b, "d_h": None, "d_f": None, "regime": None}
    else:
        record = dimension_report(spec).to_record()
    if cfg["format"] == "bin":
        raise ConfigError("field 'format': analyze writes csv or json, not bin")
    _emit(record, cfg["format"])
    if cfg["out"]:
        started = time.time()
        os.makedirs(cfg["out"], exist_ok=True)
        path = os.path.join(cfg["out"], "report.json")
        with open(path, "w") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
            fh.write("\n")
        _finish(cfg["out"], "analyze", cfg, [path], started)
    return EXIT_OK


def cmd_simulate(cfg: dict) -> int:
    from .montecarlo import replicate_seeds

    started = time.time()
    spec = build_spec(cfg)
    depth, reps = int(cfg["depth"]), int(cfg["reps"])
    if reps < 1:
        raise ConfigError("field 'reps': need at least 1")
    fmt = cfg["format"] or "csv"
    if fmt == "json":
        raise ConfigError("field 'format': simulate writes csv or bin")
    # fail before creating any output
    _check_depth(spec.b, depth, MAX_LEAVES)
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    files = []
    width = max(5, len(str(reps - 1)))
    for r, seed in enumerate(replicate_seeds(cfg["seed"], reps) if reps > 1 else [cfg["seed"]]):
        field = sample_field(spec, depth, seed)
        spec_out = fourier_all(field, cfg["kmax"])
        stem = os.path.join(out, f"spectrum_{r:0{width}d}")
        if fmt == "bin":
            write_spectrum_bin(stem + ".bin", spec_out)
            files.append(stem + ".bin")
        else:
            write_spectrum_csv(stem + ".csv", spec_out)
            files.append(stem + ".csv")
        if cfg["fields"]:
            path = os.path.join(out, f"field_{r:0{width}d}.bin")
            write_field(path, field)
            files.append(path)
    write_manifest(out, "simulate", cfg, files, started)
    print(f"wrote {len(files)} files to {out}")
    return EXIT_OK


def _expand(paths, pattern: str = "spectrum_*") -> list[str]:
    out = []
    for p in paths:
        if os.path.isdir(p):
            found = sorted(glob.glob(os.path.join(p, pattern)))
            if not found:
                raise FileNotFoundError(f"no {pattern} files in {p}")
            out.extend(found)
        elif not os.path.exists(p):
            raise FileNotFoundError(f"missing input file {p}")
        else:
            out.append(p)
    return out


def cmd_estimate(cfg: dict) -> int:
    from .cascade import CascadeField, read_field_dump

    started = time.time()
    record = {}
    if not cfg["spectra"] and not cfg["fields_in"]:
        raise ConfigError("estimate needs --spectra or --fields-in")
    if cfg["spectra"]:
        spectra = [read_spectrum(p) for p in _expand(cfg["spectra"])]
        fit = decay_fit(spectra, cfg["block_base"])
        record.update({"decay_estimate": fit.estimate, "decay_std_err": fit.std_err,
                       "decay_n_points": fit.n_points, "n_spectra": len(spectra)})
    if cfg["fields_in"]:
        lp, ent, fro = [], [], []
        for p in _expand(cfg["fields_in"], "field_*"):
            b, depth, seed, _, masses = read_field_dump(p)
            # the estimators read only b and the masses; the weight law is a placeholder
            field = CascadeField(ModelSpec(LogNormal(1.0), b), depth, seed, masses)
            lp.append(lp_dimension(field, float(cfg["p"])))
            ent.append(entropy_dimension(field))
            if cfg["gamma"] is not None:
                fro.append(frostman_stat(field, float(cfg["gamma"])))
        record.update({"lp_dimension": float(np.mean(lp)), "entropy_dimension": float(np.mean(ent)),
                       "n_fields": len(lp)})
        if fro:
            record["frostman_max"] = float(np.max(fro))
    _emit(record, cfg["format"])
    if cfg["out"]:
        os.makedirs(cfg["out"], exist_ok=True)
        path = os.path.join(cfg["out"], "estimate.json")
        with open(path, "w") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
            fh.write("\n")
        _finish(cfg["out"], "estimate", cfg, [path], started)
    return EXIT_OK


def sweep_grid(b: int, points: int, lo=None, hi=None) -> np.ndarray:
    """Sigma values strictly inside ``(0, sqrt(2 log b))``."""
    if points < 1:
        raise ConfigError("field 'points': the sigma grid is empty")
    top = math.sqrt(2.0 * math.log(b))
    lo = top / (points + 1) if lo is None else float(lo)
    hi = top * points / (points + 1) if hi is None else float(hi)
    if not (0 < lo <= hi < top):
        raise ConfigError(f"sigma grid [{lo}, {hi}] must lie inside (0, {top:.6g})")
    return np.linspace(lo, hi, points) if points > 1 else np.array([lo])


def cmd_sweep(cfg: dict) -> int:
    from .montecarlo import replicate_seeds

    started = time.time()
    b = int(cfg["b"])
    sigmas = sweep_grid(b, int(cfg["points"]), cfg["sigma_min"], cfg["sigma_max"])
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    rows = []
    for s in sigmas:
        spec = ModelSpec(LogNormal(float(s)), b)
        est = err = None
        if cfg["estimate"]:
            spectra = [fourier_all(sample_field(spec, int(cfg["depth"]), rs))
                       for rs in replicate_seeds(cfg["seed"], int(cfg["reps"]))]
            fit = decay_fit(spectra)
            est, err = fit.estimate, fit.std_err
        rows.append((float(s), hausdorff_dimension(spec), fourier_dimension(spec), est, err))
    csv_path = os.path.join(out, "sweep.csv")
    with open(csv_path, "w") as fh:
        fh.write("sigma,d_h,d_f_analytic,d_f_estimated,stderr\n")
        for row in rows:
            fh.write(",".join("" if v is None else f"{v:.17g}" for v in row) + "\n")
    xs = [r[0] for r in rows]
    series = [("D_H", xs, [r[1] for r in rows]), ("D_F", xs, [r[2] for r in rows])]
    if cfg["estimate"]:
        series.append(("D_F estimate", xs, [r[3] for r in rows]))
    svg_path = os.path.join(out, "sweep.svg")
    with open(svg_path, "w") as fh:
        fh.write(line_plot(series, f"log-normal cascade, b = {b}", "sigma", "dimension"))
    write_manifest(out, "sweep", cfg, [csv_path, svg_path], started)
    print(f"wrote {csv_path} and {svg_path}")
    return EXIT_OK


def cmd_verify(cfg: dict) -> int:
    from . import verify

    started = time.time()
    only = cfg["only"]
    if only is None:
        numbers = sorted(verify.CRITERIA)
    else:
        try:
            numbers = [int(t) for t in str(only).split(",") if t.strip()]
        except ValueError as exc:
            raise ConfigError(f"field 'only': cannot parse {only!r}") from exc
        bad = [k for k in numbers if k not in verify.CRITERIA]
        if bad or not numbers:
            raise ConfigError(f"field 'only': unknown criteria {bad or only!r}")
    ctx = verify.Context(seed=int(cfg["seed"]), scale=float(cfg["scale"]), threads=cfg["threads"])
    outcomes = verify.run_suite(numbers, ctx, time_limits=not cfg["no_time_limits"],
                                echo=lambda line: print(line, flush=True))
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "results.json")
    with open(path, "w") as fh:
        json.dump(verify.results_record(outcomes), fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_manifest(out, "verify", cfg, [path], started)
    n_pass = sum(o.passed for o in outcomes)
    print(f"{n_pass}/{len(outcomes)} criteria passed")
    return EXIT_OK if n_pass == len(outcomes) else EXIT_ACCEPTANCE


COMMANDS = {"analyze": cmd_analyze, "simulate": cmd_simulate, "estimate": cmd_estimate,
            "sweep": cmd_sweep, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    try:
        cfg = resolve(command, args)
        kernels.set_threads(cfg["threads"])
        return COMMANDS[command](cfg)
    except NumericalError as exc:
        print(f"mccm {command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (MCCMError, ValueError, OSError) as exc:
        print(f"mccm {command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
