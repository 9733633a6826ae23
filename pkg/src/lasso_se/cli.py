"""Command-line front end: ``lasso-se <command> [options]``.

Experiment settings come from a flat ``key=value`` file (``--config``) and
may be overridden with repeated ``--set key=value``.  Results are written
as CSV to ``--out`` (standard output when omitted).

Exit codes: 0 success, 2 bad configuration or arguments, 3 numerical
failure, 4 I/O error.
"""

import argparse
import io
import math
import sys
import time
from dataclasses import fields

import numpy as np

from . import experiments as ex
from . import selection
from . import state_evolution as se
from .errors import ConfigError, DomainError, NumericError
from .mmse import MmsePrior, mmse_limit

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

COMMANDS = ("se-curve", "run", "delta-sweep", "sparsity-sweep", "mmse-curve", "ladder-demo", "selftest")

_OPTIONAL_FLOATS = ("lambda_min", "lambda_max", "minimax_s0")
_INTS = ("N", "lambda_count", "folds", "replicates", "seed", "se_atoms", "w2_points", "w2_directions")
_FLOATS = ("delta", "sigma", "phi")
_CHOICES = {"design": ("iid", "ar"), "sure_sigma_source": ("true", "estimated")}

CONFIG_KEYS = tuple(f.name for f in fields(ex.ExperimentConfig))


def _convert(key, raw):
    raw = raw.strip()
    if key in _INTS:
        return int(raw)
    if key in _FLOATS:
        return float(raw)
    if key in _OPTIONAL_FLOATS:
        return None if raw.lower() in ("", "auto", "none") else float(raw)
    if key == "lambda_values":
        if raw.lower() in ("", "auto", "none"):
            return None
        return tuple(float(v) for v in raw.split(","))
    if key == "prior":
        return ex.PriorSpec.parse(raw)
    if key in _CHOICES:
        if raw not in _CHOICES[key]:
            raise ValueError(f"expected one of {', '.join(_CHOICES[key])}")
        return raw
    raise KeyError(key)


def parse_config(text, overrides=()):
    """Build an ``ExperimentConfig`` from ``key=value`` text.

    Blank lines and ``#`` comments are ignored.  Unknown keys, repeated
    keys, malformed values and out-of-range values raise ``ConfigError``
    with the offending line number.  ``overrides`` are extra ``key=value``
    strings applied after the text.
    """
    values, where = {}, {}

    def at(lineno):
        return f"line {lineno}" if isinstance(lineno, int) else lineno

    lines = [(i + 1, line) for i, line in enumerate(text.splitlines())]
    lines += [(f"--set #{j + 1}", o) for j, o in enumerate(overrides)]
    for lineno, line in lines:
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, eq, raw = body.partition("=")
        key = key.strip()
        if not eq:
            raise ConfigError(f"{at(lineno)}: expected key=value, got {body!r}")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{at(lineno)}: unknown key {key!r}; valid keys: {', '.join(CONFIG_KEYS)}")
        if key in values and isinstance(lineno, int):
            raise ConfigError(f"{at(lineno)}: key {key!r} already set on line {where[key]}")
        try:
            values[key] = _convert(key, raw)
        except ConfigError as exc:
            raise ConfigError(f"{at(lineno)}: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"{at(lineno)}: bad value for {key}: {raw.strip()!r} ({exc})") from None
        where[key] = lineno
    try:
        return ex.ExperimentConfig(**values)
    except ConfigError as exc:
        bad = [k for k in values if k in str(exc)]
        loc = f"{at(where[bad[0]])}: " if bad else ""
        raise ConfigError(f"{loc}{exc}") from None


def serialize_config(config):
    """Inverse of ``parse_config``: one ``key=value`` line per field."""
    out = []
    for f in fields(config):
        v = getattr(config, f.name)
        if v is None:
            text = "auto"
        elif f.name == "lambda_values":
            text = ",".join(repr(float(x)) for x in v)
        elif isinstance(v, float):
            text = repr(v)
        else:
            text = str(v)
        out.append(f"{f.name}={text}")
    return "\n".join(out) + "\n"


def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.12g}"


def csv_text(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def emit_csv(records, path, key=None):
    """Write run records with the fixed column schema.

    ``key`` is an optional ``(name, values)`` pair adding a leading column,
    one value per record (used by the sweeps).  Numbers use 12 significant
    digits and lines end in LF.
    """
    if not records:
        raise ConfigError("no records to write")
    header = list(ex.CSV_COLUMNS)
    rows = [r.row() for r in records]
    if key is not None:
        name, vals = key
        header.insert(0, name)
        rows = [[v] + row for v, row in zip(vals, rows)]
    write_text(csv_text(header, rows), path)


def write_text(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def read_csv(path):
    """Header and float rows of a CSV written by this module."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    header = lines[0].split(",")
    rows = [[float(x) for x in line.split(",")] for line in lines[1:] if line]
    return header, rows


# ------------------------------------------------------------------- commands

def _load_config(args):
    text = ""
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    return parse_config(text, args.set or ())


def cmd_se_curve(args):
    cfg = _load_config(args)
    grid = cfg.lambda_grid()
    law = ex.population_law(cfg.prior, cfg.N, cfg.se_atoms)
    fps = se.se_path(law, cfg.effective_delta, cfg.sigma, grid)
    header = ["lambda", "beta_star", "tau_star", "alpha_star", "s_star", "risk_pred",
              "pred_err_pred", "kappa_star", "psi_value"]
    rows = [[fp.lam, fp.beta_star, fp.tau_star, fp.alpha_star, fp.s_star, fp.r_star,
             fp.p_star, fp.kappa_star, fp.psi_value] for fp in fps]
    write_text(csv_text(header, rows), args.out)


def _report_failures(results):
    for res in results:
        for rep, err in res.failures:
            print(f"replicate {rep} failed: {err}", file=sys.stderr)
    if all(not res.records for res in results):
        raise NumericError("every replicate failed")


def cmd_run(args):
    cfg = _load_config(args)
    res = ex.run_experiment(cfg)
    _report_failures([res])
    emit_csv(res.records, args.out)


def _sweep(args, key, values):
    cfg = _load_config(args)
    results = ex.sweep(cfg, key, values)
    _report_failures([r for _, r in results])
    recs, keys = [], []
    for v, res in results:
        for rec in sorted(res.records, key=lambda r: (r.lam, r.replicate)):
            recs.append(rec)
            keys.append(v)
    emit_csv(recs, args.out, key=(key, keys))


def _floats(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise ConfigError("empty value list")
    return vals


def cmd_delta_sweep(args):
    _sweep(args, "delta", _floats(args.deltas))


def cmd_sparsity_sweep(args):
    _sweep(args, "s", _floats(args.s_values))


def cmd_mmse_curve(args):
    """Bayes limit and best Lasso risk along a list of sparsity levels."""
    cfg = _load_config(args)
    header = ["s", "delta", "sigma", "mmse_limit", "min_risk_pred", "lambda_at_min", "lambda_minimax"]
    rows = []
    grid = cfg.lambda_grid()
    d = cfg.effective_delta
    for s in sorted(_floats(args.s_values)):
        mm = mmse_limit(d, cfg.sigma, MmsePrior(s))
        best = lam_best = lam_mm = float("nan")
        law = ex.population_law(ex.PriorSpec(s=s), cfg.N, cfg.se_atoms)
        try:
            fps = se.se_path(law, d, cfg.sigma, grid)
            risks = np.array([fp.r_star for fp in fps])
            i = selection.argmin_smallest(risks)
            best, lam_best = risks[i], grid[i]
        except NumericError as exc:
            print(f"s={s}: state evolution failed ({exc})", file=sys.stderr)
        if s > 0:
            try:
                lam_mm = selection.minimax_lambda(s, d, cfg.sigma)
            except NumericError:
                pass
        rows.append([s, d, cfg.sigma, mm, best, lam_best, lam_mm])
    write_text(csv_text(header, rows), args.out)


def cmd_ladder_demo(args):
    out = ex.ladder_demo(args.N, args.k, lam=args.lam, tau=args.tau, seed=args.seed,
                         replicates=args.replicates)
    rows = [[i, w, out["bound"], int(w >= out["bound"])] for i, w in enumerate(out["w2_values"])]
    write_text(csv_text(["replicate", "w2", "bound", "exceeds"], rows), args.out)
    print(f"fraction of replicates with W2 >= sqrt(k/N): {out['frac_exceeding']:.3f}", file=sys.stderr)


def cmd_selftest(args):
    from . import selftest
    passed, failed = selftest.run(verbose=True)
    print(f"selftest: {passed} passed, {failed} failed")
    if failed:
        raise NumericError(f"{failed} self-test check(s) failed")


HANDLERS = {
    "se-curve": cmd_se_curve,
    "run": cmd_run,
    "delta-sweep": cmd_delta_sweep,
    "sparsity-sweep": cmd_sparsity_sweep,
    "mmse-curve": cmd_mmse_curve,
    "ladder-demo": cmd_ladder_demo,
    "selftest": cmd_selftest,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    p = _Parser(prog="lasso-se", description="Lasso state evolution and Monte-Carlo validation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="key=value configuration file")
            sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                            help="override one configuration key (repeatable)")
        sp.add_argument("--out", default="-", help="output CSV path (default: stdout)")

    common(sub.add_parser("se-curve", help="state-evolution predictions along the lambda grid"))
    common(sub.add_parser("run", help="replicated simulation, one CSV row per (replicate, lambda)"))
    sp = sub.add_parser("delta-sweep", help="run once per sampling ratio")
    common(sp)
    sp.add_argument("--deltas", default="0.4,0.6,0.8,1.0")
    sp = sub.add_parser("sparsity-sweep", help="run once per sparsity level")
    common(sp)
    sp.add_argument("--s-values", default="0.05,0.1,0.15,0.2")
    sp = sub.add_parser("mmse-curve", help="Bayes limit against the best Lasso risk")
    common(sp)
    sp.add_argument("--s-values", default="0,0.05,0.1,0.15,0.2,0.25,0.3")
    sp = sub.add_parser("ladder-demo", help="sequence-model counterexample to uniform concentration")
    common(sp, config=False)
    sp.add_argument("--N", type=int, default=1000)
    sp.add_argument("--k", type=int, default=50)
    sp.add_argument("--lam", type=float, default=0.0)
    sp.add_argument("--tau", type=float, default=1.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--replicates", type=int, default=50)
    sub.add_parser("selftest", help="quick invariant checks")
    return p


def dispatch(argv=None):
    """Run one command and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
        t0 = time.perf_counter()
        HANDLERS[args.command](args)
        if getattr(args, "out", "-") not in (None, "-"):
            print(f"{args.command}: wrote {args.out} in {time.perf_counter() - t0:.1f}s", file=sys.stderr)
        return EXIT_OK
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def main(argv=None):
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()
