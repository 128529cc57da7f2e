"""Command-line front end.

Subcommands::

    sample          draw one structure and print it as JSON
    stratify        stratify a structure file from a root
    estimate        Monte Carlo estimate of Prob(G_n |= sentence)
    verify-bounds   level-size bound verification
    survey-valency  R2 out-degree concentration survey
    survey-heights  height survey with the log2(log2(n)) floor
    convergence     estimate across a grid of >= 3 sizes

Configuration may come from ``--config FILE`` (JSON) with individual flags
overriding file values.  Exit codes: 0 success, 1 invalid arguments or
config, 2 runtime failure, 3 a ``--assert``'ed check failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .experiment import (
    ConfigError,
    ExperimentConfig,
    OutputSpec,
    config_from_json_dict,
    convergence_table,
    estimate_prob,
    height_survey,
    trial_stream,
    valency_survey,
    verify_level_bounds,
)
from .interpretation import format_sentence
from .sampler import (
    DoubleDigraph,
    Graph,
    model_from_json_dict,
    sample_model,
    structure_from_json_dict,
)
from .stratification import adjacency_view, stratify
from . import tables

__all__ = ["run", "main", "load_config"]

_DEFAULTS = {
    "model": {"kind": "double-alpha", "alpha1": 0.1, "alpha2": 0.2},
    "n_grid": [16, 32, 64],
    "trials": 100,
    "master_seed": 0,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would sys.exit(2); we want 1
        raise _UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=["gnp", "power-law", "double-alpha"])
    p.add_argument("--p", type=float, help="edge probability (gnp)")
    p.add_argument("--alpha", type=float, help="power-law exponent")
    p.add_argument("--alpha1", type=float, help="R1 exponent offset (double-alpha)")
    p.add_argument("--alpha2", type=float, help="R2 exponent offset (double-alpha)")


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    _add_model_flags(p)
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--n-grid", help="comma-separated node counts, e.g. 256,512,1024")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--sentence", help="canonical sentence string")
    p.add_argument("--slack", type=float, help="slack constant C for level bounds")
    p.add_argument("--roots", help="root policy: 'all' or 'sample:<r>'")
    p.add_argument("--lazy", action="store_true", default=None,
                   help="stratify over deferred edge revelation")
    p.add_argument("--threads", type=int, help="worker cap; never changes results")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=["csv", "json"], dest="fmt")
    p.add_argument("--assert", dest="asserts",
                   help="comma-separated acceptance checks; exit 3 on failure")


def _build_parser() -> _Parser:
    parser = _Parser(prog="stratlab", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("sample", parser_class=_Parser,
                       help="draw one structure and print it as JSON")
    _add_model_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"], dest="fmt")

    p = sub.add_parser("stratify", parser_class=_Parser,
                       help="stratify a structure file from a root")
    p.add_argument("--in", dest="infile", required=True, help="structure JSON file")
    p.add_argument("--root", type=int, required=True)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"], dest="fmt")

    for name, help_text in (
        ("estimate", "Monte Carlo estimate of Prob(G_n |= sentence)"),
        ("verify-bounds", "level-size bound verification"),
        ("survey-valency", "R2 out-degree concentration survey"),
        ("survey-heights", "height survey against the log2(log2(n)) floor"),
        ("convergence", "estimates across a grid of >= 3 sizes"),
    ):
        p = sub.add_parser(name, parser_class=_Parser, help=help_text)
        _add_experiment_flags(p)
    return parser


# ---------------------------------------------------------------------------
# Config resolution


def load_config(path: str) -> ExperimentConfig:
    """Load and validate a JSON experiment config, reporting every violation
    with its field path."""
    return config_from_json_dict(_read_config_dict(path))


def _read_config_dict(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            d = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError([f"config file: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config file: invalid JSON: {exc}"]) from exc
    if not isinstance(d, dict):
        raise ConfigError(["config file: top level must be a JSON object"])
    return d


def _model_dict_from_flags(args, base: Optional[dict]) -> Optional[dict]:
    flags = {
        "p": args.p, "alpha": args.alpha, "alpha1": args.alpha1, "alpha2": args.alpha2,
    }
    if args.model is None and all(v is None for v in flags.values()):
        return base
    model = dict(base) if base else {}
    if args.model is not None and model.get("kind") != args.model:
        model = {"kind": args.model}
    model.setdefault("kind", _DEFAULTS["model"]["kind"])
    for key, value in flags.items():
        if value is not None:
            model[key] = value
    if model["kind"] == "double-alpha":
        for key, default in (("alpha1", 0.1), ("alpha2", 0.2)):
            model.setdefault(key, default)
    return model


def _resolve_experiment_config(args) -> ExperimentConfig:
    base = _read_config_dict(args.config) if args.config else {}
    merged = dict(_DEFAULTS)
    merged.update(base)
    merged["model"] = _model_dict_from_flags(args, merged.get("model"))
    if args.n_grid is not None:
        try:
            merged["n_grid"] = [int(x) for x in args.n_grid.split(",") if x.strip()]
        except ValueError:
            raise ConfigError([f"n_grid: not a comma-separated integer list: {args.n_grid!r}"])
    if args.trials is not None:
        merged["trials"] = args.trials
    if args.seed is not None:
        merged["master_seed"] = args.seed
    if args.sentence is not None:
        merged["sentence"] = args.sentence
    if args.slack is not None:
        merged["slack_c"] = args.slack
    if args.roots is not None:
        merged["root_policy"] = args.roots
    if args.lazy is not None:
        merged["lazy"] = args.lazy
    if args.threads is not None:
        merged["workers"] = args.threads
    if args.out is not None or args.fmt is not None:
        fmt = args.fmt or "csv"
        merged["output"] = {"path": args.out or "-", "format": fmt}
    return config_from_json_dict(merged)


# ---------------------------------------------------------------------------
# Assert checks


def _parse_number(token: str, key: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise _UsageError(f"--assert {key}: expected a number, got {token!r}")


def _check_asserts(command: str, spec: str, result, cfg: ExperimentConfig) -> list[str]:
    failures = []
    for token in (t.strip() for t in spec.split(",") if t.strip()):
        key, _, value = token.partition("=")
        if command in ("estimate", "convergence") and key == "p-min":
            x = _parse_number(value, key)
            for e in result:
                if e.p_hat < x:
                    failures.append(f"p-min: p_hat {e.p_hat} < {x} at n={e.n}")
        elif command in ("estimate", "convergence") and key == "halfwidth-max":
            x = _parse_number(value, key)
            for e in result:
                if e.half_width > x:
                    failures.append(f"halfwidth-max: {e.half_width} > {x} at n={e.n}")
        elif command == "verify-bounds" and key == "within-min":
            x = _parse_number(value, key)
            for block in result.per_n:
                if block.frac_within_cc < x:
                    failures.append(
                        f"within-min: fraction {block.frac_within_cc} < {x} at n={block.n}"
                    )
        elif command == "verify-bounds" and key == "c1-rate-nonincreasing":
            rates = [block.c1_violation_rate for block in result.per_n]
            if any(a < b for a, b in zip(rates, rates[1:])):
                failures.append(f"c1-rate-nonincreasing: rates {rates} increase")
        elif command == "survey-heights" and key == "median-meets-floor":
            for block in result.per_n:
                if block.floor_loglog is not None and block.median_height < block.floor_loglog:
                    failures.append(
                        f"median-meets-floor: median {block.median_height} < "
                        f"{block.floor_loglog} at n={block.n}"
                    )
        elif command == "survey-heights" and key == "floor-frac-nondecreasing":
            fracs = [b.frac_meeting_floor for b in result.per_n if b.frac_meeting_floor is not None]
            if any(a > b for a, b in zip(fracs, fracs[1:])):
                failures.append(f"floor-frac-nondecreasing: fractions {fracs} decrease")
        elif command == "survey-valency" and key == "band-min":
            x = _parse_number(value, key)
            for block in result.per_n:
                if block.frac_in_band < x:
                    failures.append(
                        f"band-min: fraction {block.frac_in_band} < {x} at n={block.n}"
                    )
        elif command == "survey-valency" and key == "mean-rel-err-max":
            x = _parse_number(value, key)
            pair = cfg.pair
            for block in result.per_n:
                expected = (block.n - 1) * float(block.n) ** (pair.alpha2 - 1.0)
                err = abs(block.mean_deg2 - expected) / expected if expected else 0.0
                if err > x:
                    failures.append(
                        f"mean-rel-err-max: relative error {err} > {x} at n={block.n}"
                    )
        else:
            raise _UsageError(f"--assert: unknown check {token!r} for {command}")
    return failures


# ---------------------------------------------------------------------------
# Output plumbing


def _structure_json(obj) -> str:
    return json.dumps(obj.to_json_dict(), separators=(",", ":")) + "\n"


def _emit(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _emit_table(cfg: ExperimentConfig, header, rows) -> None:
    spec = cfg.output or OutputSpec(path="-", format="csv")
    text = tables.table_text(header, rows, spec.format, cfg.to_json_dict())
    _emit(text, spec.path)


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_sample(args) -> int:
    if args.fmt == "csv":
        raise _UsageError("sample output is a single structure; only --format json applies")
    model = model_from_json_dict(_model_dict_from_flags(args, _DEFAULTS["model"]))
    if args.n < 1:
        raise _UsageError(f"--n must be >= 1, got {args.n}")
    stream = trial_stream(args.seed, args.n, 0).child("structure")
    g = sample_model(model, args.n, stream)
    _emit(_structure_json(g), args.out)
    return 0


def _cmd_stratify(args) -> int:
    if args.fmt == "csv":
        raise _UsageError("stratify output is a single stratification; only --format json applies")
    try:
        with open(args.infile, "r", encoding="utf-8") as fh:
            structure = structure_from_json_dict(json.load(fh))
    except FileNotFoundError as exc:
        raise _UsageError(f"--in: {exc}")
    except (json.JSONDecodeError, ValueError, KeyError, TypeError) as exc:
        raise _UsageError(f"--in: invalid structure file: {exc}")
    if not (1 <= args.root <= structure.n):
        raise _UsageError(f"--root {args.root} outside 1..{structure.n}")
    # An undirected graph is stratified through the formula-view hook with
    # both relations defaulting to the edge relation itself.
    view = adjacency_view(structure) if isinstance(structure, Graph) else structure
    s = stratify(view, args.root)
    _emit(_structure_json(s), args.out)
    return 0


_SURVEYS = {
    "estimate": (estimate_prob, tables.PROB_HEADER, tables.prob_rows),
    "convergence": (convergence_table, tables.PROB_HEADER, tables.prob_rows),
    "verify-bounds": (verify_level_bounds, tables.BOUNDS_HEADER, tables.bounds_rows),
    "survey-valency": (valency_survey, tables.VALENCY_HEADER, tables.valency_rows),
    "survey-heights": (height_survey, tables.HEIGHTS_HEADER, tables.heights_rows),
}


def _cmd_survey(command: str, args) -> int:
    cfg = _resolve_experiment_config(args)
    if command in ("estimate", "convergence") and cfg.sentence is None:
        raise ConfigError(["sentence: required for this command (--sentence)"])
    if command in ("verify-bounds", "survey-valency", "survey-heights") and cfg.pair is None:
        raise ConfigError([f"model: {command} requires the double-alpha model"])
    runner, header, to_rows = _SURVEYS[command]
    result = runner(cfg)
    if command in ("estimate", "convergence"):
        rows = to_rows(result, cfg)
    else:
        rows = to_rows(result)
    _emit_table(cfg, header, rows)
    if args.asserts:
        failures = _check_asserts(command, args.asserts, result, cfg)
        if failures:
            for failure in failures:
                print(f"assert failed: {failure}", file=sys.stderr)
            return 3
    return 0


def run(argv: Sequence[str]) -> int:
    """Parse and dispatch; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
        if args.command is None:
            raise _UsageError(parser.format_usage())
        if args.command == "sample":
            return _cmd_sample(args)
        if args.command == "stratify":
            return _cmd_stratify(args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure during sample/stratify
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        return _cmd_survey(args.command, args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
