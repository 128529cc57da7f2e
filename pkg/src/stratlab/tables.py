"""Table serialization: CSV files and their JSON mirrors.

One row per record, header row required.  The JSON mirror of each table uses
identical field names and echoes the effective experiment configuration
under ``"config"``.  Formatting is deterministic (shortest round-trip float
representation), so identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
from typing import IO, Iterable, Optional, Sequence

from .experiment import (
    BoundsReport,
    ExperimentConfig,
    HeightSurvey,
    ProbEstimate,
    ValencyReport,
)
from .interpretation import format_sentence

__all__ = [
    "PROB_HEADER",
    "BOUNDS_HEADER",
    "VALENCY_HEADER",
    "HEIGHTS_HEADER",
    "prob_rows",
    "bounds_rows",
    "valency_rows",
    "heights_rows",
    "write_table",
    "table_text",
]

PROB_HEADER = ("n", "trials", "successes", "p_hat", "ci_low", "ci_high", "sentence", "seed")
BOUNDS_HEADER = (
    "n", "trial", "root", "k", "level_size",
    "bound_c1", "bound_cC", "threshold_mid", "within",
)
VALENCY_HEADER = ("n", "trials", "mean_deg2", "target", "band_lo", "band_hi", "frac_in_band")
HEIGHTS_HEADER = ("n", "trial", "height", "floor_loglog", "meets_floor")


def prob_rows(estimates: Sequence[ProbEstimate], cfg: ExperimentConfig) -> Iterable[tuple]:
    sentence = format_sentence(cfg.sentence) if cfg.sentence else ""
    for e in estimates:
        yield (e.n, e.trials, e.successes, e.p_hat, e.ci_low, e.ci_high, sentence, cfg.master_seed)


def bounds_rows(report: BoundsReport) -> Iterable[tuple]:
    return report.iter_rows()


def valency_rows(report: ValencyReport) -> Iterable[tuple]:
    return report.iter_rows()


def heights_rows(report: HeightSurvey) -> Iterable[tuple]:
    return report.iter_rows()


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _json_cell(value):
    return value


def write_table(
    out: IO[str],
    header: Sequence[str],
    rows: Iterable[tuple],
    fmt: str,
    config: Optional[dict] = None,
) -> None:
    """Stream a table to ``out`` as CSV or as its JSON mirror.

    Rows are consumed lazily, so arbitrarily long bounds tables write in
    constant memory.
    """
    if fmt == "csv":
        out.write(",".join(header) + "\n")
        for row in rows:
            out.write(",".join(_csv_cell(v) for v in row) + "\n")
    elif fmt == "json":
        out.write('{"config": ')
        out.write(json.dumps(config, separators=(",", ":")))
        out.write(', "rows": [')
        first = True
        for row in rows:
            if not first:
                out.write(",")
            first = False
            out.write(json.dumps(dict(zip(header, map(_json_cell, row))), separators=(",", ":")))
        out.write("]}\n")
    else:
        raise ValueError(f"unknown table format {fmt!r}")


def table_text(
    header: Sequence[str],
    rows: Iterable[tuple],
    fmt: str,
    config: Optional[dict] = None,
) -> str:
    import io

    buf = io.StringIO()
    write_table(buf, header, rows, fmt, config)
    return buf.getvalue()
