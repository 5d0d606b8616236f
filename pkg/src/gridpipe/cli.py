"""Command-line front end.

Exit codes: 0 success, 1 configuration or validation error, 2 data or
record error under fail-fast, 3 I/O failure. Diagnostics go to stderr;
data only ever goes to the output paths a job declares.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import config as config_mod
from .csvio import read_records
from .engine import recalculate
from .errors import ConfigError, DataError
from .pipeline import run_pipeline, compare_files, validate_headers
from .report import parse_job_line, aggregate, render_report, translation_table
from .sortio import sort_file
from .values import CellError, render_value

log = logging.getLogger("gridpipe")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridpipe",
        description="Stream delimited records through a formula workbook.",
    )
    parser.add_argument("--quiet", action="store_true", help="suppress progress and warnings")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="sort (if configured), stream, report (if configured)")
    run.add_argument("job", help="job file")
    run.add_argument("--progress", type=int, default=10_000, metavar="N",
                     help="progress line every N records (default 10000)")
    csv_group = run.add_mutually_exclusive_group()
    csv_group.add_argument("--strict-csv", action="store_true",
                           help="force rfc4180 field parsing")
    csv_group.add_argument("--naive-split", action="store_true",
                           help="force plain comma splitting")
    err_group = run.add_mutually_exclusive_group()
    err_group.add_argument("--fail-fast", action="store_true",
                           help="stop at the first bad record")
    err_group.add_argument("--lenient", action="store_true",
                           help="log bad records and continue")
    run.add_argument("--raw-out", metavar="PATH",
                     help="also dump the pre-report record table here")
    run.add_argument("--stats-json", metavar="PATH",
                     help="write run statistics as JSON")

    sort = sub.add_parser("sort", help="sort the job's input file")
    sort.add_argument("job")

    report = sub.add_parser("report", help="subtotal a data file per the job's spec")
    report.add_argument("job")
    report.add_argument("data", help="delimited data file with a header row")

    compare = sub.add_parser("compare", help="diff the job's two sorted files")
    compare.add_argument("job")

    check = sub.add_parser("check", help="validate the job and definition; touch no data")
    check.add_argument("job")

    evaluate = sub.add_parser("eval", help="evaluate one formula against a definition")
    evaluate.add_argument("definition")
    evaluate.add_argument("formula", help='e.g. "=ARABIC(""MCDLIX"")"')

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.ERROR if args.quiet else logging.WARNING,
        format="gridpipe: %(message)s",
    )
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def _dispatch(args) -> int:
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "sort":
        return _cmd_sort(args)
    if args.command == "report":
        return _cmd_report(args)
    if args.command == "compare":
        return _cmd_compare(args)
    if args.command == "check":
        return _cmd_check(args)
    if args.command == "eval":
        return _cmd_eval(args)
    raise AssertionError(f"unhandled command {args.command!r}")


def _cmd_run(args) -> int:
    job = config_mod.load_job(args.job)
    if job.pipeline is None:
        raise ConfigError(f"{args.job}: [pipeline] section is required by 'run'")
    spec = job.pipeline
    if args.strict_csv:
        spec.csv_mode = "rfc4180"
    elif args.naive_split:
        spec.csv_mode = "naive-split"
    if args.fail_fast:
        spec.on_record_error = "fail-fast"
    elif args.lenient:
        spec.on_record_error = "skip-and-log"

    if job.sort is not None:
        rows = sort_file(job.sort)
        if not args.quiet:
            print(f"sorted {rows} rows into {job.sort.output_path}", file=sys.stderr)

    progress = 0 if args.quiet else max(args.progress, 0)
    stats = run_pipeline(spec, job.workbook, progress_every=progress)
    if not args.quiet:
        print(
            f"read {stats.records_read}, wrote {stats.records_written}, "
            f"skipped {stats.records_skipped}, errored {stats.records_errored} "
            f"in {stats.elapsed:.2f}s",
            file=sys.stderr,
        )
    if args.stats_json:
        with open(args.stats_json, "w", encoding="utf-8") as handle:
            json.dump(stats.as_dict(), handle, indent=2)
            handle.write("\n")

    if args.raw_out:
        with open(spec.output_path, encoding="utf-8") as src, open(
            args.raw_out, "w", encoding="utf-8", newline="\n"
        ) as dst:
            dst.write(src.read())

    if job.subtotals is not None:
        _write_subtotals(job, spec.output_path, spec.csv_mode)
    return EXIT_OK


def _write_subtotals(job, data_path: str, csv_mode: str) -> None:
    sub = job.subtotals
    records = list(read_records(data_path, csv_mode))
    if not records:
        raise DataError(f"{data_path}: no header row to aggregate against")
    headers = records[0][1]
    translation = translation_table(headers)
    rows = [fields for _, fields in records[1:]]
    rendered = []
    for line in sub.job_lines:
        table = aggregate(rows, parse_job_line(line, translation))
        rendered.append(render_report(table, sub.format))
    text = "\n".join(rendered)
    if sub.output_path:
        with open(sub.output_path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _cmd_sort(args) -> int:
    job = config_mod.load_job(args.job)
    if job.sort is None:
        raise ConfigError(f"{args.job}: [sort] section is required by 'sort'")
    rows = sort_file(job.sort)
    print(f"sorted {rows} rows into {job.sort.output_path}", file=sys.stderr)
    return EXIT_OK


def _cmd_report(args) -> int:
    job = config_mod.load_job(args.job)
    if job.subtotals is None:
        raise ConfigError(f"{args.job}: [subtotals] section is required by 'report'")
    _write_subtotals(job, args.data, "rfc4180")
    return EXIT_OK


def _cmd_compare(args) -> int:
    job = config_mod.load_job(args.job)
    if job.compare is None:
        raise ConfigError(f"{args.job}: [compare] section is required by 'compare'")
    report = compare_files(job.compare, job.workbook)
    print(
        f"matched {report.matches}, left-only {len(report.left_only)}, "
        f"right-only {len(report.right_only)}",
        file=sys.stderr,
    )
    if job.compare.output_path is None:
        for line in report.lines():
            print(line)
    return EXIT_OK


def _cmd_check(args) -> int:
    job = config_mod.load_job(args.job)
    problems: list[str] = []

    if job.pipeline is not None and job.expected_headers:
        try:
            head = next(read_records(job.pipeline.input_path, job.pipeline.csv_mode), None)
        except OSError:
            head = None  # input absent is fine for a static check
        if head is not None:
            report = validate_headers(head[1], job.expected_headers)
            for warning in report.warnings:
                log.warning(warning)
            if not report.ok:
                problems.append(report.message())

    if job.subtotals is not None and job.expected_headers:
        translation = translation_table(job.expected_headers)
        for line in job.subtotals.job_lines:
            try:
                parse_job_line(line, translation)
            except ConfigError as exc:
                problems.append(str(exc))

    if job.sort is not None and job.expected_headers:
        translation = translation_table(job.expected_headers)
        for key in job.sort.keys:
            if isinstance(key.column, str) and key.column.strip().upper() not in translation:
                problems.append(f"sort key column {key.column!r} not in expected headers")

    if problems:
        for problem in problems:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    print("OK")
    return EXIT_OK


def _cmd_eval(args) -> int:
    wb = config_mod.load_definition(args.definition)
    recalculate(wb)
    from .engine import evaluate_source

    result = evaluate_source(wb, args.formula)
    if result.__class__ is CellError:
        print(result.code)
        return EXIT_DATA
    print(render_value(result))
    return EXIT_OK
