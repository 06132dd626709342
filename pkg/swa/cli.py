import argparse
import json
import logging
import os
import sys

from swabase.exceptions import ContainerError

from . import __version__
from .auditor import Auditor
from .config import AnalysisConfig, tunables
from .exceptions import AnalysisError, ConfigError
from .instance import shared_auditor_instance, set_shared_auditor_instance
from .meta import (
    METRIC_NAMES,
    TABLE_METRICS,
    TARGETS,
    DIRECTIONS,
    TARGET_ON_METRIC,
    ModelRecord,
    append_record,
    evaluate_series,
    load_records,
    results_table,
    summarize_results,
)
from .report import write_esd, write_histogram, write_compare, write_regression, to_json
from .storage import configStorage
from .utils import csv_text, model_id_from_path

log = logging.getLogger(__name__)

verbosity_levels = ["WARNING", "INFO", "DEBUG"]


def analysis_config(args):
    """ Run configuration from the analysis flags of a command
    """
    return AnalysisConfig(
        config_file=args.config_file,
        min_size=args.min_size,
        min_tail=args.min_tail,
        exclude=args.exclude,
        include=args.include,
        skip_embeddings=args.skip_embeddings,
        log_base=args.log_base,
        conv_layout=args.conv_layout,
        conv_weighting=args.conv_weighting,
        jobs=args.jobs,
        order_file=args.order_file,
        format=args.format,
        normalize_by_n=args.normalize_by_n or None,
    )


def auditor_for(args):
    """ Make the auditor configured by the flags of a command the
        shared one
    """
    config = analysis_config(args)
    set_shared_auditor_instance(Auditor(config))
    return shared_auditor_instance()


def output_dir(args):
    directory = args.output_dir or "."
    if not os.path.isdir(directory):
        os.makedirs(directory)
    return directory


def print_paths(paths):
    for path in paths:
        print(path)


def cmd_analyze(args):
    auditor = auditor_for(args)
    for path in args.weights:
        report = auditor.analyze(path)
        print_paths(report.write(output_dir(args), auditor.config["format"]))
        if args.append_csv:
            if not args.series or args.top1 is None:
                raise ConfigError("--append-csv needs --series and --top1")
            append_record(args.append_csv, ModelRecord(
                args.series, report["model_id"], args.top1,
                reported_top5=args.top5,
                metrics={
                    "log_frobenius": report["summary"]["avg_log_frobenius"],
                    "log_spectral": report["summary"]["avg_log_spectral"],
                    "weighted_alpha": report["summary"]["weighted_alpha"],
                    "log_alpha_norm": report["summary"]["avg_log_alpha_norm"],
                    "alpha_bar": report["summary"]["alpha_bar"],
                },
            ))
    return 0


def cmd_esd(args):
    auditor = auditor_for(args)
    hist, fit, overlay = auditor.esd(
        args.weights, args.layer, slice_index=args.slice,
        bins=args.bins, log_scaled=args.log)
    print_paths(write_esd(
        output_dir(args), model_id_from_path(args.weights),
        args.layer, args.slice, hist, fit, overlay))
    return 0


def cmd_histogram(args):
    auditor = auditor_for(args)
    hist = auditor.histogram(args.weights, field=args.field, bins=args.bins)
    print_paths(write_histogram(
        output_dir(args), model_id_from_path(args.weights), args.field, hist))
    return 0


def cmd_compare(args):
    auditor = auditor_for(args)
    comparison = auditor.compare(args.baseline, args.variant)
    paths = write_compare(
        output_dir(args),
        model_id_from_path(args.baseline),
        model_id_from_path(args.variant),
        comparison)
    print_paths(paths)
    for flag in comparison["scale_collapse"]["flagged"]:
        log.warning("Scale collapse: %s[%d]" % (flag["name"], flag["slice"]))
    return 0


def cmd_regress(args):
    records = load_records(args.csv)
    if args.all_metrics:
        metrics = TABLE_METRICS
    else:
        metrics = args.metric or ["log_spectral"]
    jobs = AnalysisConfig(jobs=args.jobs)["jobs"]
    results = evaluate_series(
        records,
        metrics=metrics,
        target=args.target,
        direction=args.direction,
        exclude=args.exclude_model or [],
        series=args.series,
        jobs=jobs,
    )
    directory = output_dir(args)
    for result in results:
        print_paths(write_regression(directory, result))
    sys.stdout.write(results_table(results))
    if args.summary:
        summary = summarize_results(results)
        columns = ["metric_name", "n_series"] + [
            "%s_%s" % (f, s) for f in ["rmse", "r2", "kendall_tau"] for s in ["mean", "std"]]
        sys.stdout.write(csv_text(columns, summary))
    return 0


def cmd_config(args):
    print(to_json(dict(configStorage.items())), end="")
    return 0


def cmd_set(args):
    if args.key not in configStorage.config_defaults:
        raise ConfigError("Unknown setting %s" % args.key)
    if args.key in tunables:
        AnalysisConfig(**{args.key: args.value})
    elif args.value.upper() not in verbosity_levels + ["ERROR", "CRITICAL"]:
        raise ConfigError("Invalid log level %s" % args.value)
    configStorage[args.key] = args.value
    return 0


def cmd_unset(args):
    configStorage.delete(args.key)
    return 0


def add_analysis_flags(parser):
    parser.add_argument(
        "--min-size", type=int, default=None,
        help="Skip matrices whose smaller side is below this (default: 50)")
    parser.add_argument(
        "--exclude", action="append", default=None, metavar="PATTERN",
        help="Skip tensors matching this regular expression (repeatable)")
    parser.add_argument(
        "--include", action="append", default=None, metavar="PATTERN",
        help="Only analyze tensors matching this regular expression (repeatable)")
    parser.add_argument(
        "--skip-embeddings", dest="skip_embeddings", action="store_true", default=None,
        help="Leave embedding-like layers out of the model averages (default)")
    parser.add_argument(
        "--keep-embeddings", dest="skip_embeddings", action="store_false",
        help="Include embedding-like layers in the model averages")
    parser.add_argument(
        "--min-tail", type=int, default=None,
        help="Fewest eigenvalues a power-law tail may have (default: 5)")
    parser.add_argument(
        "--log-base", choices=["10", "e"], default=None,
        help="Logarithm of the norm metrics (default: 10)")
    parser.add_argument(
        "--conv-layout", choices=["oikk", "kkio"], default=None,
        help="Axis order of Conv2D kernels (default: oikk)")
    parser.add_argument(
        "--conv-weighting", choices=["per-matrix", "per-layer"], default=None,
        help="Weight of Conv2D slices in the model averages (default: per-matrix)")
    parser.add_argument(
        "--jobs", type=int, default=None,
        help="Worker threads, 0 for one per CPU (env: SWA_JOBS)")
    parser.add_argument(
        "--order-file", default=None,
        help="File listing tensor names in true depth order")
    parser.add_argument(
        "--config-file", default=None,
        help="YAML file with run settings")
    parser.add_argument(
        "--normalize-by-n", action="store_true", default=False,
        help="Use X = W^T W / N instead of W^T W")


def add_output_flags(parser):
    parser.add_argument(
        "--output-dir", default=None,
        help="Directory to write reports to (default: current directory)")


def get_parser():
    parser = argparse.ArgumentParser(
        prog="swa",
        description="Audit trained neural networks from their weights alone"
    )
    parser.add_argument(
        "--version", action="version", version="%(prog)s " + __version__)
    parser.add_argument(
        "-v", "--verbose", action="count", default=0,
        help="More output (repeat for debug output)")
    subparsers = parser.add_subparsers(help="sub-command help")

    """
        Command "analyze"
    """
    analyze = subparsers.add_parser("analyze", help="Analyze weight files and write reports")
    analyze.add_argument("weights", nargs="+", help="Weight files (.safetensors)")
    add_analysis_flags(analyze)
    add_output_flags(analyze)
    analyze.add_argument(
        "--format", choices=["json", "csv", "both"], default=None,
        help="Report formats to write (default: both)")
    analyze.add_argument(
        "--append-csv", default=None,
        help="Append the model metrics to this series CSV")
    analyze.add_argument("--series", default=None, help="Series of the model (with --append-csv)")
    analyze.add_argument("--top1", type=float, default=None, help="Reported Top1 accuracy")
    analyze.add_argument("--top5", type=float, default=None, help="Reported Top5 accuracy")
    analyze.set_defaults(command=cmd_analyze)

    """
        Command "esd"
    """
    esd = subparsers.add_parser("esd", help="Eigenvalue histogram of one layer")
    esd.add_argument("weights", help="Weight file (.safetensors)")
    esd.add_argument("--layer", required=True, help="Tensor name")
    esd.add_argument("--slice", type=int, default=0, help="Kernel position of a Conv2D layer")
    esd.add_argument("--bins", type=int, default=50, help="Number of bins")
    esd.add_argument("--log", action="store_true", help="Equal-width bins in log10")
    add_analysis_flags(esd)
    add_output_flags(esd)
    esd.set_defaults(command=cmd_esd, format=None)

    """
        Command "histogram"
    """
    histogram = subparsers.add_parser("histogram", help="Histogram of a per-layer metric")
    histogram.add_argument("weights", help="Weight file (.safetensors)")
    histogram.add_argument(
        "--field", default="alpha",
        choices=["alpha", "log_spectral", "log_frobenius", "log_alpha_norm",
                 "weighted_alpha_term", "ks_distance"],
        help="Metric to bin (default: alpha)")
    histogram.add_argument("--bins", type=int, default=20, help="Number of bins")
    add_analysis_flags(histogram)
    add_output_flags(histogram)
    histogram.set_defaults(command=cmd_histogram, format=None)

    """
        Command "compare"
    """
    compare = subparsers.add_parser("compare", help="Compare a baseline with a variant")
    compare.add_argument("baseline", help="Weight file of the baseline")
    compare.add_argument("variant", help="Weight file of the variant")
    add_analysis_flags(compare)
    add_output_flags(compare)
    compare.set_defaults(command=cmd_compare, format=None)

    """
        Command "regress"
    """
    regress = subparsers.add_parser("regress", help="Regress reported accuracies on model metrics")
    regress.add_argument("csv", help="Series CSV")
    regress.add_argument("--metric", action="append", default=None,
                         help="Metric to regress, one of %s (repeatable, default: log_spectral)" % ", ".join(METRIC_NAMES))
    regress.add_argument("--all-metrics", action="store_true",
                         help="Regress all four norm-based metrics")
    regress.add_argument("--target", choices=sorted(TARGETS), default="top1_error",
                         help="Dependent accuracy (default: top1_error)")
    regress.add_argument("--series", default=None, help="Only this series")
    regress.add_argument("--direction", choices=DIRECTIONS, default=TARGET_ON_METRIC,
                         help="Which variable is dependent (default: target-on-metric)")
    regress.add_argument("--exclude-model", action="append", default=None,
                         help="Leave this model out (repeatable)")
    regress.add_argument("--summary", action="store_true",
                         help="Also print mean and std of every metric across series")
    regress.add_argument("--jobs", type=int, default=None,
                         help="Worker threads, 0 for one per CPU (env: SWA_JOBS)")
    add_output_flags(regress)
    regress.set_defaults(command=cmd_regress)

    """
        Command "config"
    """
    config = subparsers.add_parser("config", help="Show the stored configuration")
    config.set_defaults(command=cmd_config)

    """
        Command "set"
    """
    setconfig = subparsers.add_parser("set", help="Store a configuration value")
    setconfig.add_argument("key", type=str, help="Configuration key")
    setconfig.add_argument("value", type=str, help="Configuration value")
    setconfig.set_defaults(command=cmd_set)

    """
        Command "unset"
    """
    unset = subparsers.add_parser("unset", help="Reset a configuration value to its default")
    unset.add_argument("key", type=str, help="Configuration key")
    unset.set_defaults(command=cmd_unset)

    return parser


def report_error(e, exit_code):
    sys.stderr.write(json.dumps({"error": e.__class__.__name__, "message": str(e)}) + "\n")
    return exit_code


def main(argv=None):
    parser = get_parser()
    args = parser.parse_args(argv)

    if args.verbose:
        level = verbosity_levels[min(args.verbose, len(verbosity_levels) - 1)]
    else:
        level = configStorage["log_level"] or "WARNING"
    logging.basicConfig(level=getattr(logging, str(level).upper(), logging.WARNING))

    if not hasattr(args, "command"):
        parser.print_help()
        return 1

    try:
        return args.command(args)
    except (ContainerError, AnalysisError) as e:
        return report_error(e, e.exit_code)
    except OSError as e:
        return report_error(e, 1)


if __name__ == "__main__":
    sys.exit(main())
