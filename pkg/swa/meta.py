import csv
import logging
import math
import os

import numpy as np
from funcy import group_by
from scipy import stats

from .exceptions import (
    ConstantPredictor,
    LengthMismatch,
    DegenerateResiduals,
    AllTied,
    TooFewModels,
    MissingMetric,
    MixedSeries,
    InvalidRecord,
)
from .utils import parallel_map, csv_text, atomic_write

log = logging.getLogger(__name__)

#: Model-level metrics a regression can use
METRIC_NAMES = [
    "log_frobenius", "log_spectral", "weighted_alpha",
    "log_alpha_norm", "alpha_bar",
]

#: The metrics of the standard comparison table
TABLE_METRICS = METRIC_NAMES[:4]

#: Columns of the model series CSV
RECORD_COLUMNS = ["series", "model_id", "reported_top1", "reported_top5"] + METRIC_NAMES

#: Regression targets: (column, converted to error)
TARGETS = {
    "top1_error": ("reported_top1", True),
    "top1_acc": ("reported_top1", False),
    "top5_error": ("reported_top5", True),
    "top5_acc": ("reported_top5", False),
}

TARGET_ON_METRIC = "target-on-metric"
METRIC_ON_TARGET = "metric-on-target"
DIRECTIONS = [TARGET_ON_METRIC, METRIC_ON_TARGET]

#: Columns of the regression plot CSV
PLOT_COLUMNS = ["x", "y", "y_hat", "band_lo", "band_hi"]


def _float_or_none(value):
    if value is None or value == "":
        return None
    return float(value)


class ModelRecord(dict):
    """ One trained model of an architecture series together with
        its reported accuracies (percent) and its model metrics

        :param str series: Architecture family, e.g. ``vgg``
        :param str model_id: Model name, unique within the series
        :param float reported_top1: Reported Top1 accuracy
        :param float reported_top5: Reported Top5 accuracy *(optional)*
        :param dict metrics: Flat ``metric name -> value`` map (or a
            :class:`swa.metrics.ModelMetrics`)
        :raises InvalidRecord: if a field is missing or out of range
    """
    def __init__(self, series, model_id, reported_top1, reported_top5=None, metrics=None):
        if not series or not model_id:
            raise InvalidRecord("Records need a series and a model_id")
        try:
            top1 = _float_or_none(reported_top1)
            top5 = _float_or_none(reported_top5)
        except ValueError:
            raise InvalidRecord("Accuracy of %s is not a number" % model_id)
        if top1 is None:
            raise InvalidRecord("%s has no reported Top1 accuracy" % model_id)
        for value in [top1, top5]:
            if value is not None and not 0 <= value <= 100:
                raise InvalidRecord("Accuracy %r of %s outside [0, 100]" % (value, model_id))

        metrics = metrics or {}
        if hasattr(metrics, "values_for_regression"):
            metrics = metrics.values_for_regression()
        values = {}
        for name in METRIC_NAMES:
            try:
                values[name] = _float_or_none(metrics.get(name))
            except ValueError:
                raise InvalidRecord("Metric %s of %s is not a number" % (name, model_id))

        super(ModelRecord, self).__init__(
            series=str(series),
            model_id=str(model_id),
            reported_top1=top1,
            reported_top5=top5,
            metrics=values,
        )

    @property
    def series(self):
        return self["series"]

    @property
    def model_id(self):
        return self["model_id"]

    def target(self, name):
        """ Value of a regression target, accuracy turned into error
            as ``100 - accuracy`` where needed
        """
        if name not in TARGETS:
            raise MissingMetric("Unknown target %s" % name)
        column, as_error = TARGETS[name]
        value = self[column]
        if value is None:
            return None
        return 100.0 - value if as_error else value

    def row(self):
        row = {k: self[k] for k in ["series", "model_id", "reported_top1", "reported_top5"]}
        row.update(self["metrics"])
        return row


class RegressionResult(dict):
    """ Result of regressing one metric against one target across a
        series. The plot data (points, fitted line and 95% confidence
        band) are kept in :attr:`plot`.
    """
    def __init__(self, *args, **kwargs):
        self.plot = kwargs.pop("plot", [])
        super(RegressionResult, self).__init__(*args, **kwargs)

    def table_row(self):
        return {k: self.get(k) for k in ["series", "metric_name", "n", "rmse", "r2", "kendall_tau"]}


def ols_regression(x, y):
    """ Ordinary least squares ``y = slope * x + intercept``

        ``rmse = sqrt(SS_res / n)`` and ``r2 = 1 - SS_res / SS_tot``.
        A constant ``y`` gives ``r2 = 1`` when the fit is exact.

        :returns: ``(slope, intercept, rmse, r2)``
        :raises LengthMismatch: if ``x`` and ``y`` differ in length
        :raises ConstantPredictor: if every ``x`` is equal
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise LengthMismatch("x has %d values, y has %d" % (x.size, y.size))
    if x.size < 3:
        raise TooFewModels("Need at least 3 points, got %d" % x.size)
    if np.all(x == x[0]):
        raise ConstantPredictor("All x values are equal")

    fit = stats.linregress(x, y)
    slope, intercept = float(fit.slope), float(fit.intercept)
    residuals = y - (slope * x + intercept)
    ss_res = float(np.sum(residuals ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    rmse = math.sqrt(ss_res / x.size)
    if ss_tot == 0:
        if not np.isclose(ss_res, 0.0, atol=1e-24):
            raise DegenerateResiduals("Constant y with non-zero residuals")
        return slope, intercept, rmse, 1.0
    return slope, intercept, rmse, 1.0 - ss_res / ss_tot


def kendall_tau(x, y):
    """ Kendall's tau-b rank correlation (ties corrected in both
        variables)

        :raises AllTied: if either variable has no two distinct values
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise LengthMismatch("x has %d values, y has %d" % (x.size, y.size))
    if x.size < 2:
        raise ValueError("Kendall tau needs at least two pairs")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise AllTied("Every pair is tied")
    return float(stats.kendalltau(x, y, variant="b")[0])


def confidence_band(x, y, slope, intercept, level=0.95):
    """ Pointwise confidence band of the mean response at every ``x``

        ``y_hat +- t(n - 2) * s * sqrt(1/n + (x - mean(x))^2 / Sxx)``
        with ``s^2 = SS_res / (n - 2)``.

        :returns: list of plot rows sorted by ``x``
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    y_hat = slope * x + intercept
    s = math.sqrt(float(np.sum((y - y_hat) ** 2)) / (n - 2))
    sxx = float(np.sum((x - np.mean(x)) ** 2))
    t = float(stats.t.ppf(0.5 + level / 2, n - 2))
    half = t * s * np.sqrt(1.0 / n + (x - np.mean(x)) ** 2 / sxx)
    rows = []
    for i in np.argsort(x, kind="stable"):
        rows.append({
            "x": float(x[i]), "y": float(y[i]), "y_hat": float(y_hat[i]),
            "band_lo": float(y_hat[i] - half[i]), "band_hi": float(y_hat[i] + half[i]),
        })
    return rows


def evaluate_metric(records, metric_name, target="top1_error",
                    direction=TARGET_ON_METRIC, exclude=(), series=None):
    """ Regress a target accuracy on a model metric across one series

        :param list records: :class:`ModelRecord` instances
        :param str metric_name: One of :attr:`METRIC_NAMES`
        :param str target: One of :attr:`TARGETS`
        :param str direction: ``target-on-metric`` (the accuracy is
            the dependent variable) or ``metric-on-target``
        :param list exclude: Model ids to leave out (manual outliers)
        :param str series: Only use records of this series
        :rtype: RegressionResult
        :raises MissingMetric: on unknown metric or target names
        :raises MixedSeries: if the records span several series
        :raises TooFewModels: with fewer than 3 usable records
    """
    if metric_name not in METRIC_NAMES:
        raise MissingMetric("Unknown metric %s" % metric_name)
    if target not in TARGETS:
        raise MissingMetric("Unknown target %s" % target)
    if direction not in DIRECTIONS:
        raise ValueError("direction must be one of %s" % ", ".join(DIRECTIONS))

    if series is not None:
        records = [r for r in records if r.series == series]
    names = sorted(set(r.series for r in records))
    if len(names) > 1:
        raise MixedSeries("Records span several series: %s" % ", ".join(names))

    excluded = set(exclude)
    pairs = []
    for r in records:
        if r.model_id in excluded:
            continue
        value, goal = r["metrics"].get(metric_name), r.target(target)
        if value is None or goal is None:
            log.info("%s lacks %s or %s" % (r.model_id, metric_name, target))
            continue
        pairs.append((value, goal, r.model_id))
    if len(pairs) < 3:
        raise TooFewModels("%d models carry %s and %s, at least 3 required" % (
            len(pairs), metric_name, target))

    # record order must not matter
    pairs.sort()
    if direction == TARGET_ON_METRIC:
        x = [p[0] for p in pairs]
        y = [p[1] for p in pairs]
    else:
        x = [p[1] for p in pairs]
        y = [p[0] for p in pairs]

    slope, intercept, rmse, r2 = ols_regression(x, y)
    return RegressionResult(
        series=names[0] if names else series,
        metric_name=metric_name,
        target=target,
        direction=direction,
        n=len(pairs),
        models=[p[2] for p in pairs],
        slope=slope,
        intercept=intercept,
        rmse=rmse,
        r2=r2,
        kendall_tau=kendall_tau(x, y),
        plot=confidence_band(x, y, slope, intercept),
    )


def evaluate_series(records, metrics=None, target="top1_error",
                    direction=TARGET_ON_METRIC, exclude=(), series=None, jobs=1):
    """ Evaluate every requested metric on every series. Series are
        worked on in parallel; results are ordered by series name,
        then by metric order.

        :param list metrics: Metric names (defaults to :attr:`TABLE_METRICS`)
        :param int jobs: Worker threads
        :rtype: list of :class:`RegressionResult`
    """
    metrics = list(metrics or TABLE_METRICS)
    groups = group_by(lambda r: r.series, records)
    if series is not None:
        if series not in groups:
            raise TooFewModels("No records of series %s" % series)
        groups = {series: groups[series]}

    def work(name):
        return [
            evaluate_metric(groups[name], m, target=target, direction=direction, exclude=exclude)
            for m in metrics
        ]

    results = []
    for batch in parallel_map(work, sorted(groups), jobs=jobs):
        results.extend(batch)
    return results


def summarize_results(results):
    """ Mean and standard deviation of RMSE, R² and Kendall-tau of
        every metric across series
    """
    summary = []
    by_metric = group_by(lambda r: r["metric_name"], results)
    for name in [m for m in METRIC_NAMES if m in by_metric]:
        group = by_metric[name]
        row = {"metric_name": name, "n_series": len(group)}
        for field in ["rmse", "r2", "kendall_tau"]:
            values = [r[field] for r in group]
            row[field + "_mean"] = float(np.mean(values))
            row[field + "_std"] = float(np.std(values))
        summary.append(row)
    return summary


def load_records(path):
    """ Read model records from a series CSV (header required)

        :raises InvalidRecord: on missing columns, bad values or
            duplicate model ids within a series
    """
    with open(path, newline="") as fp:
        reader = csv.DictReader(fp)
        missing = set(["series", "model_id", "reported_top1"]) - set(reader.fieldnames or [])
        if missing:
            raise InvalidRecord("%s lacks the columns %s" % (path, ", ".join(sorted(missing))))
        records = []
        seen = set()
        for row in reader:
            key = (row["series"], row["model_id"])
            if key in seen:
                raise InvalidRecord("Model %s appears twice in series %s" % (key[1], key[0]))
            seen.add(key)
            records.append(ModelRecord(
                row["series"], row["model_id"], row["reported_top1"],
                reported_top5=row.get("reported_top5"),
                metrics={m: row.get(m) for m in METRIC_NAMES},
            ))
    log.debug("Loaded %d records from %s" % (len(records), path))
    return records


def append_record(path, record):
    """ Add a record to a series CSV, creating the file with a header
        if it does not exist yet. An existing row of the same model in
        the same series is replaced.
    """
    records = load_records(path) if os.path.exists(path) else []
    records = [r for r in records
               if (r.series, r.model_id) != (record.series, record.model_id)]
    records.append(record)
    return atomic_write(path, csv_text(RECORD_COLUMNS, [r.row() for r in records]))


def plot_csv(result):
    """ The plot data of a :class:`RegressionResult` as CSV text
    """
    return csv_text(PLOT_COLUMNS, result.plot)


def results_table(results):
    """ One CSV row (RMSE, R², Kendall-tau) per series and metric
    """
    return csv_text(["series", "metric_name", "n", "rmse", "r2", "kendall_tau"],
                    [r.table_row() for r in results])
