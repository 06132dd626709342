import json
import logging
import os

from .meta import plot_csv
from .metrics import layer_columns, correlation_flow
from .utils import csv_text, atomic_write, formatTime

log = logging.getLogger(__name__)

flow_columns = ["layer_id", "name", "slice", "alpha", "log_spectral"]
histogram_columns = ["bin_left", "bin_right", "count"]


def to_json(data):
    """ Canonical JSON text: sorted keys, two-space indent, trailing
        newline
    """
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


class AnalysisReport(dict):
    """ Everything an ``analyze`` run produced for one model

        :param str model_id: Model the report is about
        :param dict config: Config echo of the run
        :param list layers: :class:`swa.metrics.LayerMetrics`
        :param ModelMetrics summary: Model-level metrics
        :param list skipped: Skip report of the extraction
        :param str digest: ``sha256`` of the weight file
        :param str version: Version of this tool
    """
    def __init__(self, model_id, config, layers, summary, skipped=(),
                 digest=None, version=None, generated_at=None):
        summary = dict(summary)
        collapse = summary.pop("scale_collapse_report", None)
        super(AnalysisReport, self).__init__(
            model_id=model_id,
            config=dict(config),
            layers=[l.row() if hasattr(l, "row") else dict(l) for l in layers],
            summary=summary,
            skipped=list(skipped),
            scale_collapse_report=collapse,
            input_sha256=digest,
            version=version,
            generated_at=generated_at or formatTime(),
        )
        self.layer_metrics = list(layers)

    def json(self):
        return to_json(self)

    def layers_csv(self):
        return csv_text(layer_columns, self["layers"])

    def flow_csv(self):
        return csv_text(flow_columns, correlation_flow(self.layer_metrics))

    def write(self, output_dir=".", fmt="both"):
        """ Write ``<model>.report.json`` (``json``/``both``), and
            ``<model>.layers.csv`` plus ``<model>.flow.csv``
            (``csv``/``both``)

            :returns: list of written paths
        """
        base = os.path.join(output_dir, self["model_id"])
        paths = []
        if fmt in ["json", "both"]:
            paths.append(atomic_write(base + ".report.json", self.json()))
        if fmt in ["csv", "both"]:
            paths.append(atomic_write(base + ".layers.csv", self.layers_csv()))
            paths.append(atomic_write(base + ".flow.csv", self.flow_csv()))
        return paths


def histogram_csv(hist):
    return csv_text(histogram_columns, hist.rows())


def write_esd(output_dir, model_id, layer, slice_index, hist, fit, overlay=None):
    """ Histogram CSV of one layer's spectrum plus a JSON sidecar with
        the fit parameters for drawing the power law over it
    """
    stem = "%s.%s.%d" % (model_id, layer.replace(os.sep, "_"), slice_index)
    base = os.path.join(output_dir, stem)
    sidecar = {
        "model_id": model_id,
        "layer": layer,
        "slice": slice_index,
        "log_scaled": hist.log_scaled,
        "n_eigenvalues": hist.total,
        "fit": dict(fit) if fit is not None else None,
        "overlay": overlay,
    }
    return [
        atomic_write(base + ".esd.csv", histogram_csv(hist)),
        atomic_write(base + ".esd.json", to_json(sidecar)),
    ]


def write_histogram(output_dir, model_id, field, hist):
    base = os.path.join(output_dir, "%s.%s.hist" % (model_id, field))
    return [atomic_write(base + ".csv", histogram_csv(hist))]


def write_compare(output_dir, baseline_id, variant_id, comparison):
    path = os.path.join(output_dir, "%s.vs.%s.compare.json" % (baseline_id, variant_id))
    data = dict(comparison, baseline=baseline_id, variant=variant_id)
    return [atomic_write(path, to_json(data))]


def write_regression(output_dir, result):
    """ ``<series>.<metric>.regress.json`` and the matching plot CSV
    """
    base = os.path.join(output_dir, "%s.%s" % (result["series"], result["metric_name"]))
    return [
        atomic_write(base + ".regress.json", to_json(result)),
        atomic_write(base + ".plot.csv", plot_csv(result)),
    ]
