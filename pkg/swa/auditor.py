import logging

from swabase.container import load_file

from . import __version__

from .config import AnalysisConfig
from .exceptions import (
    AllZeroMatrix,
    SvdFailure,
    DegenerateTail,
    TooFewEigenvalues,
    UnknownLayer,
)
from .extraction import ExtractionConfig, extract_layer_matrices, load_order_file
from .metrics import layer_metrics, model_summary, compare_models, metric_histogram
from .plfit import fit_power_law, pdf_overlay
from .report import AnalysisReport
from .spectral import compute_esd, esd_histogram
from .utils import model_id_from_path, parallel_map, resolve_jobs

log = logging.getLogger(__name__)


class Auditor(object):
    """ Audit the quality of trained networks from their weights alone.

        :param AnalysisConfig config: Settings of the run *(optional)*
        :param kwargs: Used to build an :class:`AnalysisConfig` when
            ``config`` is not given

        The pipeline reads a weight file, cuts its tensors into layer
        matrices, computes each matrix's eigenvalue spectrum, fits a
        power law to the tail and averages the resulting metrics into
        model metrics:

        .. code-block:: python

            from swa import Auditor
            auditor = Auditor(min_size=20, exclude=["embed.*"])
            report = auditor.analyze("resnet20.safetensors")
            print(report["summary"]["alpha_bar"])

        Matrices are analyzed on a pool of ``jobs`` threads; results
        are always collected in traversal order.
    """
    def __init__(self, config=None, **kwargs):
        self.config = config or AnalysisConfig(**kwargs)
        self.extraction = ExtractionConfig.from_config(self.config)
        self.order = None
        if self.config["order_file"]:
            self.order = load_order_file(self.config["order_file"])

    @property
    def jobs(self):
        return resolve_jobs(self.config["jobs"])

    def load(self, path):
        return load_file(path)

    def extract(self, store, model_id="model"):
        return extract_layer_matrices(
            store, self.extraction, model_id=model_id, order=self.order)

    def fit(self, esd):
        """ Power-law fit of a spectrum, ``None`` if no fit is possible
        """
        short_tail = self.config["short_tail"]
        try:
            return fit_power_law(
                esd,
                min_tail=self.config["min_tail"],
                short_tail=20 if short_tail is None else short_tail,
            )
        except (DegenerateTail, TooFewEigenvalues) as e:
            name = esd.source.layer_name if esd.source is not None else "matrix"
            log.warning("Power-law fit of %s failed: %s" % (name, e))
            return None

    def spectrum(self, matrix):
        tolerance = self.config["zero_tolerance"]
        return compute_esd(
            matrix,
            tolerance=tolerance if tolerance is not None else 1e-10,
            normalize_by_n=bool(self.config["normalize_by_n"]),
        )

    def analyze_matrix(self, matrix):
        """ Metrics of a single :class:`swa.extraction.LayerMatrix`

            :returns: ``(LayerMetrics, None)`` or ``(None, reason)`` if
                the matrix has no usable spectrum
        """
        try:
            esd = self.spectrum(matrix)
        except AllZeroMatrix:
            return None, "all-zero-matrix"
        except SvdFailure as e:
            log.warning(str(e))
            return None, "svd-failure"
        return layer_metrics(esd, self.fit(esd), log_base=self.config["log_base"]), None

    def analyze_layers(self, path):
        """ Per-layer metrics of a weight file

            :returns: ``(store, layers, skipped)``
        """
        store = self.load(path)
        matrices = self.extract(store, model_id_from_path(path))
        skipped = list(matrices.skipped)
        layers = []
        results = parallel_map(self.analyze_matrix, matrices, jobs=self.jobs)
        for matrix, (metrics, reason) in zip(matrices, results):
            if metrics is None:
                log.info("Skipping %r: %s" % (matrix, reason))
                skipped.append({"tensor": matrix.layer_name, "slice": matrix.slice_index,
                                "reason": reason})
            else:
                layers.append(metrics)
        return store, layers, skipped

    def analyze(self, path, model_id=None):
        """ Run the full pipeline on one weight file

            :param str path: Path of the ``.safetensors`` file
            :param str model_id: Name of the model (derived from the
                file name by default)
            :rtype: AnalysisReport
        """
        store, layers, skipped = self.analyze_layers(path)
        summary = model_summary(layers, self.config, skipped=skipped)
        return AnalysisReport(
            model_id or model_id_from_path(path),
            self.config.echo(),
            layers,
            summary,
            skipped=skipped,
            digest=store.digest,
            version=__version__,
        )

    def esd(self, path, layer, slice_index=0, bins=50, log_scaled=False):
        """ Histogram of one layer's spectrum and its power-law fit

            :returns: ``(Histogram, PLFit or None, overlay)`` where
                ``overlay`` is the fitted density at the bin centers
            :raises UnknownLayer: if the layer is not among the
                analyzed matrices
        """
        store = self.load(path)
        matrices = self.extract(store, model_id_from_path(path))
        found = [m for m in matrices if m.key == (layer, slice_index)]
        if not found:
            reasons = [s["reason"] for s in matrices.skipped if s["tensor"] == layer]
            if reasons:
                raise UnknownLayer("Layer %s was skipped: %s" % (layer, reasons[0]))
            raise UnknownLayer("No analyzable layer %s[%d]" % (layer, slice_index))
        esd = self.spectrum(found[0])
        hist = esd_histogram(esd, bins, log_scaled)
        fit = self.fit(esd)
        overlay = pdf_overlay(fit, hist.centers()) if fit is not None else None
        return hist, fit, overlay

    def histogram(self, path, field="alpha", bins=20):
        """ Histogram of a per-layer metric across the model
        """
        _, layers, _ = self.analyze_layers(path)
        return metric_histogram(layers, field, bins)

    def compare(self, baseline_path, variant_path):
        """ Compare two weight files of the same architecture layer by
            layer

            :raises NoMatchedLayers: if they share no layer
        """
        _, baseline, _ = self.analyze_layers(baseline_path)
        _, variant, _ = self.analyze_layers(variant_path)
        return compare_models(baseline, variant, self.config)
