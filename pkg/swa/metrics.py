import logging
import math

import numpy as np
from funcy import group_by
from scipy.special import logsumexp

from .exceptions import NoIncludedLayers, InsufficientLayers, NoMatchedLayers
from .extraction import EMBEDDING
from .plfit import ALPHA_OVER_6
from .spectral import histogram

log = logging.getLogger(__name__)

#: Logarithms the norm metrics can be reported in
log_bases = {
    "10": math.log(10.0),
    "e": 1.0,
}

#: Per-layer CSV columns
layer_columns = [
    "layer_id", "name", "kind", "slice", "N", "M", "Q",
    "alpha", "lambda_min", "lambda_max", "ks_distance",
    "log_frobenius", "log_spectral", "weighted_alpha_term",
    "log_alpha_norm", "flags",
]

#: Model-level metrics, in the order the regression tables use
model_metric_names = [
    "log_frobenius", "log_spectral", "weighted_alpha",
    "log_alpha_norm", "alpha_bar",
]

FIT_FAILED = "FIT_FAILED"


def _log(value, base="10"):
    return math.log(value) / log_bases[base]


def _mean(values):
    return float(np.mean(values)) if len(values) else None


def _setting(config, key, default):
    value = config.get(key)
    return default if value is None else value


class LayerMetrics(dict):
    """ Quality metrics of one layer matrix

        * ``log_frobenius``: ``log sum(lambda_i)``
        * ``log_spectral``: ``log lambda_max``
        * ``weighted_alpha_term``: ``alpha * log_spectral``
        * ``log_alpha_norm``: ``log sum(lambda_i^alpha)``

        The PL-based fields are ``None`` when the fit failed.
    """
    @property
    def name(self):
        return self["name"]

    @property
    def key(self):
        return (self["name"], self["slice"])

    @property
    def alpha(self):
        return self["alpha"]

    @property
    def log_spectral(self):
        return self["log_spectral"]

    @property
    def fit_ok(self):
        return self["alpha"] is not None

    def row(self):
        return {c: self.get(c) for c in layer_columns}


def layer_metrics(esd, fit, log_base="10"):
    """ Compute the metrics of one layer

        :param ESD esd: Spectrum of the layer
        :param PLFit fit: Fit of the same spectrum, ``None`` if the fit failed
        :param str log_base: ``10`` or ``e``
        :rtype: LayerMetrics
    """
    evals = esd.eigenvalues
    source = esd.source.provenance() if esd.source is not None else {
        "layer_id": 0, "name": "matrix", "kind": None, "slice": 0,
        "N": None, "M": len(evals), "Q": None,
    }
    metrics = LayerMetrics(source)
    log_spectral = _log(esd.lambda_max, log_base)
    metrics.update({
        "log_frobenius": _log(esd.trace, log_base),
        "log_spectral": log_spectral,
        "n_dropped": esd.n_dropped,
    })
    if fit is None:
        metrics.update({
            "alpha": None, "lambda_min": None, "lambda_max": esd.lambda_max,
            "ks_distance": None, "n_tail": None, "weighted_alpha_term": None,
            "log_alpha_norm": None, "flags": [FIT_FAILED],
        })
        return metrics

    alpha = fit.alpha
    # log sum(lambda^alpha), without overflow for large alpha
    log_alpha_norm = float(logsumexp(alpha * np.log(evals))) / log_bases[log_base]
    metrics.update({
        "alpha": alpha,
        "lambda_min": fit.lambda_min,
        "lambda_max": fit.lambda_max,
        "ks_distance": fit.ks_distance,
        "n_tail": fit.n_tail,
        "weighted_alpha_term": alpha * log_spectral,
        "log_alpha_norm": log_alpha_norm,
        "flags": list(fit.flags),
    })
    return metrics


def _weighted_rows(layers, conv_weighting):
    """ Per-matrix rows, or one averaged row per tensor when Conv2D
        slices should count as a single layer
    """
    if conv_weighting != "per-layer":
        return list(layers)
    rows = []
    for name, group in sorted(group_by(lambda l: l["name"], layers).items()):
        row = {"name": name}
        for field in ["log_frobenius", "log_spectral", "alpha",
                      "weighted_alpha_term", "log_alpha_norm"]:
            values = [l[field] for l in group if l[field] is not None]
            row[field] = _mean(values)
        rows.append(row)
    return rows


class ModelMetrics(dict):
    """ Averages of the layer metrics over the included layers:

        * ``avg_log_frobenius``, ``avg_log_spectral``
        * ``weighted_alpha``: mean of ``alpha_l * log lambda_max,l``
        * ``avg_log_alpha_norm``
        * ``alpha_bar``: mean of ``alpha_l``

        ``L`` and ``L_alpha`` count the averaged rows: matrices, or
        tensors when Conv2D slices are weighted per layer.
        ``n_matrices`` always counts matrices.
    """
    def values_for_regression(self):
        """ The flat metric map used by the meta-analysis
        """
        return {
            "log_frobenius": self["avg_log_frobenius"],
            "log_spectral": self["avg_log_spectral"],
            "weighted_alpha": self["weighted_alpha"],
            "log_alpha_norm": self["avg_log_alpha_norm"],
            "alpha_bar": self["alpha_bar"],
        }


def model_summary(layers, config=None, skipped=()):
    """ Average layer metrics into model metrics

        Embedding-like layers are left out when ``skip_embeddings``
        is set. Layers whose fit failed count towards the norm
        averages but not towards the alpha-based ones.

        :param list layers: :class:`LayerMetrics` of the model
        :param dict config: Settings (``skip_embeddings``,
            ``conv_weighting``, scale-collapse thresholds)
        :param list skipped: Skip report of the extraction step
        :rtype: ModelMetrics
        :raises NoIncludedLayers: if nothing is left to average
    """
    config = config or {}
    skip_embeddings = _setting(config, "skip_embeddings", True)
    conv_weighting = _setting(config, "conv_weighting", "per-matrix")

    excluded = [{"tensor": s["tensor"], "reason": s["reason"]} for s in skipped]
    included = []
    for layer in layers:
        if skip_embeddings and layer["kind"] == EMBEDDING:
            excluded.append({"tensor": layer["name"], "slice": layer["slice"],
                             "reason": "embedding-like"})
        else:
            included.append(layer)
    if not included:
        raise NoIncludedLayers("All layers were excluded from the averages")

    fitted = [l for l in included if l.fit_ok]
    for layer in included:
        if not layer.fit_ok:
            excluded.append({"tensor": layer["name"], "slice": layer["slice"],
                             "reason": "fit-failed"})

    rows = _weighted_rows(included, conv_weighting)
    fitted_rows = _weighted_rows(fitted, conv_weighting)

    summary = ModelMetrics(
        L=len(rows),
        L_alpha=len(fitted_rows),
        n_matrices=len(included),
        avg_log_frobenius=_mean([r["log_frobenius"] for r in rows]),
        avg_log_spectral=_mean([r["log_spectral"] for r in rows]),
        weighted_alpha=_mean([r["weighted_alpha_term"] for r in fitted_rows]),
        avg_log_alpha_norm=_mean([r["log_alpha_norm"] for r in fitted_rows]),
        alpha_bar=_mean([r["alpha"] for r in fitted_rows]),
        n_excluded=len(excluded),
        excluded=excluded,
    )

    if len(included) >= 5:
        summary["scale_collapse_report"] = detect_scale_collapse(
            included,
            threshold=_setting(config, "collapse_threshold", 2.0),
            log_base=_setting(config, "log_base", "10"),
        )
    else:
        summary["scale_collapse_report"] = {
            "mode": "single", "checked": False, "flagged": []}
    return summary


def detect_scale_collapse(layers, baseline=None, threshold=2.0,
                          pair_threshold=1.0, median_shift=0.25, log_base="10"):
    """ Find layers whose spectral scale collapsed

        Without ``baseline``, layers whose ``log_spectral`` lies more
        than ``threshold`` below the median of the model are flagged.
        With ``baseline``, layers are matched by name and slice, and
        those whose ``log_spectral`` dropped by more than
        ``pair_threshold`` are flagged, provided the median layer
        moved by less than ``median_shift``.
        All three thresholds are in decades (log10 units), whatever
        ``log_base`` the metrics were computed in.

        :param list layers: :class:`LayerMetrics` (the variant in paired mode)
        :param list baseline: :class:`LayerMetrics` of the baseline model
        :param str log_base: Logarithm of ``log_spectral`` (``10`` or ``e``)
        :raises InsufficientLayers: with fewer than 5 (matched) layers
    """
    unit = log_bases["10"] / log_bases[log_base]
    if baseline is None:
        if len(layers) < 5:
            raise InsufficientLayers("Scale collapse needs at least 5 layers")
        median = float(np.median([l["log_spectral"] for l in layers]))
        flagged = []
        for layer in layers:
            deviation = median - layer["log_spectral"]
            if deviation > threshold * unit:
                flagged.append({
                    "name": layer["name"], "slice": layer["slice"],
                    "log_spectral": layer["log_spectral"],
                    "deviation": deviation,
                })
        for f in flagged:
            log.warning("Scale collapse in %s[%d]: %.3f below the median" % (
                f["name"], f["slice"], f["deviation"]))
        return {"mode": "single", "checked": True, "median": median,
                "threshold": threshold, "log_base": log_base, "flagged": flagged}

    base = {(l["name"], l["slice"]): l for l in baseline}
    pairs = [(base[(l["name"], l["slice"])], l) for l in layers
             if (l["name"], l["slice"]) in base]
    if len(pairs) < 5:
        raise InsufficientLayers("Paired scale collapse needs at least 5 matched layers")
    deltas = [v["log_spectral"] - b["log_spectral"] for b, v in pairs]
    median_delta = float(np.median(deltas))
    flagged = []
    if abs(median_delta) < median_shift * unit:
        for (b, v), delta in zip(pairs, deltas):
            if -delta > pair_threshold * unit:
                flagged.append({"name": v["name"], "slice": v["slice"],
                                "delta_log_spectral": delta})
    for f in flagged:
        log.warning("Scale collapse in %s[%d]: log_spectral dropped by %.3f" % (
            f["name"], f["slice"], -f["delta_log_spectral"]))
    return {"mode": "paired", "checked": True, "median_shift": median_delta,
            "threshold": pair_threshold, "log_base": log_base, "flagged": flagged}


def correlation_flow(layers):
    """ ``alpha`` and ``log_spectral`` per layer, in depth order
    """
    return [
        {"layer_id": l["layer_id"], "name": l["name"], "slice": l["slice"],
         "alpha": l["alpha"], "log_spectral": l["log_spectral"]}
        for l in sorted(layers, key=lambda l: (l["layer_id"], l["slice"]))
    ]


def metric_histogram(layers, field, n_bins=20):
    """ Histogram of one per-layer metric across a model
    """
    values = [l[field] for l in layers if l.get(field) is not None]
    return histogram(values, n_bins)


def compare_models(baseline, variant, config=None):
    """ Compare two analyses of the same architecture, e.g. before and
        after distillation

        :param list baseline: :class:`LayerMetrics` of the baseline
        :param list variant: :class:`LayerMetrics` of the variant
        :raises NoMatchedLayers: if no layer appears in both
    """
    config = config or {}
    base = {l.key: l for l in baseline}
    other = {l.key: l for l in variant}
    matched = sorted(set(base) & set(other), key=lambda k: (base[k]["layer_id"], k))
    if not matched:
        raise NoMatchedLayers("The models share no layer names")

    deltas = []
    for key in matched:
        b, v = base[key], other[key]
        deltas.append({
            "name": key[0], "slice": key[1],
            "log_spectral_baseline": b["log_spectral"],
            "log_spectral_variant": v["log_spectral"],
            "delta_log_spectral": v["log_spectral"] - b["log_spectral"],
            "alpha_baseline": b["alpha"],
            "alpha_variant": v["alpha"],
            "delta_alpha": (v["alpha"] - b["alpha"]
                            if b.fit_ok and v.fit_ok else None),
        })

    def alpha_bar(layers):
        return _mean([l["alpha"] for l in layers if l.fit_ok])

    def over_6(layers):
        return sorted("%s[%d]" % l.key for l in layers if ALPHA_OVER_6 in l["flags"])

    matched_base = [base[k] for k in matched]
    matched_variant = [other[k] for k in matched]
    result = {
        "matched": len(matched),
        "unmatched_baseline": sorted("%s[%d]" % k for k in set(base) - set(other)),
        "unmatched_variant": sorted("%s[%d]" % k for k in set(other) - set(base)),
        "layers": deltas,
        "alpha_bar_baseline": alpha_bar(matched_base),
        "alpha_bar_variant": alpha_bar(matched_variant),
        "alpha_over_6_baseline": over_6(matched_base),
        "alpha_over_6_variant": over_6(matched_variant),
    }
    if result["alpha_bar_baseline"] is not None and result["alpha_bar_variant"] is not None:
        result["delta_alpha_bar"] = result["alpha_bar_variant"] - result["alpha_bar_baseline"]
    else:
        result["delta_alpha_bar"] = None

    if len(matched) >= 5:
        result["scale_collapse"] = detect_scale_collapse(
            matched_variant, baseline=matched_base,
            pair_threshold=_setting(config, "pair_threshold", 1.0),
            median_shift=_setting(config, "pair_median_shift", 0.25),
            log_base=_setting(config, "log_base", "10"),
        )
    else:
        result["scale_collapse"] = {"mode": "paired", "checked": False, "flagged": []}
    return result
