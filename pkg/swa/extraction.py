import logging
import math
import os

import numpy as np
import yaml

from .exceptions import DegenerateKernel, NoAnalyzableLayers, ConfigError
from .utils import check_patterns, matches_any

log = logging.getLogger(__name__)

#: Layer kinds
DENSE = "Dense"
CONV1D = "Conv1D"
CONV2D = "Conv2D-slice"
ATTENTION = "Attention"
EMBEDDING = "Embedding-like"

attention_patterns = [
    "attn", "attention", "q_proj", "k_proj", "v_proj", "o_proj",
    "query", "key", "value",
]

#: Conv2D axis conventions
conv_layouts = {
    # (out, in, kh, kw), as exported by most frameworks
    "oikk": (2, 3),
    # (kh, kw, in, out)
    "kkio": (0, 1),
}


class LayerMatrix(object):
    """ One oriented 2D weight matrix, ready for spectral analysis.
        The matrix is transposed on construction if needed so that
        ``n_rows >= n_cols``.

        :param str model_id: Model the matrix belongs to
        :param str layer_name: Name of the tensor it was taken from
        :param int layer_id: Position in traversal order
        :param str kind: One of the layer kinds of this module
        :param int slice_index: Kernel position for Conv2D slices
        :param array values: The (already rescaled) matrix
        :param float rescale_factor: Factor applied to the entries
    """
    def __init__(self, model_id, layer_name, layer_id, kind, values,
                 slice_index=0, rescale_factor=1.0):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or min(values.shape) < 1:
            raise ValueError("LayerMatrix needs a non-empty 2D array")
        if values.shape[0] < values.shape[1]:
            values = values.T
        self.model_id = model_id
        self.layer_name = layer_name
        self.layer_id = layer_id
        self.kind = kind
        self.slice_index = slice_index
        self.rescale_factor = float(rescale_factor)
        self.values = values

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_cols(self):
        return self.values.shape[1]

    @property
    def aspect_ratio(self):
        return self.n_rows / self.n_cols

    @property
    def key(self):
        """ Identifies the matrix within its model
        """
        return (self.layer_name, self.slice_index)

    def provenance(self):
        return {
            "layer_id": self.layer_id,
            "name": self.layer_name,
            "kind": self.kind,
            "slice": self.slice_index,
            "N": self.n_rows,
            "M": self.n_cols,
            "Q": self.aspect_ratio,
        }

    def __repr__(self):
        return "<LayerMatrix %s[%d] %dx%d>" % (
            self.layer_name, self.slice_index, self.n_rows, self.n_cols)


class ExtractionConfig(object):
    """ Settings that decide which tensors turn into layer matrices

        :param int min_matrix_dim: Skip matrices whose smaller side is below this
        :param list include_patterns: Only tensors matching one of these
        :param list exclude_patterns: Skip tensors matching one of these
        :param bool skip_embedding_like: Exclude embedding-like
            layers from model averages (they are still analyzed)
        :param str conv_kernel_axes: ``oikk`` or ``kkio``
        :param list embedding_patterns: Names that mark embeddings
        :param float embedding_q: Aspect ratio above which a matching
            name is taken to be an embedding
    """
    def __init__(self,
                 min_matrix_dim=50,
                 include_patterns=None,
                 exclude_patterns=None,
                 skip_embedding_like=True,
                 conv_kernel_axes="oikk",
                 embedding_patterns=None,
                 embedding_q=8.0):
        if min_matrix_dim < 2:
            raise ConfigError("min_matrix_dim must be at least 2")
        if conv_kernel_axes not in conv_layouts:
            raise ConfigError("Unknown Conv2D layout %r" % conv_kernel_axes)
        self.min_matrix_dim = int(min_matrix_dim)
        self.include_patterns = check_patterns(include_patterns, "include pattern")
        self.exclude_patterns = check_patterns(exclude_patterns, "exclude pattern")
        self.skip_embedding_like = bool(skip_embedding_like)
        self.conv_kernel_axes = conv_kernel_axes
        self.embedding_patterns = check_patterns(embedding_patterns or ["embed"], "embedding pattern")
        self.embedding_q = float(embedding_q)

    @classmethod
    def from_config(cls, config):
        """ Build from an :class:`swa.config.AnalysisConfig`
        """
        return cls(
            min_matrix_dim=config["min_size"],
            include_patterns=config["include"],
            exclude_patterns=config["exclude"],
            skip_embedding_like=config["skip_embeddings"],
            conv_kernel_axes=config["conv_layout"],
            embedding_patterns=config["embedding_patterns"],
            embedding_q=config["embedding_q"],
        )


class LayerList(list):
    """ List of :class:`LayerMatrix` that also carries the skip report
        (``{"tensor": name, "reason": reason}`` records)
    """
    def __init__(self, matrices=(), skipped=()):
        super(LayerList, self).__init__(matrices)
        self.skipped = list(skipped)


def conv_rescale_factor(kh, kw):
    """ ``k / sqrt(2)`` with ``k = sqrt(kh * kw)``, which is the usual
        ``k / sqrt(2)`` for square kernels
    """
    return math.sqrt(kh * kw) / math.sqrt(2)


def slice_conv2d(tensor, layout="oikk"):
    """ Cut a Conv2D kernel into one ``(out, in)`` matrix per kernel
        position, in row-major kernel order. Entries are multiplied by
        :func:`conv_rescale_factor`.

        :param TensorEntry tensor: Rank-4 tensor (or array)
        :param str layout: ``oikk`` for ``(out, in, kh, kw)``,
            ``kkio`` for ``(kh, kw, in, out)``
        :raises DegenerateKernel: if any axis has length 0
    """
    values = np.asarray(getattr(tensor, "values", tensor), dtype=np.float64)
    if values.ndim != 4:
        raise ValueError("slice_conv2d needs a rank-4 tensor")
    if layout not in conv_layouts:
        raise ConfigError("Unknown Conv2D layout %r" % layout)
    if 0 in values.shape:
        raise DegenerateKernel("Kernel tensor of shape %r has an empty axis" % (values.shape,))

    if layout == "oikk":
        kh, kw = values.shape[2], values.shape[3]
        kernel = np.moveaxis(values, (2, 3), (0, 1))
        slices = [kernel[i, j] for i in range(kh) for j in range(kw)]
    else:
        kh, kw = values.shape[0], values.shape[1]
        slices = [values[i, j].T for i in range(kh) for j in range(kw)]

    factor = conv_rescale_factor(kh, kw)
    return [s * factor for s in slices]


def classify_tensor(name, shape, config):
    """ Kind of the layer a tensor describes (``None`` if it is not
        analyzed at all)
    """
    rank = len(shape)
    if rank == 4:
        return CONV2D
    if rank == 3:
        # (out, in, 1) kernels only
        return CONV1D if shape[2] == 1 else None
    if rank != 2:
        return None
    n, m = max(shape), min(shape)
    lowered = name.lower()
    if (m > 0 and n / m > config.embedding_q and
            matches_any(lowered, config.embedding_patterns)):
        return EMBEDDING
    if matches_any(lowered, attention_patterns):
        return ATTENTION
    return DENSE


def load_order_file(path):
    """ Read the true depth order of tensors: a YAML list of names,
        a mapping with an ``order`` list, or one name per line
    """
    if not os.path.isfile(path):
        raise ConfigError("Order file %s does not exist!" % path)
    with open(path) as fp:
        try:
            contents = yaml.safe_load(fp.read())
        except yaml.YAMLError as e:
            raise ConfigError("Order file %s is not valid YAML: %s" % (path, e))
    if isinstance(contents, dict):
        contents = contents.get("order")
    if isinstance(contents, str):
        contents = contents.split()
    if not isinstance(contents, list):
        raise ConfigError("Order file %s must list tensor names" % path)
    return [str(n) for n in contents]


def traversal_order(names, order=None):
    """ Names listed in ``order`` come first, in that order; all other
        names follow in lexicographic order
    """
    names = sorted(names)
    if not order:
        return names
    present = set(names)
    listed = []
    for n in order:
        if n in present and n not in listed:
            listed.append(n)
    seen = set(listed)
    return listed + [n for n in names if n not in seen]


def extract_layer_matrices(store, config=None, model_id="model", order=None):
    """ Turn the tensors of a store into layer matrices

        * rank-2 tensors give one matrix each
        * rank-4 tensors give one matrix per kernel position
        * rank-3 ``(out, in, 1)`` tensors are Conv1D layers
        * biases and scalars are skipped

        :param TensorStore store: Parsed weight file
        :param ExtractionConfig config: Settings
        :param str model_id: Model id stored on every matrix
        :param list order: Optional true depth order of tensor names
        :rtype: LayerList
        :raises NoAnalyzableLayers: if every tensor was skipped
    """
    config = config or ExtractionConfig()
    result = LayerList()

    def skip(name, reason):
        log.info("Skipping %s: %s" % (name, reason))
        result.skipped.append({"tensor": name, "reason": reason})

    layer_id = 0
    for name in traversal_order(store.keys(), order):
        entry = store[name]
        shape = list(entry.shape)
        if len(shape) <= 1:
            skip(name, "bias-or-scalar")
            continue
        if matches_any(name, config.exclude_patterns):
            skip(name, "excluded-by-pattern")
            continue
        if config.include_patterns and not matches_any(name, config.include_patterns):
            skip(name, "not-included")
            continue

        kind = classify_tensor(name, shape, config)
        if kind is None:
            skip(name, "unsupported-rank")
            continue

        if kind == CONV2D:
            try:
                matrices = slice_conv2d(entry, config.conv_kernel_axes)
            except DegenerateKernel:
                skip(name, "degenerate-kernel")
                continue
            factor = conv_rescale_factor(*(
                shape[2:] if config.conv_kernel_axes == "oikk" else shape[:2]))
        elif kind == CONV1D:
            matrices = [entry.values.reshape(shape[0], -1)]
            factor = 1.0
        else:
            matrices = [entry.values]
            factor = 1.0

        if min(matrices[0].shape) < config.min_matrix_dim:
            skip(name, "too-small")
            continue

        for index, values in enumerate(matrices):
            result.append(LayerMatrix(
                model_id, name, layer_id, kind, values,
                slice_index=index,
                rescale_factor=factor,
            ))
        layer_id += 1

    if not result:
        raise NoAnalyzableLayers("No analyzable layers in %s" % model_id)
    return result
