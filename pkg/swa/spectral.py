import logging

import numpy as np

from .exceptions import SvdFailure, AllZeroMatrix, EmptySpectrum

log = logging.getLogger(__name__)

#: Eigenvalues below ``zero_tolerance * lambda_max`` are dropped
zero_tolerance = 1e-10


class ESD(object):
    """ Empirical spectral density of ``X = W^T W``: the eigenvalues
        ``lambda_i = sigma_i^2`` of one layer matrix, sorted ascending,
        with near-zero eigenvalues removed.

        :param array eigenvalues: Retained eigenvalues
        :param int n_dropped: How many eigenvalues the zero filter removed
        :param LayerMatrix source: Matrix the spectrum was computed from
        :param float trace: Sum of all eigenvalues before filtering
    """
    def __init__(self, eigenvalues, n_dropped=0, source=None, trace=None):
        self.eigenvalues = np.sort(np.asarray(eigenvalues, dtype=np.float64))
        self.eigenvalues.setflags(write=False)
        self.n_dropped = int(n_dropped)
        self.source = source
        if trace is None:
            trace = float(np.sum(self.eigenvalues))
        self.trace = float(trace)

    @property
    def lambda_max(self):
        if not len(self.eigenvalues):
            raise EmptySpectrum("Spectrum is empty")
        return float(self.eigenvalues[-1])

    def spectral_norm(self):
        """ ``||W||_2^2``, the largest eigenvalue
        """
        return self.lambda_max

    def frobenius_norm(self):
        """ ``||W||_F^2``, the sum of all eigenvalues
        """
        return self.trace

    def __len__(self):
        return len(self.eigenvalues)

    def __mul__(self, c):
        return ESD(self.eigenvalues * c, self.n_dropped, self.source, self.trace * c)

    __rmul__ = __mul__


class Histogram(object):
    """ Counts of values in equal-width bins

        :param list bin_edges: ``len(counts) + 1`` edges
        :param list counts: Number of values per bin
        :param bool log_scaled: Bins are equal-width in ``log10``
    """
    def __init__(self, bin_edges, counts, log_scaled=False):
        self.bin_edges = [float(e) for e in bin_edges]
        self.counts = [int(c) for c in counts]
        self.log_scaled = bool(log_scaled)
        assert len(self.counts) == len(self.bin_edges) - 1

    @property
    def total(self):
        return sum(self.counts)

    def centers(self):
        edges = np.asarray(self.bin_edges)
        if self.log_scaled:
            return list(np.sqrt(edges[:-1] * edges[1:]))
        return list((edges[:-1] + edges[1:]) / 2)

    def rows(self):
        return [
            {"bin_left": left, "bin_right": right, "count": count}
            for left, right, count in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts)
        ]


def compute_esd(matrix, tolerance=zero_tolerance, normalize_by_n=False):
    """ Eigenvalues of ``X = W^T W`` through the singular values of
        ``W`` (no ``1/N`` factor unless ``normalize_by_n`` is set)

        :param LayerMatrix matrix: Matrix to analyze (a plain 2D array
            works as well)
        :param float tolerance: Relative threshold of the zero filter;
            exact zeros are dropped even when it is 0
        :param bool normalize_by_n: Use ``X = W^T W / N``
        :raises AllZeroMatrix: if every entry is zero
        :raises SvdFailure: if the SVD does not converge
    """
    values = getattr(matrix, "values", matrix)
    name = getattr(matrix, "layer_name", "matrix")
    W = np.asarray(values, dtype=np.float64)
    if not np.any(W):
        raise AllZeroMatrix("Matrix %s is all zeros" % name)

    try:
        sv = np.linalg.svd(W, compute_uv=False)
    except np.linalg.LinAlgError as e:
        raise SvdFailure("SVD of %s did not converge: %s" % (name, e))

    evals = sv ** 2
    if normalize_by_n:
        evals = evals / max(W.shape)
    trace = float(np.sum(evals))
    threshold = tolerance * np.max(evals)
    keep = (evals >= threshold) & (evals > 0)
    n_dropped = int(np.count_nonzero(~keep))
    if n_dropped:
        log.debug("Dropped %d near-zero eigenvalues of %s" % (n_dropped, name))
    return ESD(evals[keep], n_dropped=n_dropped,
               source=matrix if hasattr(matrix, "values") else None,
               trace=trace)


def histogram(values, n_bins, log_scaled=False):
    """ Equal-width histogram over ``[min, max]`` of ``values``
        (right edge inclusive for the last bin)
    """
    values = np.asarray(values, dtype=np.float64)
    if not values.size:
        raise EmptySpectrum("Nothing to bin")
    if n_bins < 1:
        raise ValueError("n_bins must be at least 1")
    if log_scaled:
        if np.any(values <= 0):
            raise ValueError("Log-scaled bins need strictly positive values")
        values = np.log10(values)
    counts, edges = np.histogram(values, bins=n_bins, range=(values.min(), values.max()))
    if log_scaled:
        edges = 10 ** edges
    return Histogram(edges, counts, log_scaled)


def esd_histogram(esd, n_bins, log_scaled=False):
    """ Histogram of the eigenvalues of an :class:`ESD`
    """
    if not len(esd):
        raise EmptySpectrum("Spectrum is empty")
    return histogram(esd.eigenvalues, n_bins, log_scaled)
