import logging
import math

import numpy as np

from .exceptions import DegenerateTail, TooFewEigenvalues

log = logging.getLogger(__name__)

#: Quality flags
OK = "OK"
ALPHA_BELOW_1_5 = "ALPHA_BELOW_1_5"
ALPHA_OVER_6 = "ALPHA_OVER_6"
SHORT_TAIL = "SHORT_TAIL"

#: The only fitted family so far
POWER_LAW = "power_law"


class PLFit(dict):
    """ Result of fitting the eigenvalue tail to ``rho(lambda) ~
        lambda^-alpha`` above ``lambda_min``. Serializes as the plain
        dict it is.

        :param float alpha: Fitted exponent
        :param float lambda_min: Selected lower cutoff (an eigenvalue)
        :param float lambda_max: Largest eigenvalue
        :param float ks_distance: K-S distance of the fit
        :param int n_tail: Eigenvalues at or above ``lambda_min``
        :param int short_tail: Tails shorter than this get ``SHORT_TAIL``
    """
    def __init__(self, alpha, lambda_min, lambda_max, ks_distance, n_tail,
                 short_tail=20, fit_family=POWER_LAW):
        flags = []
        if alpha < 1.5:
            flags.append(ALPHA_BELOW_1_5)
        if alpha > 6:
            flags.append(ALPHA_OVER_6)
        if n_tail < short_tail:
            flags.append(SHORT_TAIL)
        super(PLFit, self).__init__(
            alpha=float(alpha),
            lambda_min=float(lambda_min),
            lambda_max=float(lambda_max),
            ks_distance=float(ks_distance),
            n_tail=int(n_tail),
            sigma=(float(alpha) - 1) / math.sqrt(n_tail),
            flags=flags or [OK],
            fit_family=fit_family,
        )

    @property
    def alpha(self):
        return self["alpha"]

    @property
    def lambda_min(self):
        return self["lambda_min"]

    @property
    def lambda_max(self):
        return self["lambda_max"]

    @property
    def ks_distance(self):
        return self["ks_distance"]

    @property
    def n_tail(self):
        return self["n_tail"]

    @property
    def sigma(self):
        return self["sigma"]

    @property
    def flags(self):
        return self["flags"]


def mle_alpha(tail, x_min):
    """ Continuous power-law maximum-likelihood exponent

        ``alpha = 1 + n / sum(ln(x_i / x_min))``

        :param list tail: Values, all ``>= x_min``
        :param float x_min: Lower cutoff (``> 0``)
        :raises DegenerateTail: if every value equals ``x_min``
    """
    tail = np.asarray(tail, dtype=np.float64)
    if x_min <= 0:
        raise ValueError("x_min must be positive")
    if tail.size < 2:
        raise ValueError("Need at least two tail values")
    if np.any(tail < x_min):
        raise ValueError("Tail values must not be below x_min")
    total = float(np.sum(np.log(tail / x_min)))
    if total <= 0:
        raise DegenerateTail("All tail values equal x_min")
    return 1.0 + tail.size / total


def ks_distance(tail, x_min, alpha):
    """ ``D = max_i |i/n - P(x_(i))|`` with the fitted CDF
        ``P(x) = 1 - (x_min / x)^(alpha - 1)``

        :param list tail: Sorted values, all ``>= x_min``
        :param float x_min: Lower cutoff
        :param float alpha: Exponent (``> 1``)
    """
    tail = np.sort(np.asarray(tail, dtype=np.float64))
    n = tail.size
    if not n:
        raise ValueError("Empty tail")
    if alpha <= 1:
        raise ValueError("alpha must be greater than 1")
    fitted = 1.0 - (x_min / tail) ** (alpha - 1.0)
    empirical = np.arange(1, n + 1) / n
    return float(np.max(np.abs(empirical - fitted)))


def pdf_overlay(fit, points):
    """ Normalized density of the fitted tail at ``points`` (zero below
        ``lambda_min``), for plotting over a histogram
    """
    points = np.asarray(points, dtype=np.float64)
    x_min, alpha = fit.lambda_min, fit.alpha
    density = (alpha - 1.0) / x_min * (points / x_min) ** (-alpha)
    return [float(d) for d in np.where(points >= x_min, density, 0.0)]


def fit_power_law(esd, min_tail=5, xmin=None, short_tail=20):
    """ Fit the tail of a spectrum to a power law

        Every distinct eigenvalue that leaves at least ``min_tail``
        values in the tail is tried as ``x_min``; the candidate with
        the smallest K-S distance wins, ties going to the smallest
        ``x_min``.

        :param ESD esd: Spectrum (or sorted array of eigenvalues)
        :param int min_tail: Fewest tail values a candidate may leave
        :param float xmin: Fix ``x_min`` instead of scanning
        :param int short_tail: Flag fits with fewer tail values
        :rtype: PLFit
        :raises TooFewEigenvalues: if the spectrum is too short
        :raises DegenerateTail: if no candidate has a usable tail
    """
    evals = np.sort(np.asarray(getattr(esd, "eigenvalues", esd), dtype=np.float64))
    if evals.size < max(min_tail, 2):
        raise TooFewEigenvalues(
            "%d eigenvalues, at least %d required" % (evals.size, max(min_tail, 2)))
    lambda_max = float(evals[-1])

    if xmin is not None:
        tail = evals[evals >= xmin]
        if tail.size < max(min_tail, 2):
            raise TooFewEigenvalues("Only %d eigenvalues above x_min" % tail.size)
        alpha = mle_alpha(tail, xmin)
        return PLFit(alpha, xmin, lambda_max, ks_distance(tail, xmin, alpha),
                     tail.size, short_tail=short_tail)

    best = None
    candidates, first_index = np.unique(evals, return_index=True)
    for x_min, index in zip(candidates, first_index):
        tail = evals[index:]
        if tail.size < max(min_tail, 2):
            break
        try:
            alpha = mle_alpha(tail, x_min)
        except DegenerateTail:
            continue
        D = ks_distance(tail, x_min, alpha)
        # strict: ties keep the smaller x_min
        if best is None or D < best[0]:
            best = (D, float(x_min), alpha, tail.size)

    if best is None:
        raise DegenerateTail("No candidate x_min leaves a usable tail")
    D, x_min, alpha, n_tail = best
    return PLFit(alpha, x_min, lambda_max, D, n_tail, short_tail=short_tail)
