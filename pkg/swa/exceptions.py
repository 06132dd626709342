class AnalysisError(Exception):
    exit_code = 1


class ConfigError(AnalysisError):
    pass


class NoAnalyzableLayers(AnalysisError):
    exit_code = 2


class DegenerateKernel(AnalysisError):
    pass


class SvdFailure(AnalysisError):
    pass


class AllZeroMatrix(AnalysisError):
    pass


class EmptySpectrum(AnalysisError):
    pass


class DegenerateTail(AnalysisError):
    pass


class TooFewEigenvalues(AnalysisError):
    pass


class NoIncludedLayers(AnalysisError):
    exit_code = 2


class InsufficientLayers(AnalysisError):
    pass


class ConstantPredictor(AnalysisError):
    pass


class LengthMismatch(AnalysisError):
    pass


class DegenerateResiduals(AnalysisError):
    pass


class AllTied(AnalysisError):
    pass


class TooFewModels(AnalysisError):
    exit_code = 2


class MissingMetric(AnalysisError):
    pass


class MixedSeries(AnalysisError):
    pass


class InvalidRecord(AnalysisError):
    pass


class UnknownLayer(AnalysisError):
    pass


class NoMatchedLayers(AnalysisError):
    exit_code = 2
