class ContainerError(Exception):
    exit_code = 1


class MalformedHeader(ContainerError):
    pass


class OverlappingRanges(ContainerError):
    pass


class TruncatedData(ContainerError):
    pass


class UnsupportedDtype(ContainerError):
    pass


class NonFiniteValue(ContainerError):
    def __init__(self, name):
        self.name = name
        super(NonFiniteValue, self).__init__(
            "Tensor %s contains NaN or Inf values" % name)


class UnrepresentableValue(NonFiniteValue):
    def __init__(self, name, dtype):
        ContainerError.__init__(
            self, "Tensor %s holds values outside the range of %s" % (name, dtype))
        self.name = name
        self.dtype = dtype
