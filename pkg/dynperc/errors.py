"""Error kinds raised by the dynperc library"""


class DynpercError(Exception):
    """Base class for all library errors"""


class InvalidParameterError(DynpercError, ValueError):
    """A parameter lies outside its documented domain"""


class LengthMismatchError(DynpercError, ValueError):
    """A bit configuration does not match the lattice edge count"""


class CapExceededError(DynpercError):
    """Exact enumeration was requested above the configured bit cap"""

    def __init__(self, num_bits, cap):
        self.num_bits = num_bits
        self.cap = cap
        super(CapExceededError, self).__init__(
            "exact enumeration over {} bits exceeds the cap of {}".format(num_bits, cap))


class ConstantObservableError(DynpercError):
    """The observable has zero variance under the product measure"""


class DegenerateSeriesError(DynpercError):
    """A time series is constant, so its autocorrelation is undefined"""


class SeriesTooShortError(DynpercError):
    """A time series is too short for the requested lag range"""


class WindowNotClosedError(DynpercError):
    """The self-consistent window reached the largest available lag"""

    def __init__(self, s_max, tau):
        self.s_max = s_max
        self.tau = tau
        super(WindowNotClosedError, self).__init__(
            "window did not close before S_max={} (running tau={:.4g})".format(s_max, tau))


class RadiusOutOfRangeError(DynpercError, ValueError):
    """The torus query radius must satisfy 1 <= r < L/2"""


class MalformedQueryTreeError(DynpercError, ValueError):
    """A query tree violates the labelling rules"""


class ConfigError(DynpercError):
    """A run configuration field is missing or invalid"""

    def __init__(self, field, message):
        self.field = field
        super(ConfigError, self).__init__("{}: {}".format(field, message))


class RepeatedQueryError(DynpercError):
    """A querier asked for a bit it had already revealed"""

    def __init__(self, bit):
        self.bit = bit
        super(RepeatedQueryError, self).__init__("bit {} queried twice".format(bit))
