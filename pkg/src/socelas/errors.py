"""Exception hierarchy shared by all pipeline stages."""


class SocElasError(Exception):
    pass


class ParseError(SocElasError):
    """Input file could not be decoded."""


class MalformedHeader(ParseError):
    pass


class Truncated(ParseError):
    pass


class UnsupportedDepth(ParseError):
    pass


class FormatError(SocElasError):
    """File decoded but has the wrong bit depth or channel layout."""


class WriteError(SocElasError):
    pass


class InputTooSmall(SocElasError):
    pass


class ShapeError(SocElasError):
    pass


class DegenerateInput(SocElasError):
    """Fewer than three points, or all points collinear."""


class ConfigError(SocElasError):
    pass
