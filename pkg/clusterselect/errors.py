"""Exception hierarchy. Every error carries the CLI exit code it maps to."""


class ClusterSelectError(Exception):
    exit_code = 3


class DataIOError(ClusterSelectError):
    exit_code = 1


class EmptyInputError(DataIOError):
    pass


class FormatError(DataIOError):
    pass


class ParseError(DataIOError):
    pass


class DimensionError(ClusterSelectError):
    exit_code = 2


class ParameterError(ClusterSelectError):
    exit_code = 2


class DegenerateInputError(ClusterSelectError):
    exit_code = 2


class SpecError(ClusterSelectError):
    exit_code = 2
