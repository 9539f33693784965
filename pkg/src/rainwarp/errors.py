"""Exception hierarchy shared by every stage of the pipeline."""


class RainwarpError(Exception):
    """Base class for all errors raised by this package."""


class InputError(RainwarpError):
    """Bad input data or configuration (CLI exit code 2)."""


class ComputationError(RainwarpError):
    """A stage could not produce a result from valid input (CLI exit code 3)."""


class IngestError(InputError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class ConfigError(InputError):
    pass


class MatrixFormatError(InputError):
    pass


class WarpError(ComputationError):
    pass


class InfeasibleBandError(WarpError):
    """No monotone path fits inside the band constraint."""


class CorridorInfeasibleError(WarpError):
    """The projected refinement corridor does not connect the two corners."""


class ClusteringError(ComputationError):
    pass


class TrendError(ComputationError):
    pass
