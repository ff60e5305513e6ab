"""Exception hierarchy shared by all engines."""


class DUCGError(Exception):
    """Base class for every error raised by this package."""


class GraphFormatError(DUCGError):
    """A graph document could not be parsed.

    ``location`` is a ``line N`` string for syntax errors or a field path such
    as ``links[3].matrix`` for schema errors.
    """

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)


class ValidationError(DUCGError):
    """A graph or evidence set violates one or more invariants."""

    def __init__(self, report):
        self.report = list(report)
        super().__init__("; ".join(self.report))


class DisconnectedHypothesis(DUCGError):
    pass


class NotExpandable(DUCGError):
    pass


class UnboundLiteral(DUCGError):
    pass


class EnumerationInfeasible(DUCGError):
    pass


class RecursionInfeasible(DUCGError):
    pass


class AssumptionsNotSatisfied(DUCGError):
    pass


class EvidenceImpossible(DUCGError):
    pass
