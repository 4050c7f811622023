"""Exception hierarchy.

Every error carries a ``module`` tag so the CLI can report where a pipeline
failure originated.
"""

from __future__ import annotations


class QMWError(Exception):
    module = "qmw"

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "module": self.module, "message": str(self)}


# graph-core


class GraphError(QMWError):
    module = "graph-core"

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class MalformedGraph(GraphError):
    pass


class NonPositiveMass(GraphError):
    pass


class DisconnectedGraph(GraphError):
    pass


class DuplicateId(GraphError):
    pass


class NonzeroExternalMomentum(GraphError):
    pass


class SelfLoopNotSupported(GraphError):
    pass


# quadric-net


class QuadricError(QMWError):
    module = "quadric-net"


class EmptyLoopSpace(QuadricError):
    pass


class ScheduleInconsistent(QuadricError):
    pass


# transversality


class TransversalityError(QMWError):
    module = "transversality"


class DimensionMismatch(TransversalityError, ValueError):
    pass


class UnsupportedNetShape(TransversalityError):
    pass


class InvalidIndexTuple(TransversalityError, ValueError):
    pass


class SearchExhausted(TransversalityError):
    def __init__(self, message: str, trace: list | None = None):
        self.trace = trace or []
        super().__init__(message)


# motive-calculus


class MotiveError(QMWError):
    module = "motive-calculus"


class UnknownDimension(MotiveError):
    pass


class DimensionTooSmall(MotiveError, ValueError):
    pass


# igusa-integrator


class IntegrationError(QMWError):
    module = "igusa-integrator"


class DivergentExponent(IntegrationError):
    def __init__(self, exponent, threshold):
        self.exponent = exponent
        self.threshold = threshold
        super().__init__(
            f"exponent {exponent} does not exceed the convergence threshold "
            f"LD/(2n) = {threshold}; the integral diverges and must be regularized"
        )


class OutOfHalfPlane(DivergentExponent):
    pass


# ck-renorm


class RenormError(QMWError):
    module = "ck-renorm"


class TruncationExceeded(RenormError):
    pass


class SeriesFormatError(RenormError, ValueError):
    pass
