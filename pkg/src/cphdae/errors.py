"""Exception hierarchy shared by all modules."""
from __future__ import annotations


class CphError(Exception):
    """Base class for every error raised by the package."""


# --- parsing -----------------------------------------------------------------

class NetlistSyntaxError(CphError):
    def __init__(self, line: int, col: int, message: str):
        self.line = line
        self.col = col
        self.message = message
        super().__init__(f"line {line}, col {col}: {message}")


class ForbiddenVariable(CphError):
    pass


class DomainError(CphError, ArithmeticError):
    pass


class DuplicateName(CphError):
    pass


class SelfLoop(CphError):
    pass


class NonContiguousVertices(CphError):
    pass


class JoinError(CphError):
    pass


# --- well-posedness ----------------------------------------------------------

class WellPosednessError(CphError):
    """Topology violates a solvability assumption on the circuit graph."""


class DisconnectedGraph(WellPosednessError):
    pass


Disconnected = DisconnectedGraph


class VoltageCycle(WellPosednessError):
    pass


class CurrentCutset(WellPosednessError):
    pass


# --- linear algebra ----------------------------------------------------------

class NonUnimodular(CphError):
    pass


class Singular(CphError, ArithmeticError):
    pass


class NoConvergence(CphError):
    pass


# --- trees and models --------------------------------------------------------

class NotATree(CphError):
    pass


class NotNormal(CphError):
    pass


class DimensionMismatch(CphError, ValueError):
    pass


# --- structural analysis -----------------------------------------------------

class StructurallyIllPosed(CphError):
    pass


class InvalidOffsets(CphError):
    pass


# --- solver ------------------------------------------------------------------

class NewtonDiverged(CphError):
    def __init__(self, message: str, trace: list[float] | None = None):
        self.trace = list(trace or [])
        super().__init__(message)


class SingularSubJacobian(CphError):
    pass


class StepFailure(CphError):
    def __init__(self, message: str, t_last: float):
        self.t_last = t_last
        super().__init__(f"{message} (last accepted t = {t_last!r})")


class SingularSelection(CphError):
    pass


# --- LTI -----------------------------------------------------------------------

class NotLTI(CphError):
    pass


class IrregularPencil(CphError):
    pass


class DefectiveSpectrum(CphError):
    pass


class GenerationFailed(CphError):
    pass
