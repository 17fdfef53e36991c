"""Exception hierarchy. Every error carries a short machine-readable ``code``."""

from __future__ import annotations


class GlrError(Exception):
    code = "GLR_ERROR"

    def __init__(self, message: str, node: int | None = None):
        super().__init__(message)
        self.node = node


class ParseError(GlrError):
    code = "PARSE_ERROR"


class ValidationError(GlrError):
    code = "VALIDATION_ERROR"


class BadProbability(ValidationError):
    code = "BAD_PROBABILITY"


class RaggedHorizon(ValidationError):
    code = "RAGGED_HORIZON"


class OrphanNode(ValidationError):
    code = "ORPHAN_NODE"


class NonFiniteNumber(ValidationError):
    code = "NON_FINITE_NUMBER"


class MalformedTree(ValidationError):
    """Structural problems not covered above: duplicate ids, wrong root, bad stage numbering."""

    code = "MALFORMED_TREE"


class KeyMismatch(ValidationError):
    code = "KEY_MISMATCH"


class BadLambda(ValidationError):
    code = "BAD_LAMBDA"


class BadScale(ValidationError):
    code = "BAD_SCALE"


class BadSpec(ValidationError):
    code = "BAD_SPEC"


class PreconditionViolated(ValidationError):
    code = "PRECONDITION_VIOLATED"


class ZeroPayoff(GlrError):
    code = "ZERO_PAYOFF"


class SolverError(GlrError):
    code = "SOLVER_ERROR"


class DimensionMismatch(SolverError):
    code = "DIMENSION_MISMATCH"


class NumericalBreakdown(SolverError):
    code = "NUMERICAL_BREAKDOWN"


class NoGoodDealKernel(GlrError):
    """No martingale kernel with sup/inf ratio at most ``lam`` exists.

    ``threshold`` is the smallest level at which one does (the market's best
    gain-loss); it is ``inf`` when no bounded, bounded-away kernel exists at all.
    """

    code = "NO_KERNEL"

    def __init__(self, lam: float, threshold: float):
        super().__init__(f"no martingale kernel with ratio <= {lam!r} (threshold {threshold!r})")
        self.lam = lam
        self.threshold = threshold
