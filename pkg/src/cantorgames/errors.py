"""Exception types shared by every module."""


class GameError(Exception):
    """Base class for all package errors."""


# space
class NotInU(GameError):
    pass


class NonPositiveScale(GameError):
    pass


class NumericallyAmbiguous(GameError):
    """An interval enclosure straddles the bound; raise precision and retry."""


# cantor
class BudgetExceeded(GameError):
    def __init__(self, m, n, ball, count=None, budget=None):
        self.m, self.n, self.ball = m, n, ball
        super().__init__(f"budget r[{m},{n}]={budget} exceeded by {count} removals under {ball}")


class NotADescendant(GameError):
    pass


class DepthNotBuilt(GameError):
    pass


class NotLocal(GameError):
    pass


class RNotAboveM(GameError):
    pass


# engine
class StrategyFault(GameError):
    def __init__(self, player, turn, cause=None):
        self.player, self.turn, self.cause = player, turn, cause
        super().__init__(f"{player} strategy failed at turn {turn}: {cause!r}")


class EmptyTranscript(GameError):
    pass


class InfiniteBranching(GameError):
    pass


# strategies
class ParameterMismatch(GameError):
    pass


class NoEta(GameError):
    pass


class DepthExhausted(GameError):
    pass


class ParameterGateFailed(GameError):
    pass


class NotACover(GameError):
    def __init__(self, witness, msg=None):
        self.witness = witness
        super().__init__(msg or f"point {witness} is not covered")


class BadCountExceeded(GameError):
    pass


class CoverSampleInsufficient(GameError):
    pass


class CoverBudgetViolated(GameError):
    pass


class BudgetViolated(GameError):
    pass


class GateFailed(GameError):
    pass


class GapTooSmall(GameError):
    pass


class FirstIndexTooSmall(GameError):
    pass


class NoScaleIndex(GameError):
    pass


# fractal
class TooFewScales(GameError):
    pass


class NotRegularAtSample(GameError):
    def __init__(self, point, radius, ratio):
        self.point, self.radius, self.ratio = point, radius, ratio
        super().__init__(f"mass ratio {ratio} out of range at x={point}, r={radius}")


class WitnessNotFound(GameError):
    pass


class ChildrenCollide(GameError):
    pass


class IllegalProbe(GameError):
    pass


class NoRootInUnitInterval(GameError):
    pass


# cli
class ParseError(GameError):
    pass


class UnknownStrategy(GameError):
    pass
