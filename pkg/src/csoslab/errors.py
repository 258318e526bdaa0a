"""Exception hierarchy shared by all csoslab modules."""


class CsosError(Exception):
    """Base class for all numerical-engine errors."""


class NonConvergent(CsosError):
    """Theta series failed to reach the tolerance within the term cap."""


class SingularPoint(CsosError):
    """An argument landed on (or too close to) the zero lattice of a bracket."""


class DegenerateInput(CsosError):
    """Input parameters degenerate (e.g. vanishing modular denominator)."""


class MultiplierNotAdmissible(CsosError):
    """The cyclic constraint on the state multiplier is violated."""


class NotABetheSolution(CsosError):
    """A root set required to satisfy the Bethe equations does not."""


class PathCollision(CsosError):
    """Two continuation paths approached each other too closely."""


class NoConvergence(CsosError):
    """Newton path-following exhausted its step budget."""


class CensusIncomplete(CsosError):
    """Fewer root-census solutions survived than the completeness count."""


class CensusIncompleteWarning(UserWarning):
    """Non-fatal census shortfall (reported, continuation kept going)."""


class GammaDegenerate(CsosError):
    """No usable auxiliary shift parameter found after reselection."""


class SingularTransfer(CsosError):
    """A transfer matrix evaluation needed for an inverse is singular."""


class CoincidingRoots(CsosError):
    """Root sets coincide where a strict-limit formula would be required."""


class IllConditionedFit(CsosError):
    """Polynomial coefficient extraction is too ill-conditioned to trust."""


class ConfigError(CsosError):
    """Run configuration failed validation."""


class NumericalFailure(CsosError):
    """A verification run produced residuals above tolerance."""
