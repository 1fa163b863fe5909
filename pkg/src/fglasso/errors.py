"""Exception hierarchy shared across the package."""


class FglassoError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(FglassoError):
    """Operands have incompatible shapes."""


class NotSymmetric(FglassoError):
    """Matrix expected to be symmetric is not, beyond tolerance."""


class NotPositiveDefinite(FglassoError):
    """Cholesky factorization failed or produced a negligible pivot."""


class SingularInput(FglassoError):
    """Unpenalized precision estimation requires a positive definite input."""


class RankDeficientRegressors(FglassoError):
    """An equation's regressor block is (numerically) rank deficient."""

    def __init__(self, equation: int, message: str | None = None):
        self.equation = equation
        super().__init__(message or f"regressor block of equation {equation} is rank deficient")


class SingularNormalMatrix(FglassoError):
    """The stacked GLS normal matrix is not positive definite."""


class SingularSigmaHat(FglassoError):
    """The residual covariance is singular (e.g. fewer periods than equations)."""


class NotPerfectSquare(FglassoError):
    """Lattice designs need a perfect-square system size."""


class RankDeficientTrainingSplit(FglassoError):
    """A cross-validation training split lost full rank in some equation."""

    def __init__(self, fold: int, equation: int):
        self.fold = fold
        self.equation = equation
        super().__init__(f"training split for fold {fold} is rank deficient in equation {equation}")


class TooLarge(FglassoError):
    """Input exceeds the size cap of a desk-scale diagnostic."""


class SingularGammaSS(FglassoError):
    """The on-support block of the Kronecker Hessian failed factorization."""


class ConfigInvalid(FglassoError):
    """A run configuration violates the published schema."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid configuration: " + "; ".join(self.violations))


class MissingFile(FglassoError):
    """A required input file is absent."""


class ShapeMismatch(FglassoError):
    """An input file has the wrong dimensions."""
