"""Exception types shared across the package."""


class IsingBosonError(Exception):
    """Base class for all package errors."""

    code = "E_GENERIC"


class CoincidentPoints(IsingBosonError):
    code = "E_COINCIDENT"


class OutsideDomain(IsingBosonError):
    code = "E_OUTSIDE"


class SolverNotConverged(IsingBosonError):
    code = "E_SOLVER"


class QuadratureNotConverged(IsingBosonError):
    code = "E_QUADRATURE"


class NotNegativeDefinite(IsingBosonError):
    code = "E_NOT_NEG_DEF"


class TruncationRadiusExceeded(IsingBosonError):
    code = "E_THETA_TRUNCATION"


class TruncationExceeded(IsingBosonError):
    code = "E_LATTICE_TRUNCATION"


class VanishingThetaConstant(IsingBosonError):
    code = "E_THETA_ZERO"


class OddDimension(IsingBosonError):
    code = "E_ODD_DIM"


class NotCircleMap(IsingBosonError):
    code = "E_NOT_CIRCLE_MAP"


class ParityDegenerate(IsingBosonError):
    code = "E_PARITY_DEGENERATE"


class StepUnderflow(IsingBosonError):
    code = "E_STEP_UNDERFLOW"


class PoleProximity(IsingBosonError):
    code = "E_POLE"


class SceneError(IsingBosonError):
    """Invalid scene description (validation diagnostics attached)."""

    code = "E_SCENE"

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))
