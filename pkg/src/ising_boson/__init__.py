"""Exact correlation engine for the critical planar Ising model on
multiply connected circular domains, computed through the compactified
free boson: squared Ising correlations equal boson correlations.
"""

from .boson import (
    BoundarySign,
    CorrelationResult,
    Cos,
    DBarPhi,
    DPhi,
    GradSquared,
    NormalExp,
    Scene,
    Sin,
    correlate,
    correlate_fd_oracle,
    exp_correlation,
)
from .geometry import (
    BoundaryArc,
    BoundaryData,
    Circle,
    CircularDomain,
    HalfPlaneDomain,
    Insertion,
    all_wired,
)
from .ising import (
    BoundarySigma,
    Epsilon,
    Mobius,
    Mu,
    Psi,
    PsiStar,
    Sigma,
    conformal_transport,
    fermion_pair_ratio,
    ising_correlation_squared,
    product_prescriptions,
    sigma_correlation,
)
from .scenes import SceneSpec, build_scene, load_scene
from .verify import run_checks

__version__ = "0.1.0"

__all__ = [
    "BoundaryArc",
    "BoundaryData",
    "BoundarySigma",
    "BoundarySign",
    "Circle",
    "CircularDomain",
    "CorrelationResult",
    "Cos",
    "DBarPhi",
    "DPhi",
    "Epsilon",
    "GradSquared",
    "HalfPlaneDomain",
    "Insertion",
    "Mobius",
    "Mu",
    "NormalExp",
    "Psi",
    "PsiStar",
    "Scene",
    "SceneSpec",
    "Sigma",
    "Sin",
    "all_wired",
    "build_scene",
    "conformal_transport",
    "correlate",
    "correlate_fd_oracle",
    "exp_correlation",
    "fermion_pair_ratio",
    "ising_correlation_squared",
    "load_scene",
    "product_prescriptions",
    "run_checks",
    "sigma_correlation",
    "__version__",
]
