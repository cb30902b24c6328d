"""Spontaneous-emission modification and vacuum-induced trapping for a
two-level atom near the center of a wide-aperture spherical-mirror
cavity: resonance factors, center closed forms, sphere quadrature with a
Monte-Carlo oracle, shift gradients, forces and trap profiles."""

from .cavity import (
    AiryFactors,
    CavityConfig,
    Detuning,
    DipoleOrientation,
    Position,
    Response,
    ValidityWarning,
    aberration_phase,
    airy_factors,
    center_gamma,
    center_response,
    center_shift,
    detuning_to_phase,
    effective_theta,
    phase_fwhm,
    polarization_weight,
)
from .fields import (
    ForceResult,
    ScanResult,
    ScanSpec,
    WeakExcitationError,
    excited_population,
    force_at,
    response_at,
    run_scan,
    shift_gradient,
    trap_minimum,
)
from .quadrature import (
    AngularGrid,
    ConvergenceError,
    IntegrandSample,
    integrand_at,
    integrate_sphere,
    monte_carlo_reference,
)

__version__ = "0.1.0"

__all__ = [
    "AiryFactors",
    "AngularGrid",
    "CavityConfig",
    "ConvergenceError",
    "Detuning",
    "DipoleOrientation",
    "ForceResult",
    "IntegrandSample",
    "Position",
    "Response",
    "ScanResult",
    "ScanSpec",
    "ValidityWarning",
    "WeakExcitationError",
    "aberration_phase",
    "airy_factors",
    "center_gamma",
    "center_response",
    "center_shift",
    "detuning_to_phase",
    "effective_theta",
    "excited_population",
    "force_at",
    "integrand_at",
    "integrate_sphere",
    "monte_carlo_reference",
    "phase_fwhm",
    "polarization_weight",
    "response_at",
    "run_scan",
    "shift_gradient",
    "trap_minimum",
    "__version__",
]
