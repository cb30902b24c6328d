"""Sphere quadrature of the damping/shift direction integrals.

The integrand at direction omega_hat is

    gamma:  w * (l_odd cos^2(u) + l_even sin^2(u))
    shift:  w * (d_odd cos^2(u) + d_even sin^2(u))

with u = omega_hat . kr, w the polarization weight (1 for the isotropic
average) and the resonance factors evaluated at the aberration phase of
the ray through kr.  The mirror reflectivity applies only inside the
double cap |cos(theta)| >= cos(theta_eff); outside it the factors reduce
exactly to (1, 0) since T = 1 and both denominators are 1 there, so the
sample collapses to (w, 0).

The integrand oscillates with spatial frequency up to |kr| across the
sphere, so node counts scale linearly in |kr| (with a floor), and the
reflectivity jump at the cap edge forces a subdomain split: panels are
[0, theta_eff], [theta_eff, pi - theta_eff], [pi - theta_eff, pi], each
integrated with Gauss-Legendre nodes in cos(theta) and a uniform
periodic rule in azimuth.  Everything here is pure; summation order is
fixed, so results are bit-stable no matter how callers parallelize.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .cavity import (
    ISOTROPIC,
    PARALLEL,
    CavityConfig,
    DipoleOrientation,
    Position,
    Response,
    effective_theta,
)

_EDGE_TOL = 1e-12


class ConvergenceError(RuntimeError):
    """Doubling the node counts moved the result more than the requested
    tolerance.  Carries the refined estimate and the observed change."""

    def __init__(self, message: str, estimate: Response, change: tuple):
        super().__init__(message)
        self.estimate = estimate
        self.change = change


@lru_cache(maxsize=64)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def polar_node_floor(kr_norm: float) -> int:
    """Minimum Gauss-Legendre nodes per polar subdomain: at least four
    nodes per oscillation period, never fewer than 32."""
    return max(32, math.ceil(4.0 * (kr_norm + 1.0)))


def azimuth_node_floor(kr_perp: float) -> int:
    """Minimum uniform azimuth nodes, scaled by the transverse offset."""
    return max(16, math.ceil(4.0 * (kr_perp + 1.0)))


@dataclass(frozen=True)
class AngularGrid:
    """Node counts plus the polar angles where the integrand is only
    piecewise smooth (the cap edges)."""

    n_polar: int
    n_azimuth: int
    subdomain_boundaries: tuple[float, float]

    def __post_init__(self):
        if self.n_polar < 1 or self.n_azimuth < 1:
            raise ValueError("node counts must be positive")
        lo, hi = self.subdomain_boundaries
        if not (0.0 < lo < hi < math.pi):
            raise ValueError(
                "subdomain boundaries must be strictly increasing inside "
                f"(0, pi), got {self.subdomain_boundaries}"
            )

    @classmethod
    def for_position(cls, kr, config: CavityConfig,
                     scale: float = 1.0) -> "AngularGrid":
        """Default grid for a position: the node floors, plus a fixed
        azimuth margin (the periodic rule needs ~16 modes beyond the
        integrand's band edge before its spectral tail dies).  ``scale``
        (>= 1) buys extra margin on both counts."""
        kr = Position.of(kr).vec
        kr_norm = float(np.linalg.norm(kr))
        kr_perp = float(math.hypot(kr[0], kr[1]))
        theta = effective_theta(config)
        return cls(
            n_polar=math.ceil(scale * polar_node_floor(kr_norm)),
            n_azimuth=math.ceil(scale * (azimuth_node_floor(kr_perp) + 16)),
            subdomain_boundaries=(theta, math.pi - theta),
        )

    def doubled(self) -> "AngularGrid":
        return replace(self, n_polar=2 * self.n_polar,
                       n_azimuth=2 * self.n_azimuth)

    def check_admissible(self, kr: np.ndarray, config: CavityConfig) -> None:
        """Reject grids below the node floor or with stale cap edges."""
        kr_norm = float(np.linalg.norm(kr))
        kr_perp = float(math.hypot(kr[0], kr[1]))
        if self.n_polar < polar_node_floor(kr_norm):
            raise ValueError(
                f"n_polar={self.n_polar} is below the floor "
                f"{polar_node_floor(kr_norm)} for |kr|={kr_norm:.2f}"
            )
        if self.n_azimuth < azimuth_node_floor(kr_perp):
            raise ValueError(
                f"n_azimuth={self.n_azimuth} is below the floor "
                f"{azimuth_node_floor(kr_perp)} for |kr_perp|={kr_perp:.2f}"
            )
        theta = effective_theta(config)
        lo, hi = self.subdomain_boundaries
        if abs(lo - theta) > _EDGE_TOL or abs(hi - (math.pi - theta)) > _EDGE_TOL:
            raise ValueError(
                "grid subdomain boundaries do not match the cap edges of "
                "this cavity configuration"
            )


@dataclass(frozen=True)
class IntegrandSample:
    """Pointwise value of both direction integrands."""

    direction: tuple[float, float, float]
    gamma_term: float
    shift_term: float


def _pol_weight(orientation: DipoleOrientation, ox, oy, oz):
    d = orientation.unit_vector
    if d is None:
        return None  # isotropic: weight is identically 1
    cos = ox * d[0] + oy * d[1] + oz * d[2]
    return 1.5 * (1.0 - cos * cos)


def _resonant_terms(rho: float, phi, u):
    """Damping/dispersive brackets inside the reflective caps."""
    t = 1.0 - rho * rho
    sin_phi_sq = np.sin(phi) ** 2
    a = (1.0 - rho) ** 2 + 4.0 * rho * sin_phi_sq
    b = (1.0 + rho) ** 2 - 4.0 * rho * sin_phi_sq
    sin_2phi = np.sin(2.0 * phi)
    cos_u_sq = np.cos(u) ** 2
    sin_u_sq = 1.0 - cos_u_sq
    gamma = (t / a) * cos_u_sq + (t / b) * sin_u_sq
    shift = (rho * sin_2phi / a) * cos_u_sq - (rho * sin_2phi / b) * sin_u_sq
    return gamma, shift


def _dispersive_derivatives(rho: float, phi):
    """d/dphi of the odd and even dispersive factors."""
    sin_phi_sq = np.sin(phi) ** 2
    a = (1.0 - rho) ** 2 + 4.0 * rho * sin_phi_sq
    b = (1.0 + rho) ** 2 - 4.0 * rho * sin_phi_sq
    sin_2phi = np.sin(2.0 * phi)
    cos_2phi = np.cos(2.0 * phi)
    dd_odd = 2.0 * rho * cos_2phi / a - 4.0 * rho**2 * sin_2phi**2 / a**2
    dd_even = -2.0 * rho * cos_2phi / b - 4.0 * rho**2 * sin_2phi**2 / b**2
    return dd_odd, dd_even


def _gradient_parts(rho: float, phi, u):
    """Pieces of d(shift integrand)/d(kr), by the chain rule: ``u_part``
    multiplies Omega_hat (standing-wave factors), ``phase_part``
    multiplies grad(phi) = (kr - u Omega_hat)/kR (resonance factors)."""
    sin_phi_sq = np.sin(phi) ** 2
    a = (1.0 - rho) ** 2 + 4.0 * rho * sin_phi_sq
    b = (1.0 + rho) ** 2 - 4.0 * rho * sin_phi_sq
    sin_2phi = np.sin(2.0 * phi)
    d_odd = rho * sin_2phi / a
    d_even = -rho * sin_2phi / b
    dd_odd, dd_even = _dispersive_derivatives(rho, phi)
    cos_u_sq = np.cos(u) ** 2
    phase_part = dd_odd * cos_u_sq + dd_even * (1.0 - cos_u_sq)
    u_part = (d_even - d_odd) * np.sin(2.0 * u)
    return u_part, phase_part


def _sample_terms(dirs: np.ndarray, kr: np.ndarray,
                  orientation: DipoleOrientation, config: CavityConfig,
                  phi0: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized integrand over an (n, 3) array of unit directions."""
    ox, oy, oz = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    w = _pol_weight(orientation, ox, oy, oz)
    if w is None:
        w = np.ones_like(oz)
    gamma = w.copy()
    shift = np.zeros_like(w)
    if config.rho > 0.0:
        inside = np.abs(oz) >= math.cos(effective_theta(config))
        if np.any(inside):
            u = dirs[inside] @ kr
            kr_sq = float(kr @ kr)
            phi = phi0 + (kr_sq - u * u) / (2.0 * config.k_r_mirror)
            g, s = _resonant_terms(config.rho, phi, u)
            gamma[inside] = w[inside] * g
            shift[inside] = w[inside] * s
    return gamma, shift


def integrand_at(omega_hat, kr, orientation: DipoleOrientation,
                 config: CavityConfig, phi0: float) -> IntegrandSample:
    """Evaluate both integrands for a single direction.

    The reflectivity seen by the ray is rho inside the double cap and 0
    outside, where the sample reduces exactly to (w, 0).
    """
    omega = np.asarray(omega_hat, dtype=float)
    if abs(omega @ omega - 1.0) > 1e-9:
        raise ValueError("omega_hat must be a unit vector")
    kr = Position.of(kr).vec
    gamma, shift = _sample_terms(omega[None, :], kr, orientation, config, phi0)
    return IntegrandSample(
        direction=(omega[0], omega[1], omega[2]),
        gamma_term=float(gamma[0]),
        shift_term=float(shift[0]),
    )


def _panels(config: CavityConfig, grid: AngularGrid):
    """Panels in c = cos(theta), north to south, with reflectivity flag."""
    lo, hi = grid.subdomain_boundaries
    c_edge = math.cos(lo)
    return [
        (c_edge, 1.0, True),
        (-c_edge, c_edge, False),
        (-1.0, -c_edge, True),
    ]


def _integrate_general(kr, orientation, config, phi0, grid, with_gradient):
    kx, ky, kz = kr
    kr_sq = float(kr @ kr)
    rho = config.rho
    kR = config.k_r_mirror
    d = orientation.unit_vector

    az = 2.0 * math.pi * np.arange(grid.n_azimuth) / grid.n_azimuth
    w_az = 2.0 * math.pi / grid.n_azimuth
    cos_az, sin_az = np.cos(az), np.sin(az)

    gamma = 0.0
    shift = 0.0
    grad = np.zeros(3) if with_gradient else None
    for c_lo, c_hi, reflective in _panels(config, grid):
        x, w_gl = _leggauss(grid.n_polar)
        c = 0.5 * (c_hi - c_lo) * x + 0.5 * (c_hi + c_lo)
        wc = 0.5 * (c_hi - c_lo) * w_gl
        s = np.sqrt(np.clip(1.0 - c * c, 0.0, None))

        ox = s[:, None] * cos_az[None, :]
        oy = s[:, None] * sin_az[None, :]
        oz = np.broadcast_to(c[:, None], ox.shape)

        if d is None:
            w_pol = np.ones_like(ox)
        else:
            cos_d = ox * d[0] + oy * d[1] + oz * d[2]
            w_pol = 1.5 * (1.0 - cos_d * cos_d)

        if reflective and rho > 0.0:
            u = ox * kx + oy * ky + oz * kz
            phi = phi0 + (kr_sq - u * u) / (2.0 * kR)
            g, sh = _resonant_terms(rho, phi, u)
            f_gamma = w_pol * g
            f_shift = w_pol * sh
            shift += wc @ f_shift.sum(axis=1) * w_az
            if with_gradient:
                u_part, phase_part = _gradient_parts(rho, phi, u)
                for axis, (o_axis, k_axis) in enumerate(
                        [(ox, kx), (oy, ky), (oz, kz)]):
                    f = w_pol * (u_part * o_axis
                                 + phase_part * (k_axis - u * o_axis) / kR)
                    grad[axis] += wc @ f.sum(axis=1) * w_az
        else:
            f_gamma = w_pol
        gamma += wc @ f_gamma.sum(axis=1) * w_az

    norm = 4.0 * math.pi
    grad = grad / norm if with_gradient else None
    return gamma / norm, shift / norm, grad


def _integrate_on_axis(kz, orientation, config, phi0, grid, with_gradient):
    """Azimuth-reduced rule for on-axis positions with axis-parallel or
    isotropic dipoles: the integrand has no azimuthal dependence, so the
    azimuth integral is exactly 2*pi."""
    rho = config.rho
    kR = config.k_r_mirror
    gamma = 0.0
    shift = 0.0
    grad_z = 0.0
    for c_lo, c_hi, reflective in _panels(config, grid):
        x, w_gl = _leggauss(grid.n_polar)
        c = 0.5 * (c_hi - c_lo) * x + 0.5 * (c_hi + c_lo)
        wc = 0.5 * (c_hi - c_lo) * w_gl
        s_sq = np.clip(1.0 - c * c, 0.0, None)
        w_pol = 1.5 * s_sq if orientation.kind == PARALLEL else np.ones_like(c)

        if reflective and rho > 0.0:
            u = kz * c
            phi = phi0 + kz * kz * s_sq / (2.0 * kR)
            g, sh = _resonant_terms(rho, phi, u)
            gamma += wc @ (w_pol * g)
            shift += wc @ (w_pol * sh)
            if with_gradient:
                u_part, phase_part = _gradient_parts(rho, phi, u)
                f = w_pol * (u_part * c + phase_part * (kz - u * c) / kR)
                grad_z += wc @ f
        else:
            gamma += wc @ w_pol

    grad = np.array([0.0, 0.0, grad_z / 2.0]) if with_gradient else None
    return gamma / 2.0, shift / 2.0, grad


def _integrate_once(kr, orientation, config, phi0, grid, with_gradient,
                    use_fast_path):
    on_axis = kr[0] == 0.0 and kr[1] == 0.0
    if use_fast_path and on_axis and orientation.kind in (PARALLEL, ISOTROPIC):
        return _integrate_on_axis(kr[2], orientation, config, phi0, grid,
                                  with_gradient)
    return _integrate_general(kr, orientation, config, phi0, grid,
                              with_gradient)


def integrate_sphere(kr, orientation: DipoleOrientation, config: CavityConfig,
                     phi0: float, grid: AngularGrid | None = None,
                     tolerance: float | None = None,
                     with_gradient: bool = False,
                     use_fast_path: bool = True) -> Response:
    """Average both integrands over the full solid angle.

    With a ``tolerance``, the grid is doubled once and the refined result
    is returned; if the two estimates disagree by more than the tolerance
    (relative, floored at 1 in absolute terms) a ConvergenceError is
    raised carrying the refined estimate.
    """
    kr = Position.of(kr).vec
    if grid is None:
        grid = AngularGrid.for_position(kr, config)
    grid.check_admissible(kr, config)

    gamma, shift, grad = _integrate_once(kr, orientation, config, phi0, grid,
                                         with_gradient, use_fast_path)
    if tolerance is not None:
        gamma2, shift2, grad2 = _integrate_once(
            kr, orientation, config, phi0, grid.doubled(), with_gradient,
            use_fast_path)
        d_gamma = abs(gamma2 - gamma)
        d_shift = abs(shift2 - shift)
        ok = (d_gamma <= tolerance * max(1.0, abs(gamma2))
              and d_shift <= tolerance * max(1.0, abs(shift2)))
        if with_gradient:
            d_grad = float(np.linalg.norm(grad2 - grad))
            ok = ok and d_grad <= tolerance * max(1.0, float(np.linalg.norm(grad2)))
        gamma, shift, grad = gamma2, shift2, grad2
        if not ok:
            estimate = Response(float(gamma), float(shift), grad)
            raise ConvergenceError(
                f"sphere integral did not converge at |kr|="
                f"{float(np.linalg.norm(kr)):.2f}: doubling changed "
                f"(gamma, shift) by ({d_gamma:.3e}, {d_shift:.3e}) "
                f"with tolerance {tolerance:g}",
                estimate=estimate,
                change=(d_gamma, d_shift),
            )
    return Response(float(gamma), float(shift), grad)


def monte_carlo_reference(kr, orientation: DipoleOrientation,
                          config: CavityConfig, phi0: float,
                          n_samples: int, seed: int
                          ) -> tuple[Response, tuple[float, float]]:
    """Uniform-on-sphere Monte-Carlo estimate of both integrals.

    Returns the mean Response and the standard error of each component.
    Deterministic for a fixed seed; intended as an independent oracle for
    integrate_sphere, not for production use.
    """
    if n_samples < 10_000:
        raise ValueError("n_samples must be at least 10^4")
    kr = Position.of(kr).vec
    rng = np.random.default_rng(seed)
    z = rng.uniform(-1.0, 1.0, n_samples)
    az = rng.uniform(0.0, 2.0 * math.pi, n_samples)
    s = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    dirs = np.column_stack([s * np.cos(az), s * np.sin(az), z])
    gamma, shift = _sample_terms(dirs, kr, orientation, config, phi0)
    se_gamma = float(np.std(gamma, ddof=1) / math.sqrt(n_samples))
    se_shift = float(np.std(shift, ddof=1) / math.sqrt(n_samples))
    return (
        Response(float(np.mean(gamma)), float(np.mean(shift))),
        (se_gamma, se_shift),
    )
