"""Topology-derivative kernels for compliance under a small circular or spherical void.

The polarisation tensor is never formed as a rank-4 array. For isotropic
media it acts as

    sigma_adj : A : sigma = k1 (sigma_adj : sigma) + k2 tr(sigma_adj) tr(sigma)

and only (k1, k2) are stored per case.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class Case(str, enum.Enum):
    PLANE_STRESS = "plane_stress"
    PLANE_STRAIN = "plane_strain"
    THREE_D = "3d"

    @property
    def dim(self) -> int:
        return 3 if self is Case.THREE_D else 2


@dataclass(frozen=True)
class ElasticConstants:
    E: float
    nu: float

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError(f"Young's modulus must be positive, got {self.E}")
        if not -1.0 < self.nu < 0.5:
            raise ValueError(f"Poisson's ratio must lie in (-1, 0.5), got {self.nu}")

    @property
    def G(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def K(self) -> float:
        return self.E / (3.0 * (1.0 - 2.0 * self.nu))


@dataclass(frozen=True)
class EshelbyConstants:
    a: float
    b: float


@dataclass(frozen=True)
class PerforationSpec:
    center: tuple[float, ...]
    rho: float = 0.05
    n: int = 2

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.rho > 0:
            raise ValueError(f"perforation radius must be positive, got {self.rho}")
        if self.n not in (2, 3):
            raise ValueError(f"spatial dimension must be 2 or 3, got {self.n}")
        if len(self.center) != self.n:
            raise ValueError(f"center has {len(self.center)} coordinates for dimension {self.n}")

    @property
    def scale(self) -> float:
        """rho**n, the measure factor in the asymptotic expansion."""
        return self.rho**self.n


def sym_stress(components) -> np.ndarray:
    """Full symmetric matrix from a 2x2/3x3 array or the upper triangle (xx, xy, yy) / (xx, xy, xz, yy, yz, zz)."""
    a = np.asarray(components, dtype=float)
    if a.shape in ((2, 2), (3, 3)):
        if not np.array_equal(a, a.T):
            raise ValueError("stress tensor is not symmetric")
        return a
    if a.shape == (3,):
        return np.array([[a[0], a[1]], [a[1], a[2]]])
    if a.shape == (6,):
        return np.array([[a[0], a[1], a[2]], [a[1], a[3], a[4]], [a[2], a[4], a[5]]])
    raise ValueError(f"cannot interpret shape {a.shape} as a symmetric stress")


def contraction_coefficients(case: Case, el: ElasticConstants) -> tuple[float, float]:
    E, nu = el.E, el.nu
    case = Case(case)
    if case is Case.PLANE_STRESS:
        f = math.pi / E
        return 4.0 * f, -f
    if case is Case.PLANE_STRAIN:
        f = math.pi * (1.0 - nu * nu) / E
        return 4.0 * f, -f
    f = 2.0 * math.pi * (1.0 - nu) / (E * (7.0 - 5.0 * nu))
    return 10.0 * (1.0 + nu) * f, -(5.0 * nu + 1.0) * f


def _check_pair(case: Case, *tensors):
    for t in tensors:
        if t.shape != (case.dim, case.dim):
            raise ValueError(f"{case.value} needs {case.dim}x{case.dim} stresses, got {t.shape}")


def amplification_contract(case: Case, el: ElasticConstants, sigma_adj, sigma) -> float:
    """sigma_adj : A : sigma, the pointwise topology derivative of compliance-type functionals."""
    case = Case(case)
    sa, s = sym_stress(sigma_adj), sym_stress(sigma)
    _check_pair(case, sa, s)
    k1, k2 = contraction_coefficients(case, el)
    return float(k1 * np.sum(sa * s) + k2 * np.trace(sa) * np.trace(s))


def eshelby_constants(el: ElasticConstants) -> EshelbyConstants:
    E, nu = el.E, el.nu
    return EshelbyConstants((1.0 + nu) / (2.0 * E), 2.0 * (4.0 - 5.0 * nu * nu - nu) / (E * (7.0 - 5.0 * nu)))


def external_displacement(case: Case, el: ElasticConstants, sigma, normal, rho: float) -> np.ndarray:
    """Displacement on the void boundary at outward unit normal ``normal`` (pointing into the void's exterior)."""
    case = Case(case)
    s = sym_stress(sigma)
    _check_pair(case, s)
    n = np.asarray(normal, dtype=float)
    if n.shape != (case.dim,):
        raise ValueError(f"normal must have {case.dim} components")
    if abs(np.linalg.norm(n) - 1.0) > 1e-12:
        raise ValueError("normal must be a unit vector")
    if not rho > 0:
        raise ValueError("rho must be positive")
    E, nu = el.E, el.nu
    tr = np.trace(s)
    ns = n @ s
    if case is Case.PLANE_STRESS:
        return rho * ((nu - 1.0) / E * tr * n + (3.0 - nu) / E * ns)
    if case is Case.PLANE_STRAIN:
        return rho * (1.0 + nu) / E * ((2.0 * nu - 1.0) * tr * n + (3.0 - 4.0 * nu) * ns)
    c = eshelby_constants(el)
    return rho * ((c.a - c.b) / 3.0 * tr * n + c.b * ns)


def _compliance_form(case: Case, el: ElasticConstants, sa: np.ndarray, s: np.ndarray) -> float:
    """sigma_adj : C^-1 : sigma for the in-plane (or full) stress components."""
    E, nu = el.E, el.nu
    dot, trs = float(np.sum(sa * s)), float(np.trace(sa) * np.trace(s))
    if case is Case.PLANE_STRAIN:
        return (1.0 + nu) / E * (dot - nu * trs)
    return (1.0 + nu) / E * dot - nu / E * trs


def _unit_sphere_rule(dim: int, n: int = 16):
    if dim == 2:
        t = 2.0 * math.pi * np.arange(n) / n
        return np.stack([np.cos(t), np.sin(t)], axis=1), np.full(n, 2.0 * math.pi / n)
    x, w = np.polynomial.legendre.leggauss(n)
    phi = 2.0 * math.pi * np.arange(2 * n) / (2 * n)
    ct, p = np.meshgrid(x, phi, indexing="ij")
    st = np.sqrt(1.0 - ct**2)
    normals = np.stack([st * np.cos(p), st * np.sin(p), ct], axis=-1).reshape(-1, 3)
    weights = np.outer(w, np.full(2 * n, 2.0 * math.pi / (2 * n))).ravel()
    return normals, weights


def energy_route(case: Case, el: ElasticConstants, sigma_adj, sigma, rho: float = 1.0) -> float:
    """Topology derivative rebuilt from the void's strain energy and boundary work.

    D_T = [|omega_rho| sigma_adj : C^-1 : sigma + int_{d omega_rho} u(sigma) . (sigma_adj n)] / rho^n,
    with the boundary displacement from :func:`external_displacement`. The surface
    integral uses a rule exact for the quadratic-in-n integrand.
    """
    case = Case(case)
    sa, s = sym_stress(sigma_adj), sym_stress(sigma)
    _check_pair(case, sa, s)
    dim = case.dim
    volume = math.pi * rho**2 if dim == 2 else 4.0 / 3.0 * math.pi * rho**3
    normals, weights = _unit_sphere_rule(dim)
    jac = rho ** (dim - 1)
    boundary = 0.0
    for n, w in zip(normals, weights):
        n = n / np.linalg.norm(n)
        boundary += w * jac * float(external_displacement(case, el, s, n, rho) @ (sa @ n))
    return (volume * _compliance_form(case, el, sa, s) + boundary) / rho**dim


# -- asymptotic check ---------------------------------------------------------


@dataclass
class RingConvergence:
    rhos: np.ndarray
    quotients: np.ndarray
    errors: np.ndarray
    rate: float
    expected_rate: float
    converged: bool
    step_rates: np.ndarray = field(default_factory=lambda: np.empty(0))

    def to_dict(self) -> dict:
        return {"rhos": self.rhos.tolist(), "quotients": self.quotients.tolist(),
                "errors": self.errors.tolist(), "rate": self.rate, "expected_rate": self.expected_rate,
                "converged": self.converged}


def asymptotic_ring_check(y_disk, y_ring, dt_value: float, n: int = 2, rho0: float = 0.1, steps: int = 7,
                          expected_rate: float = 2.0, rate_tol: float = 0.2) -> RingConvergence:
    """Check (y_ring(rho) - y_disk) / rho^n -> dt_value on rho_k = rho0 * 2^-k.

    ``y_disk`` is a number or a zero-argument callable. Convergence means the
    fitted log-log slope of the error is within ``rate_tol`` (relative) of
    ``expected_rate``, or the error is at roundoff level throughout.
    """
    base = float(y_disk() if callable(y_disk) else y_disk)
    rhos = rho0 * 0.5 ** np.arange(steps)
    q = np.array([(float(y_ring(r)) - base) / r**n for r in rhos])
    err = np.abs(q - dt_value)
    floor = 1e-13 * max(abs(dt_value), abs(base), 1e-300)
    if np.all(err <= floor):
        return RingConvergence(rhos, q, err, float("nan"), expected_rate, True, np.full(steps - 1, np.nan))
    if np.any(~np.isfinite(q)) or np.any(err <= 0):
        return RingConvergence(rhos, q, err, float("nan"), expected_rate, False, np.full(steps - 1, np.nan))
    log_r, log_e = np.log(rhos), np.log(err)
    rate = float(np.polyfit(log_r, log_e, 1)[0])
    step = np.diff(log_e) / np.diff(log_r)
    ok = abs(rate - expected_rate) <= rate_tol * expected_rate and err[-1] < err[0]
    return RingConvergence(rhos, q, err, rate, expected_rate, bool(ok), step)
