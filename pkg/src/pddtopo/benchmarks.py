"""Analytical pressure-loaded unit-disk benchmarks.

``disk_uniform``: plane-stress unit disk under uniform pressure p0 with
random E (inverse-uniform on [2, 4]) and p0 (uniform on [1, 2]).

``disk_trig``: the same disk under the pressure
f(theta) = D0 + sum_k (D_k cos (k+1)theta + E_k sin (k+1)theta), with all
harmonic amplitudes, E and nu random.

Both expose the compliance of the intact disk, of the disk with a centred
hole of radius rho, and the topology derivative at the centre.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import randvars as rvs
from .orthopoly import gauss_rule
from .randvars import RandomVector

# -- uniform pressure ------------------------------------------------------------


def disk_compliance(E, p0, nu):
    return 2.0 * np.pi * (1.0 - nu) * np.asarray(p0) ** 2 / np.asarray(E)


def disk_ring_compliance(E, p0, nu, rho):
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    r2 = rho * rho
    return 2.0 * np.pi * np.asarray(p0) ** 2 * ((1.0 + nu) * r2 + (1.0 - nu)) / (np.asarray(E) * (1.0 - r2))


def disk_dt_center(E, p0):
    return 4.0 * np.pi * np.asarray(p0) ** 2 / np.asarray(E)


def disk_pdf_compliance(y, nu: float = 0.2):
    """Density of the compliance when 1/E ~ U(1/4, 1/2) and p0 ~ U(1, 2)."""
    a = np.pi * (1.0 - nu)
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.sqrt(2.0 * a / y)
        out = np.select(
            [(y >= a / 2) & (y < a), (y >= a) & (y < 2 * a), (y >= 2 * a) & (y < 4 * a)],
            [(2.0 - r) / a, r * (math.sqrt(2.0) - 1.0) / a, (math.sqrt(2.0) * r - 1.0) / a],
            0.0,
        )
    return out


def disk_cdf_compliance(y, nu: float = 0.2):
    a = np.pi * (1.0 - nu)
    y = np.asarray(y, dtype=float)
    t = np.clip(y, 0.0, None) / a
    s = np.sqrt(t)
    out = np.select(
        [y < a / 2, y < a, y < 2 * a, y < 4 * a],
        [0.0, 2.0 * t - 2.0 * math.sqrt(2.0) * s + 1.0,
         3.0 - 2.0 * math.sqrt(2.0) + (4.0 - 2.0 * math.sqrt(2.0)) * (s - 1.0),
         4.0 * s - t - 3.0],
        1.0,
    )
    return out


def disk_failure_probability(threshold: float, nu: float = 0.2, direction: str = "above") -> float:
    p = float(disk_cdf_compliance(threshold, nu))
    return 1.0 - p if direction == "above" else p


def disk_dt_failure_probability(threshold: float, nu: float = 0.2, direction: str = "above") -> float:
    """rho -> 0 limit of the perforation sensitivity of P_F at the centre.

    The centre derivative is z = 2 y / (1 - nu), so the perturbed response is
    y (1 + kappa rho^2) and d P_F / d(rho^2) = +-kappa * ybar * f_Y(ybar).
    """
    kappa = 2.0 / (1.0 - nu)
    val = kappa * threshold * float(disk_pdf_compliance(threshold, nu))
    return val if direction == "above" else -val


def disk_uniform_inputs() -> RandomVector:
    return RandomVector((rvs.inverse_uniform(2.0, 4.0), rvs.uniform(1.0, 2.0)))


@dataclass
class ReferenceValues:
    m1: float
    m2: float
    m3: float
    dt_m1: float
    dt_m2: float
    dt_m3: float
    reliability: dict = field(default_factory=dict)

    @property
    def moments(self) -> tuple[float, float, float]:
        return self.m1, self.m2, self.m3

    @property
    def sensitivities(self) -> tuple[float, float, float]:
        return self.dt_m1, self.dt_m2, self.dt_m3

    def to_dict(self) -> dict:
        return asdict(self)


def reference_values_example1(nu: float = 0.2, thresholds=(7.0, 7.5)) -> ReferenceValues:
    q = 1.0 - nu
    pi = math.pi
    rel = {float(t): {"pf": disk_failure_probability(t, nu), "dt_pf": disk_dt_failure_probability(t, nu)}
           for t in thresholds}
    return ReferenceValues(
        7.0 * pi / 4.0 * q, 217.0 * pi**2 / 60.0 * q**2, 1905.0 * pi**3 / 224.0 * q**3,
        7.0 * pi / 2.0, 217.0 * pi**2 / 15.0 * q, 5715.0 * pi**3 / 112.0 * q**2, rel)


# -- trigonometric pressure ---------------------------------------------------


@dataclass(frozen=True)
class HarmonicPressure:
    D0: float
    D: tuple[float, ...] = ()
    Ek: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "D", tuple(float(d) for d in self.D))
        object.__setattr__(self, "Ek", tuple(float(e) for e in self.Ek))
        if len(self.D) != len(self.Ek):
            raise ValueError("D and E amplitude lists must have equal length")

    @property
    def K(self) -> int:
        return len(self.D)

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.full_like(theta, self.D0)
        for k, (d, e) in enumerate(zip(self.D, self.Ek), start=1):
            out = out + d * np.cos((k + 1) * theta) + e * np.sin((k + 1) * theta)
        return out


def _harmonic_weights(K: int, nu):
    k = np.arange(1, K + 1)
    return np.pi * (np.asarray(nu)[..., None] + 2 * k + 1) / (k * (k + 2))


def _trig_arrays(D0, D, Ek, E, nu):
    """y for broadcastable arrays; D and Ek carry the harmonic index on the last axis."""
    D, Ek = np.asarray(D, dtype=float), np.asarray(Ek, dtype=float)
    K = D.shape[-1]
    series = np.sum((D**2 + Ek**2) * _harmonic_weights(K, nu), axis=-1) if K else 0.0
    return (2.0 * np.pi * (1.0 - np.asarray(nu)) * np.asarray(D0) ** 2 + series) / np.asarray(E)


def trig_compliance(p: HarmonicPressure, E: float, nu: float) -> float:
    return float(_trig_arrays(p.D0, np.array(p.D), np.array(p.Ek), E, nu))


def _geometric(r2, k):
    # sum_{j<k} r2^j without cancellation at small r2
    return np.where(r2 == 0.0, 1.0, (1.0 - r2**k) / np.where(r2 == 1.0, 2.0, 1.0 - r2))


def _ring_arrays(D0, D, Ek, E, nu, rho):
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    D, Ek = np.asarray(D, dtype=float), np.asarray(Ek, dtype=float)
    E, nu = np.asarray(E, dtype=float), np.asarray(nu, dtype=float)
    r2 = rho * rho
    base = 2.0 * np.pi * np.asarray(D0) ** 2 * (r2 * (1.0 + nu) + (1.0 - nu)) / (E * (1.0 - r2))
    K = D.shape[-1]
    if K == 0:
        return base
    k = np.arange(1, K + 1, dtype=float)
    nu_ = nu[..., None]
    geo = _geometric(r2, k)
    r2k = r2**k
    A = (D**2 + Ek**2) * np.pi
    B = r2k * (k + 2) * (k * nu_ - (3 * k + 2) - (k * nu_ + k + 2) * r2) \
        + ((nu_ - 2 * k - 3) * r2 ** (k + 2) - (nu_ + 2 * k + 1)) * geo
    C = k * (k + 2) * E[..., None]
    F = k * (k + 2) * r2k * (1.0 - r2) + (r2 ** (k + 2) - 1.0) * geo
    return base + np.sum(A * B / (C * F), axis=-1)


def trig_ring_compliance(p: HarmonicPressure, E: float, nu: float, rho: float) -> float:
    return float(_ring_arrays(p.D0, np.array(p.D), np.array(p.Ek), E, nu, rho))


def trig_dt_center(p: HarmonicPressure, E: float) -> float:
    d1 = p.D[0] if p.K else 0.0
    e1 = p.Ek[0] if p.K else 0.0
    return 4.0 * math.pi * (p.D0**2 + 2.0 * d1**2 + 2.0 * e1**2) / E


def disk_trig_inputs(K: int = 25, cv: float = 0.1, E_mean: float = 1e6, E_cv: float = 0.1,
                     nu_mean: float = 0.2, nu_cv: float = 0.01) -> RandomVector:
    """Beta(4, 4) on mean +- 3 sigma for D0..DK (mean k+1), E1..EK (mean k+1), E and nu."""
    comps = [rvs.beta_from_mean_cv(k + 1.0, cv) for k in range(K + 1)]
    comps += [rvs.beta_from_mean_cv(k + 1.0, cv) for k in range(1, K + 1)]
    comps += [rvs.beta_from_mean_cv(E_mean, E_cv), rvs.beta_from_mean_cv(nu_mean, nu_cv)]
    return RandomVector(tuple(comps))


def _split_trig(X: np.ndarray, K: int):
    X = np.atleast_2d(X)
    if X.shape[1] != 2 * K + 3:
        raise ValueError(f"disk_trig with K={K} expects {2 * K + 3} inputs, got {X.shape[1]}")
    return X[:, 0], X[:, 1:K + 1], X[:, K + 1:2 * K + 1], X[:, 2 * K + 1], X[:, 2 * K + 2]


def _moments_of_sum(coefs: np.ndarray, power_moments: np.ndarray, order: int) -> np.ndarray:
    """M[p, q] = E[S^p T^q] for S = sum c_i Y_i, T = sum g_i Y_i with independent Y_i.

    ``coefs`` is (n, 2) holding (c_i, g_i); ``power_moments[i, r] = E[Y_i^r]``.
    """
    M = np.zeros((order + 1, order + 1))
    M[0, 0] = 1.0
    for (c, g), mom in zip(coefs, power_moments):
        new = np.zeros_like(M)
        for p in range(order + 1):
            for q in range(order + 1 - p):
                acc = 0.0
                for a in range(p + 1):
                    for b in range(q + 1):
                        acc += (math.comb(p, a) * math.comb(q, b) * M[a, b]
                                * c ** (p - a) * g ** (q - b) * mom[p - a + q - b])
                new[p, q] = acc
        M = new
    return M


def exact_moments_example2(rv: RandomVector | None = None, K: int = 25, order: int = 3,
                           E_nodes: int = 64) -> ReferenceValues:
    """Exact raw moments of the trigonometric-pressure compliance and their centre sensitivities.

    y = (A + B nu) / E and D_T y = Q / E, where A, B and Q are weighted sums of
    the independent squared amplitudes. Conditional on nu, the joint moments of
    (A + B nu, Q) follow from the raw moments of each amplitude; nu and 1/E are
    then integrated with Gauss rules that are exact (nu) or converged to
    machine precision (1/E).
    """
    rv = disk_trig_inputs(K) if rv is None else rv
    if rv.dim != 2 * K + 3:
        raise ValueError(f"expected {2 * K + 3} variables for K={K}, got {rv.dim}")
    amps = [rv[i] for i in range(2 * K + 1)]
    E_var, nu_var = rv[2 * K + 1], rv[2 * K + 2]
    pm = np.array([[v.raw_moment(2 * r) for r in range(order + 1)] for v in amps])

    k = np.arange(1, K + 1)
    # y E = sum_i (alpha_i + beta_i nu) X_i^2 over (D0, D1..DK, E1..EK)
    harm_a, harm_b = np.pi * (2 * k + 1) / (k * (k + 2)), np.pi / (k * (k + 2))
    alpha = np.concatenate([[2.0 * np.pi], harm_a, harm_a])
    beta = np.concatenate([[-2.0 * np.pi], harm_b, harm_b])
    gamma = np.zeros(2 * K + 1)
    gamma[0] = 4.0 * np.pi
    if K >= 1:
        gamma[1] = gamma[K + 1] = 8.0 * np.pi

    nu_rule = gauss_rule(nu_var, order + 1)
    joint = np.zeros((order + 1, order + 1))
    for x, w in zip(nu_rule.nodes, nu_rule.weights):
        joint += w * _moments_of_sum(np.stack([alpha + beta * x, gamma], axis=1), pm, order)
    e_rule = gauss_rule(E_var, E_nodes)
    inv_E = [e_rule.integrate(lambda e, r=r: e ** (-float(r))) for r in range(order + 1)]

    m = [inv_E[r] * joint[r, 0] for r in range(1, order + 1)]
    dt = [r * inv_E[r] * joint[r - 1, 1] for r in range(1, order + 1)]
    return ReferenceValues(*m[:3], *dt[:3])


# -- oracles ------------------------------------------------------------------


class DiskUniformOracle:
    """Rows are (E, p0); returns the compliance and its centre topology derivative."""

    name = "disk_uniform"
    n_dim = 2

    def __init__(self, nu: float = 0.2):
        self.nu = float(nu)

    def default_inputs(self) -> RandomVector:
        return disk_uniform_inputs()

    def _cols(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != 2:
            raise ValueError(f"disk_uniform expects 2 inputs (E, p0), got {X.shape[1]}")
        return X[:, 0], X[:, 1]

    def response(self, X):
        E, p0 = self._cols(X)
        return disk_compliance(E, p0, self.nu)

    def derivative(self, X):
        E, p0 = self._cols(X)
        return disk_dt_center(E, p0)

    def ring(self, X, rho: float):
        E, p0 = self._cols(X)
        return disk_ring_compliance(E, p0, self.nu, rho)

    def evaluate(self, X):
        return self.response(X), self.derivative(X)

    __call__ = evaluate

    def reference(self) -> ReferenceValues:
        return reference_values_example1(self.nu)


class DiskTrigOracle:
    """Rows are (D0..DK, E1..EK, E, nu)."""

    name = "disk_trig"

    def __init__(self, K: int = 25):
        if K < 0:
            raise ValueError("K must be nonnegative")
        self.K = int(K)

    @property
    def n_dim(self) -> int:
        return 2 * self.K + 3

    def default_inputs(self) -> RandomVector:
        return disk_trig_inputs(self.K)

    def response(self, X):
        D0, D, Ek, E, nu = _split_trig(X, self.K)
        return _trig_arrays(D0, D, Ek, E, nu)

    def derivative(self, X):
        D0, D, Ek, E, _ = _split_trig(X, self.K)
        d1 = D[:, 0] if self.K else 0.0
        e1 = Ek[:, 0] if self.K else 0.0
        return 4.0 * np.pi * (D0**2 + 2.0 * d1**2 + 2.0 * e1**2) / E

    def ring(self, X, rho: float):
        D0, D, Ek, E, nu = _split_trig(X, self.K)
        return _ring_arrays(D0, D, Ek, E, nu, rho)

    def evaluate(self, X):
        return self.response(X), self.derivative(X)

    __call__ = evaluate

    def reference(self, rv: RandomVector | None = None) -> ReferenceValues:
        return exact_moments_example2(rv, self.K)


ORACLES = {"disk_uniform": DiskUniformOracle, "disk_trig": DiskTrigOracle}


def make_oracle(name: str, **params):
    try:
        cls = ORACLES[name]
    except KeyError:
        raise KeyError(f"unknown oracle {name!r}; available: {sorted(ORACLES)}") from None
    return cls(**params)
