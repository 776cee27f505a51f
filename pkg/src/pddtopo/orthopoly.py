"""Orthonormal polynomials, Gauss rules and triple products for one input measure.

Recurrences are stored in monic form,

    pi_{k+1}(x) = (x - alpha_k) pi_k(x) - beta_k pi_{k-1}(x),

with ``beta_0`` the total mass (1 for a probability measure). The orthonormal
polynomials follow as

    sqrt(beta_{k+1}) psi_{k+1} = (x - alpha_k) psi_k - sqrt(beta_k) psi_{k-1}.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import linalg

from .randvars import Kind, RandomVariable

#: panels x points of the composite Gauss-Legendre rule that discretises a measure
STIELTJES_PANELS = 10
STIELTJES_POINTS = 20


class RecurrenceBreakdown(ArithmeticError):
    pass


@dataclass(frozen=True)
class RecurrenceTable:
    alphas: np.ndarray
    betas: np.ndarray

    @property
    def order(self) -> int:
        return len(self.alphas) - 1


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.nodes)

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


def jacobi_recurrence(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Monic recurrence for the weight (1-t)**a (1+t)**b on [-1, 1], normalised to mass 1."""
    k = np.arange(n + 1, dtype=float)
    alphas = np.empty(n + 1)
    betas = np.empty(n + 1)
    s = a + b
    alphas[0] = (b - a) / (s + 2.0)
    kk = k[1:]
    t = 2.0 * kk + s
    with np.errstate(invalid="ignore", divide="ignore"):
        alphas[1:] = (b * b - a * a) / (t * (t + 2.0))
        betas[1:] = 4.0 * kk * (kk + a) * (kk + b) * (kk + s) / (t * t * (t + 1.0) * (t - 1.0))
    betas[0] = 1.0
    if n >= 1:
        # k=1 written out; the generic form is 0/0 when a+b = -1
        betas[1] = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + s) ** 2 * (3.0 + s))
    return alphas, betas


def _map_from_unit(alphas, betas, lo, hi):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    alphas = mid + half * alphas
    betas = betas.copy()
    betas[1:] *= half * half
    return alphas, betas


def discretize(v: RandomVariable) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights approximating the measure of ``v``."""
    t, w = np.polynomial.legendre.leggauss(STIELTJES_POINTS)
    edges = np.linspace(v.lo, v.hi, STIELTJES_PANELS + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    wx = (half[:, None] * w[None, :]).ravel() * v.pdf(x)
    return x, wx / wx.sum()


def stieltjes(x: np.ndarray, w: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Discretised Stieltjes procedure on the discrete measure (x, w)."""
    alphas = np.empty(n + 1)
    betas = np.empty(n + 1)
    betas[0] = w.sum()
    # shift to the centre so alphas are computed on O(1) values
    shift = np.dot(w, x) / betas[0]
    scale = np.sqrt(np.dot(w, (x - shift) ** 2) / betas[0])
    t = (x - shift) / scale
    p_prev = np.zeros_like(t)
    p = np.ones_like(t)
    norm = betas[0]
    for k in range(n + 1):
        alphas[k] = np.dot(w, t * p * p) / norm
        if k == n:
            break
        p_next = (t - alphas[k]) * p - (betas[k] if k > 0 else 0.0) * p_prev
        new_norm = np.dot(w, p_next * p_next)
        betas[k + 1] = new_norm / norm
        if not betas[k + 1] > 0:
            raise RecurrenceBreakdown(f"Stieltjes procedure broke down at order {k + 1}")
        p_prev, p, norm = p, p_next, new_norm
    alphas = shift + scale * alphas
    betas[1:] *= scale * scale
    return alphas, betas


@lru_cache(maxsize=None)
def _recurrence(v: RandomVariable, n: int) -> RecurrenceTable:
    if v.kind is Kind.UNIFORM:
        al, be = _map_from_unit(*jacobi_recurrence(n, 0.0, 0.0), v.lo, v.hi)
    elif v.kind is Kind.FOUR_PARAM_BETA:
        # Beta(a, b) on [0, 1] <-> Jacobi weight (1-t)^(b-1) (1+t)^(a-1)
        a, b = v.params
        al, be = _map_from_unit(*jacobi_recurrence(n, b - 1.0, a - 1.0), v.lo, v.hi)
    else:
        al, be = stieltjes(*discretize(v), n)
    al.setflags(write=False)
    be.setflags(write=False)
    return RecurrenceTable(al, be)


def recurrence(v: RandomVariable, n: int) -> RecurrenceTable:
    """Recurrence coefficients alpha_0..alpha_n, beta_0..beta_n for the measure of ``v``."""
    # always compute a little beyond what is asked so the cache is reused
    order = max(int(n), 16)
    table = _recurrence(v, order)
    return RecurrenceTable(table.alphas[: n + 1], table.betas[: n + 1])


class OrthonormalBasis:
    """Polynomials psi_0..psi_m orthonormal under the distribution of ``variable``."""

    def __init__(self, variable: RandomVariable, m: int):
        if m < 1:
            raise ValueError("basis order must be at least 1")
        self.variable = variable
        self.m = int(m)
        self.table = recurrence(variable, self.m)
        self._sqrt_beta = np.sqrt(self.table.betas)
        self._triples = None

    def __repr__(self):
        return f"OrthonormalBasis({self.variable.kind.value}, m={self.m})"

    def __eq__(self, other):
        return isinstance(other, OrthonormalBasis) and self.variable == other.variable and self.m == other.m

    def __hash__(self):
        return hash((self.variable, self.m))

    @property
    def normalizers(self) -> np.ndarray:
        """Norms of the monic polynomials, sqrt(beta_0 ... beta_k)."""
        return np.sqrt(np.cumprod(self.table.betas))

    def eval(self, x, degree: int | None = None) -> np.ndarray:
        """Values ``psi_0(x) .. psi_degree(x)`` stacked on a trailing axis."""
        degree = self.m if degree is None else degree
        al = self.table.alphas if degree <= self.m else recurrence(self.variable, degree).alphas
        sb = self._sqrt_beta if degree <= self.m else np.sqrt(recurrence(self.variable, degree).betas)
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape + (degree + 1,))
        out[..., 0] = 1.0 / sb[0]
        if degree >= 1:
            out[..., 1] = (x - al[0]) * out[..., 0] / sb[1]
        for k in range(1, degree):
            out[..., k + 1] = ((x - al[k]) * out[..., k] - sb[k] * out[..., k - 1]) / sb[k + 1]
        return out

    def __call__(self, j: int, x):
        return self.eval(x, max(j, self.m))[..., j]

    def rule(self, n: int) -> QuadratureRule:
        return gauss_rule(self, n)

    @property
    def triple_table(self) -> np.ndarray:
        """E[psi_a psi_b psi_c] for 0 <= a, b, c <= m."""
        if self._triples is None:
            rule = gauss_rule(self, (3 * self.m) // 2 + 1)
            p = self.eval(rule.nodes)
            t = np.einsum("q,qa,qb,qc->abc", rule.weights, p, p, p)
            # symmetrise so every permutation returns identical bits
            idx = np.arange(self.m + 1)
            a, b, c = np.meshgrid(idx, idx, idx, indexing="ij")
            s = np.sort(np.stack([a, b, c]), axis=0)
            t = t[s[0], s[1], s[2]]
            t[s[2] > s[0] + s[1]] = 0.0
            t.setflags(write=False)
            self._triples = t
        return self._triples


def build_basis(v: RandomVariable, m: int) -> OrthonormalBasis:
    return OrthonormalBasis(v, m)


@lru_cache(maxsize=None)
def _gauss(v: RandomVariable, n: int) -> QuadratureRule:
    table = recurrence(v, n)
    d = np.asarray(table.alphas[:n])
    e = np.sqrt(table.betas[1:n])
    try:
        nodes, vecs = linalg.eigh_tridiagonal(d, e)
    except linalg.LinAlgError as exc:
        raise ArithmeticError(f"Jacobi matrix eigensolve failed for order {n}") from exc
    weights = table.betas[0] * vecs[0, :] ** 2
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes, weights)


def gauss_rule(b: OrthonormalBasis | RandomVariable, n: int) -> QuadratureRule:
    """n-point Gauss rule (Golub-Welsch) for the basis measure, exact to degree 2n-1."""
    if n < 1:
        raise ValueError("need at least one quadrature node")
    v = b.variable if isinstance(b, OrthonormalBasis) else b
    return _gauss(v, int(n))


def triple_product(b: OrthonormalBasis, j1: int, j2: int, j3: int) -> float:
    """E[psi_j1 psi_j2 psi_j3]; symmetric in its indices."""
    j = sorted((j1, j2, j3))
    if j[2] > b.m:
        raise ValueError(f"degree {j[2]} exceeds basis order {b.m}")
    return float(b.triple_table[j[0], j[1], j[2]])
