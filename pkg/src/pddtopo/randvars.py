"""Independent bounded input distributions and reproducible sampling."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import special, stats

#: samples drawn per random substream; fixed so results never depend on worker count
BLOCK_SIZE = 1 << 16


class Kind(str, enum.Enum):
    UNIFORM = "uniform"
    INVERSE_UNIFORM = "inverse_uniform"
    FOUR_PARAM_BETA = "four_param_beta"
    TRUNCATED_GAUSSIAN = "truncated_gaussian"


@dataclass(frozen=True)
class RandomVariable:
    """One bounded input distribution.

    ``params`` depends on ``kind``:

    * uniform, inverse_uniform: ``()`` -- the support is everything
    * four_param_beta: ``(alpha, beta)`` shape parameters on ``[lo, hi]``
    * truncated_gaussian: ``(mu, sigma)`` of the parent Gaussian

    Use the module-level constructors rather than building one by hand.
    """

    kind: Kind
    lo: float
    hi: float
    params: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo < self.hi):
            raise ValueError(f"invalid support [{self.lo}, {self.hi}]")
        if self.kind is Kind.INVERSE_UNIFORM and self.lo <= 0:
            raise ValueError("inverse_uniform needs a positive support")
        if self.kind is Kind.FOUR_PARAM_BETA:
            if len(self.params) != 2 or min(self.params) <= 0:
                raise ValueError(f"beta shapes must be positive, got {self.params}")
        if self.kind is Kind.TRUNCATED_GAUSSIAN:
            if len(self.params) != 2 or self.params[1] <= 0:
                raise ValueError(f"gaussian sigma must be positive, got {self.params}")

    @property
    def support(self) -> tuple[float, float]:
        return self.lo, self.hi

    @cached_property
    def _frozen(self):
        # scipy backend for the kinds without elementary closed forms
        if self.kind is Kind.FOUR_PARAM_BETA:
            a, b = self.params
            return stats.beta(a, b, loc=self.lo, scale=self.hi - self.lo)
        if self.kind is Kind.TRUNCATED_GAUSSIAN:
            mu, sigma = self.params
            return stats.truncnorm((self.lo - mu) / sigma, (self.hi - mu) / sigma, loc=mu, scale=sigma)
        return None

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        if self.kind is Kind.UNIFORM:
            out = np.full(x.shape, 1.0 / (self.hi - self.lo))
        elif self.kind is Kind.INVERSE_UNIFORM:
            c = self.lo * self.hi / (self.hi - self.lo)
            with np.errstate(divide="ignore"):
                out = c / np.square(x)
        else:
            out = self._frozen.pdf(x)
        out = np.where(inside, out, 0.0)
        return out[()] if out.ndim == 0 else out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, self.lo, self.hi)
        if self.kind is Kind.UNIFORM:
            out = (xc - self.lo) / (self.hi - self.lo)
        elif self.kind is Kind.INVERSE_UNIFORM:
            c = self.lo * self.hi / (self.hi - self.lo)
            out = c * (1.0 / self.lo - 1.0 / xc)
        else:
            out = self._frozen.cdf(xc)
        out = np.clip(out, 0.0, 1.0)
        return out[()] if out.ndim == 0 else out

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        if self.kind is Kind.UNIFORM:
            out = self.lo + q * (self.hi - self.lo)
        elif self.kind is Kind.INVERSE_UNIFORM:
            c = self.lo * self.hi / (self.hi - self.lo)
            out = 1.0 / (1.0 / self.lo - q / c)
        else:
            out = self._frozen.ppf(q)
        out = np.clip(out, self.lo, self.hi)
        return out[()] if out.ndim == 0 else out

    def raw_moment(self, r: int) -> float:
        return raw_moment(self, r)

    @property
    def mean(self) -> float:
        return raw_moment(self, 1)

    @property
    def std(self) -> float:
        m1 = raw_moment(self, 1)
        return math.sqrt(max(raw_moment(self, 2) - m1 * m1, 0.0))

    def sample(self, rng: np.random.Generator, size=None):
        return sample(self, rng, size)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "lo": self.lo, "hi": self.hi, "params": list(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "RandomVariable":
        return cls(Kind(d["kind"]), d["lo"], d["hi"], tuple(d.get("params", ())))


# -- constructors ------------------------------------------------------------


def uniform(lo: float, hi: float) -> RandomVariable:
    return RandomVariable(Kind.UNIFORM, lo, hi)


def inverse_uniform(lo: float, hi: float) -> RandomVariable:
    """Density proportional to x**-2 on [lo, hi], i.e. 1/X is uniform."""
    return RandomVariable(Kind.INVERSE_UNIFORM, lo, hi)


def four_param_beta(alpha: float, beta: float, lo: float, hi: float) -> RandomVariable:
    return RandomVariable(Kind.FOUR_PARAM_BETA, lo, hi, (alpha, beta))


def beta_from_mean_cv(mu: float, cv: float, width_in_sigmas: float = 3.0) -> RandomVariable:
    """Symmetric four-parameter Beta with mean ``mu``, std ``cv*|mu|`` on ``mu -/+ k*sigma``.

    For a symmetric Beta(a, a) on an interval of width w the variance is
    w**2 / (4 (2a + 1)); matching sigma**2 gives 2a + 1 = k**2, so k=3 yields Beta(4, 4).
    """
    if cv <= 0:
        raise ValueError(f"coefficient of variation must be positive, got {cv}")
    sigma = abs(mu) * cv
    k = float(width_in_sigmas)
    a = (k * k - 1.0) / 2.0
    if a <= 0:
        raise ValueError("support must span more than one standard deviation")
    return four_param_beta(a, a, mu - k * sigma, mu + k * sigma)


def truncated_gaussian(mu: float, sigma: float, half_width: float) -> RandomVariable:
    """Gaussian(mu, sigma) truncated to [mu - half_width, mu + half_width]."""
    if sigma <= 0 or half_width <= 0:
        raise ValueError("sigma and half_width must be positive")
    return RandomVariable(Kind.TRUNCATED_GAUSSIAN, mu - half_width, mu + half_width, (mu, sigma))


def truncated_gaussian_from_cv(mu: float, cv: float, n_sigmas: float) -> RandomVariable:
    sigma = abs(mu) * cv
    return truncated_gaussian(mu, sigma, n_sigmas * sigma)


def from_spec(kind: str, **params) -> RandomVariable:
    """Build a variable from a config entry ``{kind, params}``."""
    kind = Kind(kind)
    if kind is Kind.UNIFORM:
        return uniform(params["lo"], params["hi"])
    if kind is Kind.INVERSE_UNIFORM:
        return inverse_uniform(params["lo"], params["hi"])
    if kind is Kind.FOUR_PARAM_BETA:
        if "cv" in params:
            return beta_from_mean_cv(params["mean"], params["cv"], params.get("width_in_sigmas", 3.0))
        return four_param_beta(params["alpha"], params["beta"], params["lo"], params["hi"])
    if "cv" in params:
        return truncated_gaussian_from_cv(params["mean"], params["cv"], params["n_sigmas"])
    return truncated_gaussian(params["mu"], params["sigma"], params["half_width"])


# -- moments -----------------------------------------------------------------


def raw_moment(v: RandomVariable, r: int) -> float:
    """E[X**r] in closed form (a recursion for the truncated Gaussian)."""
    if r < 0:
        raise ValueError("moment order must be nonnegative")
    return _raw_moment(v, int(r))


_MOMENT_CACHE: dict[tuple[RandomVariable, int], float] = {}


def _raw_moment(v: RandomVariable, r: int) -> float:
    key = (v, r)
    if key in _MOMENT_CACHE:
        return _MOMENT_CACHE[key]
    lo, hi = v.lo, v.hi
    if r == 0:
        val = 1.0
    elif v.kind is Kind.UNIFORM:
        val = (hi ** (r + 1) - lo ** (r + 1)) / ((r + 1) * (hi - lo))
    elif v.kind is Kind.INVERSE_UNIFORM:
        c = lo * hi / (hi - lo)
        val = c * math.log(hi / lo) if r == 1 else c * (hi ** (r - 1) - lo ** (r - 1)) / (r - 1)
    elif v.kind is Kind.FOUR_PARAM_BETA:
        # X = lo + w B with E[B^k] = prod_{i<k} (a+i)/(a+b+i)
        a, b = v.params
        w = hi - lo
        val = 0.0
        for k in range(r + 1):
            eb = math.prod((a + i) / (a + b + i) for i in range(k))
            val += special.comb(r, k, exact=True) * lo ** (r - k) * w**k * eb
    else:
        val = _quad_moment(v, r)
    _MOMENT_CACHE[key] = val
    return val


def _quad_moment(v: RandomVariable, r: int) -> float:
    # central moments by parts: y f(y) = -sigma^2 f'(y) for the Gaussian kernel
    mu, sigma = v.params
    a, b = v.lo - mu, v.hi - mu
    fa, fb = float(v.pdf(v.lo)), float(v.pdf(v.hi))
    central = [1.0, -sigma**2 * (fb - fa)]
    for k in range(2, r + 1):
        central.append((k - 1) * sigma**2 * central[k - 2] - sigma**2 * (b ** (k - 1) * fb - a ** (k - 1) * fa))
    return sum(special.comb(r, k, exact=True) * mu ** (r - k) * central[k] for k in range(r + 1))


# -- sampling ----------------------------------------------------------------


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for block ``index`` of a run seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def sample(v: RandomVariable, rng: np.random.Generator, size=None):
    """Draw from ``v``; inverse-CDF for uniform kinds, rejection for truncated Gaussian."""
    if v.kind in (Kind.UNIFORM, Kind.INVERSE_UNIFORM):
        return v.ppf(rng.random(size))
    if v.kind is Kind.FOUR_PARAM_BETA:
        a, b = v.params
        return v.lo + (v.hi - v.lo) * rng.beta(a, b, size)
    mu, sigma = v.params
    n = 1 if size is None else int(np.prod(size))
    out = np.empty(0)
    while out.size < n:
        draw = rng.normal(mu, sigma, max(n - out.size, 16) + 16)
        out = np.concatenate([out, draw[(draw >= v.lo) & (draw <= v.hi)]])
    out = out[:n]
    return out[0] if size is None else out.reshape(size)


@dataclass(frozen=True)
class RandomVector:
    """Ordered tuple of mutually independent random variables."""

    components: tuple[RandomVariable, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise ValueError("a random vector needs at least one component")

    @property
    def dim(self) -> int:
        return len(self.components)

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    @property
    def mean(self) -> np.ndarray:
        return np.array([v.mean for v in self.components])

    @property
    def lower(self) -> np.ndarray:
        return np.array([v.lo for v in self.components])

    @property
    def upper(self) -> np.ndarray:
        return np.array([v.hi for v in self.components])

    def pdf(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        out = np.ones(x.shape[0])
        for i, v in enumerate(self.components):
            out *= v.pdf(x[:, i])
        return out

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        x = np.empty((n, self.dim))
        for i, v in enumerate(self.components):
            x[:, i] = sample(v, rng, n)
        return x

    def sample_block(self, seed: int, block: int, n: int = BLOCK_SIZE) -> np.ndarray:
        return self.sample(substream(seed, block), n)

    def to_list(self) -> list[dict]:
        return [v.to_dict() for v in self.components]

    @classmethod
    def from_list(cls, items: Sequence[dict]) -> "RandomVector":
        return cls(tuple(RandomVariable.from_dict(d) for d in items))
