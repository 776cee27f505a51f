"""Truncated polynomial dimensional decomposition (PDD) surrogates.

A surrogate of order (S, m) is

    y(x) ~ y0 + sum_{u, |u| <= S} sum_{j in {1..m}^|u|} C_uj prod_p psi_{j_p}(x_{u_p})

Coefficients of each subset size are stored as one dense block so that
moments and evaluation can work on whole arrays. Variable indices are
0-based throughout.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple, Sequence

import numpy as np

from .orthopoly import OrthonormalBasis, build_basis, gauss_rule
from .randvars import RandomVector

log = logging.getLogger(__name__)

#: rows of x processed at once when evaluating a surrogate
EVAL_CHUNK = 16384

_LETTERS = "abcdefghijklmopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


class Term(NamedTuple):
    u: tuple[int, ...]
    j: tuple[int, ...]


class OracleError(ValueError):
    pass


def n_terms(N: int, S: int, m: int) -> int:
    return sum(math.comb(N, s) * m**s for s in range(1, S + 1))


def subsets_of_size(N: int, s: int) -> np.ndarray:
    if s == 0:
        return np.zeros((1, 0), dtype=int)
    return np.array(list(itertools.combinations(range(N), s)), dtype=int).reshape(-1, s)


def index_set(N: int, S: int, m: int) -> list[Term]:
    """All (u, j) pairs ordered by |u|, then u, then j (lexicographic)."""
    if not 1 <= S <= N or m < 1:
        raise ValueError(f"need 1 <= S <= N and m >= 1, got N={N}, S={S}, m={m}")
    out = []
    for s in range(1, S + 1):
        for u in itertools.combinations(range(N), s):
            for j in itertools.product(range(1, m + 1), repeat=s):
                out.append(Term(u, j))
    return out


@dataclass(frozen=True)
class RddScheme:
    """Dimension-reduction integration: R-variate cuts through ``reference`` with n_q Gauss points."""

    R: int
    reference: np.ndarray
    n_q: int

    def __post_init__(self):
        object.__setattr__(self, "reference", np.asarray(self.reference, dtype=float))


def default_scheme(rv: RandomVector, S: int, m: int, R: int | None = None, n_q: int | None = None,
                   reference=None) -> RddScheme:
    return RddScheme(S if R is None else R, rv.mean if reference is None else reference,
                     m + 2 if n_q is None else n_q)


@dataclass
class BuildInfo:
    n_evaluations: int
    points: np.ndarray = field(repr=False)


class PddSurrogate:
    """Truncated S-variate, m-th order PDD of a response."""

    def __init__(self, rv: RandomVector, S: int, m: int, constant: float,
                 blocks: dict[int, np.ndarray], scheme: RddScheme | None = None):
        self.rv = rv
        self.N = rv.dim
        self.S = int(S)
        self.m = int(m)
        self.constant = float(constant)
        self.scheme = scheme
        self.bases = [build_basis(v, self.m) for v in rv]
        self.blocks = {}
        for s in range(1, self.S + 1):
            shape = (math.comb(self.N, s),) + (self.m,) * s
            b = np.asarray(blocks.get(s, np.zeros(shape)), dtype=float)
            if b.shape != shape:
                raise ValueError(f"block {s} has shape {b.shape}, expected {shape}")
            self.blocks[s] = b
        self._subsets = {s: subsets_of_size(self.N, s) for s in range(1, self.S + 1)}
        self._row = None
        self._quad = None

    def __repr__(self):
        return f"PddSurrogate(N={self.N}, S={self.S}, m={self.m}, constant={self.constant:.6g})"

    # -- structure ---------------------------------------------------------

    def subsets(self, s: int) -> np.ndarray:
        return self._subsets[s]

    def row(self, u: Sequence[int]) -> int:
        if self._row is None:
            self._row = {tuple(int(i) for i in sub): r
                         for s, subs in self._subsets.items() for r, sub in enumerate(subs)}
        return self._row[tuple(u)]

    @property
    def n_terms(self) -> int:
        return n_terms(self.N, self.S, self.m)

    def terms(self) -> Iterator[tuple[Term, float]]:
        for s in range(1, self.S + 1):
            block = self.blocks[s]
            for r, u in enumerate(self._subsets[s]):
                for j in np.ndindex(*(self.m,) * s):
                    yield Term(tuple(int(i) for i in u), tuple(k + 1 for k in j)), float(block[(r,) + j])

    def coefficient(self, u: Sequence[int], j: Sequence[int]) -> float:
        u = tuple(u)
        return float(self.blocks[len(u)][(self.row(u),) + tuple(k - 1 for k in j)])

    def compatible(self, other: "PddSurrogate") -> bool:
        return (self.S, self.m) == (other.S, other.m) and self.rv == other.rv

    def coefficient_vector(self) -> np.ndarray:
        """All C_uj in canonical term order."""
        return np.concatenate([self.blocks[s].ravel() for s in range(1, self.S + 1)])

    def scaled(self, factor: float) -> "PddSurrogate":
        return PddSurrogate(self.rv, self.S, self.m, factor * self.constant,
                            {s: factor * b for s, b in self.blocks.items()}, self.scheme)

    # -- evaluation --------------------------------------------------------

    def __call__(self, x):
        return eval_surrogate(self, x)

    def _quadratic_form(self) -> np.ndarray:
        if self._quad is None:
            N, m = self.N, self.m
            M = np.zeros((N * m, N * m))
            if self.S >= 2:
                for r, (a, b) in enumerate(self._subsets[2]):
                    M[a * m:(a + 1) * m, b * m:(b + 1) * m] = self.blocks[2][r]
            self._quad = M
        return self._quad

    def features(self, x: np.ndarray) -> np.ndarray:
        """psi_1..psi_m of every variable, shape (L, N, m)."""
        return np.stack([b.eval(x[:, i])[:, 1:] for i, b in enumerate(self.bases)], axis=1)

    # -- serialisation -----------------------------------------------------

    def to_dict(self) -> dict:
        sch = self.scheme
        return {
            "N": self.N, "S": self.S, "m": self.m,
            "R": None if sch is None else sch.R,
            "n_q": None if sch is None else sch.n_q,
            "c": None if sch is None else sch.reference.tolist(),
            "bases": self.rv.to_list(),
            "constant": self.constant,
            "terms": [{"u": list(t.u), "j": list(t.j), "coeff": c} for t, c in self.terms()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PddSurrogate":
        rv = RandomVector.from_list(d["bases"])
        S, m = d["S"], d["m"]
        scheme = None if d.get("R") is None else RddScheme(d["R"], np.array(d["c"]), d["n_q"])
        s = cls(rv, S, m, d["constant"], {}, scheme)
        for t in d["terms"]:
            u = tuple(t["u"])
            s.blocks[len(u)][(s.row(u),) + tuple(k - 1 for k in t["j"])] = t["coeff"]
        return s


def eval_surrogate(s: PddSurrogate, x):
    """Evaluate the surrogate at one point (shape (N,)) or many (shape (L, N))."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    out = np.empty(x.shape[0])
    for start in range(0, x.shape[0], EVAL_CHUNK):
        xs = x[start:start + EVAL_CHUNK]
        out[start:start + EVAL_CHUNK] = _eval_chunk(s, xs)
    return out[0] if single else out


def evaluate_many(surrogates: Sequence[PddSurrogate], x) -> list[np.ndarray]:
    """Evaluate several surrogates on the same rows, sharing basis evaluations where bases agree."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    outs = [np.empty(x.shape[0]) for _ in surrogates]
    for start in range(0, x.shape[0], EVAL_CHUNK):
        xs = x[start:start + EVAL_CHUNK]
        cache: dict = {}
        for s, out in zip(surrogates, outs):
            key = (s.rv, s.m)
            if key not in cache:
                cache[key] = s.features(xs)
            out[start:start + EVAL_CHUNK] = _eval_chunk(s, xs, cache[key])
    return outs


def _eval_chunk(s: PddSurrogate, x: np.ndarray, psi: np.ndarray | None = None) -> np.ndarray:
    L = x.shape[0]
    psi = s.features(x) if psi is None else psi
    flat = psi.reshape(L, s.N * s.m)
    out = np.full(L, s.constant)
    out += flat @ s.blocks[1].ravel()
    if s.S >= 2:
        out += np.einsum("li,li->l", flat @ s._quadratic_form(), flat)
    for size in range(3, s.S + 1):
        subs = s.subsets(size)
        letters = _LETTERS[:size]
        ops = [s.blocks[size]] + [psi[:, subs[:, p], :] for p in range(size)]
        spec = "U" + letters + "," + ",".join("lU" + c for c in letters) + "->l"
        out += np.einsum(spec, *ops, optimize=True)
    return out


# -- coefficient estimation --------------------------------------------------


def _rdd_weight(N: int, R: int, i: int) -> int:
    if i == 0:
        return 1
    return (-1) ** i * math.comb(N - R + i - 1, i)


def _cut_points(subs: np.ndarray, nodes: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Tensor grids on the variables of each subset, other coordinates pinned at ``reference``."""
    n_v, s = subs.shape
    n_q = nodes.shape[1]
    X = np.broadcast_to(reference, (n_v,) + (n_q,) * s + (len(reference),)).copy()
    for p in range(s):
        shape = [n_v] + [1] * s
        shape[p + 1] = n_q
        vals = nodes[subs[:, p]].reshape(shape)
        idx = np.broadcast_to(subs[:, p].reshape([n_v] + [1] * s), (n_v,) + (n_q,) * s)
        np.put_along_axis(X, idx[..., None], np.broadcast_to(vals, idx.shape)[..., None], axis=-1)
    return X.reshape(-1, len(reference))


def _as_outputs(values, n_out: int) -> list[np.ndarray]:
    if n_out == 1 and not isinstance(values, (tuple, list)):
        return [np.asarray(values, dtype=float)]
    return [np.asarray(v, dtype=float) for v in values]


def _evaluate(oracles, X: np.ndarray, n_out: int) -> list[np.ndarray]:
    if callable(oracles):
        outs = _as_outputs(oracles(X), n_out)
    else:
        outs = [np.asarray(f(X), dtype=float) for f in oracles]
    for k, o in enumerate(outs):
        if o.shape != (X.shape[0],):
            raise OracleError(f"oracle output {k} has shape {o.shape}, expected ({X.shape[0]},)")
        bad = np.flatnonzero(~np.isfinite(o))
        if bad.size:
            raise OracleError(f"oracle output {k} is not finite at node {X[bad[0]].tolist()}")
    return outs


def build(oracles, rv: RandomVector, S: int, m: int, scheme: RddScheme | None = None,
          n_out: int | None = None) -> tuple[list[PddSurrogate], BuildInfo]:
    """Estimate one surrogate per oracle output from a single shared set of evaluations.

    ``oracles`` is either a sequence of vectorised callables ``f(X) -> (L,)`` or one
    callable returning a tuple of such arrays (``n_out`` of them).
    """
    N = rv.dim
    scheme = scheme or default_scheme(rv, S, m)
    R, n_q, c = scheme.R, scheme.n_q, scheme.reference
    if not 1 <= S <= N or m < 1:
        raise ValueError(f"need 1 <= S <= N and m >= 1, got S={S}, N={N}, m={m}")
    if not S <= R <= N:
        raise ValueError(f"need S <= R <= N, got S={S}, R={R}, N={N}")
    if c.shape != (N,) or np.any(c < rv.lower) or np.any(c > rv.upper):
        raise ValueError("reference point must lie inside the support box")
    if n_out is None:
        n_out = 1 if callable(oracles) else len(oracles)

    bases = [build_basis(v, m) for v in rv]
    rules = [gauss_rule(v, n_q) for v in rv]
    nodes = np.array([r.nodes for r in rules])
    # a node that equals the reference up to rounding is the reference; snapping lets cuts share it
    width = (rv.upper - rv.lower)[:, None]
    near = np.abs(nodes - c[:, None]) <= 64 * np.finfo(float).eps * width
    nodes = np.where(near, c[:, None], nodes)
    pw = np.array([r.weights[:, None] * b.eval(r.nodes) for r, b in zip(rules, bases)])  # (N, n_q, m+1)

    groups = []
    for i in range(R + 1):
        w = _rdd_weight(N, R, i)
        if w == 0:
            continue
        subs = subsets_of_size(N, R - i)
        groups.append((w, subs, _cut_points(subs, nodes, c)))

    allX = np.concatenate([g[2] for g in groups])
    uniq, inverse = np.unique(allX, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    log.debug("PDD build N=%d S=%d m=%d R=%d n_q=%d: %d oracle evaluations", N, S, m, R, n_q, len(uniq))
    values = _evaluate(oracles, uniq, n_out)

    constants = [0.0] * n_out
    blocks = [{s: np.zeros((math.comb(N, s),) + (m,) * s) for s in range(1, S + 1)} for _ in range(n_out)]
    rows = {s: {tuple(u): r for r, u in enumerate(subsets_of_size(N, s))} for s in range(1, S + 1)}

    offset = 0
    for w, subs, X in groups:
        n_v, s = subs.shape
        n_pts = X.shape[0]
        idx = inverse[offset:offset + n_pts]
        offset += n_pts
        letters = _LETTERS[:s]
        for k in range(n_out):
            Y = values[k][idx].reshape((n_v,) + (n_q,) * s)
            for size in range(0, min(s, S) + 1):
                for P in itertools.combinations(range(s), size):
                    ops, specs, out_spec = [Y], ["V" + letters], "V"
                    for p in range(s):
                        g = pw[subs[:, p]]
                        if p in P:
                            deg = letters[p].upper()
                            ops.append(g[:, :, 1:])
                            specs.append("V" + letters[p] + deg)
                            out_spec += deg
                        else:
                            ops.append(g[:, :, 0])
                            specs.append("V" + letters[p])
                    contrib = np.einsum(",".join(specs) + "->" + out_spec, *ops, optimize=True)
                    if size == 0:
                        constants[k] += w * float(np.sum(contrib))
                        continue
                    target = np.array([rows[size][tuple(u)] for u in subs[:, list(P)]], dtype=int)
                    np.add.at(blocks[k][size], target, w * contrib)

    surrogates = [PddSurrogate(rv, S, m, constants[k], blocks[k], scheme) for k in range(n_out)]
    return surrogates, BuildInfo(len(uniq), uniq)


def estimate_coefficients(oracle: Callable, rv: RandomVector, S: int, m: int,
                          scheme: RddScheme | None = None) -> PddSurrogate:
    (s,), _ = build([oracle], rv, S, m, scheme)
    return s


def paired_build(oracles, rv: RandomVector, S: int, m: int, scheme: RddScheme | None = None
                 ) -> tuple[PddSurrogate, PddSurrogate, BuildInfo]:
    """Surrogates of a response and its topology derivative from one evaluation set.

    ``oracles`` is ``(y, z)`` or a single callable returning ``(y_values, z_values)``.
    """
    (y, z), info = build(oracles, rv, S, m, scheme, n_out=2)
    return y, z, info


def vectorize(f: Callable[[np.ndarray], float]) -> Callable[[np.ndarray], np.ndarray]:
    """Wrap a pointwise function ``f(x) -> float`` as a row-wise oracle."""
    def wrapped(X):
        return np.array([f(x) for x in np.atleast_2d(X)], dtype=float)
    return wrapped
