"""Closed-form moments of PDD surrogates and their topology sensitivities.

With y = y0 + Y and z = z0 + Z split into constant and zero-mean parts,

    E[y]    = y0                     D_T E[y]   = z0
    E[y^2]  = y0^2 + sum C^2         D_T E[y^2] = 2 (y0 z0 + sum C D)
    E[y^3]  = y0^3 + 3 y0 sum C^2 + E[Y^3]
    D_T E[y^3] = 3 (z0 E[y^2] + 2 y0 sum C D + E[Y^2 Z])

where C, D are the coefficients of y and z. The cubic expectations need
products of three orthonormal polynomials; only subset triples in which
every variable of the union appears at least twice can contribute.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from .pdd import PddSurrogate

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


class TruncationMismatch(ValueError):
    pass


@dataclass(frozen=True)
class MomentReport:
    m1: float
    m2: float
    m3: float
    S: int
    m: int

    @property
    def variance(self) -> float:
        return self.m2 - self.m1**2

    def to_dict(self) -> dict:
        return {**asdict(self), "variance": self.variance}


@dataclass(frozen=True)
class MomentSensitivityReport:
    dt_m1: float
    dt_m2: float
    dt_m3: float
    S: int
    m: int

    def to_dict(self) -> dict:
        return asdict(self)


def _check_pair(y: PddSurrogate, z: PddSurrogate):
    if not y.compatible(z):
        raise TruncationMismatch(
            f"surrogates differ in truncation or bases: (S={y.S}, m={y.m}) vs (S={z.S}, m={z.m})")


def _sum_squares(s: PddSurrogate) -> float:
    return float(sum(np.sum(b * b) for b in s.blocks.values()))


def _sum_products(y: PddSurrogate, z: PddSurrogate) -> float:
    return float(sum(np.sum(y.blocks[k] * z.blocks[k]) for k in y.blocks))


def mean(s: PddSurrogate) -> float:
    return s.constant


def second_moment(s: PddSurrogate) -> float:
    return s.constant**2 + _sum_squares(s)


def variance(s: PddSurrogate) -> float:
    return _sum_squares(s)


def third_moment(s: PddSurrogate) -> float:
    c = s.constant
    return c**3 + 3.0 * c * _sum_squares(s) + triple_sum(s, s, s)


def dt_mean(z: PddSurrogate) -> float:
    return z.constant


def dt_second_moment(y: PddSurrogate, z: PddSurrogate) -> float:
    _check_pair(y, z)
    return 2.0 * (y.constant * z.constant + _sum_products(y, z))


def dt_third_moment(y: PddSurrogate, z: PddSurrogate) -> float:
    _check_pair(y, z)
    return 3.0 * (z.constant * second_moment(y) + 2.0 * y.constant * _sum_products(y, z)
                  + triple_sum(y, y, z))


def moments(s: PddSurrogate) -> MomentReport:
    return MomentReport(mean(s), second_moment(s), third_moment(s), s.S, s.m)


def sensitivities(y: PddSurrogate, z: PddSurrogate) -> MomentSensitivityReport:
    return MomentSensitivityReport(dt_mean(z), dt_second_moment(y, z), dt_third_moment(y, z), y.S, y.m)


# -- triple sums --------------------------------------------------------------


@dataclass
class _Pattern:
    """Triples (u, v, w) sharing one layout of the union variables."""

    sizes: tuple[int, int, int]
    # for each union variable: its position in u, v, w (or -1 if absent)
    slots: tuple[tuple[int, int, int], ...]
    rows: list  # [(row_u, row_v, row_w)]
    union: list  # [tuple of variable indices]


def _layout(u, v, w):
    union = sorted(set(u) | set(v) | set(w))
    slots = tuple(tuple(s.index(i) if i in s else -1 for s in (u, v, w)) for i in union)
    return tuple(union), slots


@lru_cache(maxsize=8)
def _triple_patterns(N: int, S: int) -> tuple[_Pattern, ...]:
    """Group every ordered subset triple with a possibly nonzero expectation by layout."""
    rows = {}
    for s in range(1, S + 1):
        for r, u in enumerate(itertools.combinations(range(N), s)):
            rows[u] = r
    groups: dict = {}
    for u in rows:
        su = set(u)
        rest = [i for i in range(N) if i not in su]
        for nd in range(len(u) + 1):
            for drop in itertools.combinations(u, nd):
                keep = tuple(i for i in u if i not in drop)
                for na in range(0, S - nd + 1):
                    if not 1 <= len(keep) + na <= S:
                        continue
                    for add in itertools.combinations(rest, na):
                        v = tuple(sorted(keep + add))
                        sym = tuple(sorted(set(drop) | set(add)))
                        # w = (u sym-diff v) plus any part of the intersection
                        for nt in range(0, min(len(keep), S - len(sym)) + 1):
                            for extra in itertools.combinations(keep, nt):
                                w = tuple(sorted(sym + extra))
                                if not w:
                                    continue
                                union, slots = _layout(u, v, w)
                                key = (len(u), len(v), len(w), slots)
                                g = groups.get(key)
                                if g is None:
                                    g = groups[key] = _Pattern((len(u), len(v), len(w)), slots, [], [])
                                g.rows.append((rows[u], rows[v], rows[w]))
                                g.union.append(union)
    out = []
    for g in groups.values():
        g.rows = np.array(g.rows, dtype=int)
        g.union = np.array(g.union, dtype=int)
        out.append(g)
    return tuple(out)


def triple_sum(a: PddSurrogate, b: PddSurrogate, c: PddSurrogate) -> float:
    """E[A B C] for the zero-mean parts of three surrogates with identical truncation."""
    _check_pair(a, b)
    _check_pair(a, c)
    N, m = a.N, a.m
    tables = np.array([basis.triple_table for basis in a.bases])  # (N, m+1, m+1, m+1)
    total = 0.0
    for g in _triple_patterns(N, a.S):
        su, sv, sw = g.sizes
        lu, lv, lw = (_LETTERS[:su], _LETTERS[su:su + sv], _LETTERS[su + sv:su + sv + sw])
        ops = [a.blocks[su][g.rows[:, 0]], b.blocks[sv][g.rows[:, 1]], c.blocks[sw][g.rows[:, 2]]]
        specs = ["Z" + lu, "Z" + lv, "Z" + lw]
        for k, (pu, pv, pw) in enumerate(g.slots):
            t = tables[g.union[:, k]]
            index = [slice(None)]
            spec = "Z"
            for pos, letters in ((pu, lu), (pv, lv), (pw, lw)):
                if pos < 0:
                    index.append(0)
                else:
                    index.append(slice(1, None))
                    spec += letters[pos]
            ops.append(t[tuple(index)])
            specs.append(spec)
        total += float(np.einsum(",".join(specs) + "->", *ops, optimize=True))
    return total
