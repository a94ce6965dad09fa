"""Skew moment matrices, Hankel matrices, and the three inner products.

Matrix entries are weighted dot products over a WeightTable master grid,
each validated by coarse/fine level agreement with automatic grid
escalation.  Antisymmetry is exact because each (i, j) pair is computed
once and reflected.
"""
from __future__ import annotations

import dataclasses

from mpmath import mp

from .errors import MomentRangeExceeded, QuadratureFailure
from .numerics import DEFAULT_CONTEXT, Poly, PrecisionContext
from .potentials import Potential, WeightTable, get_weight_table


@dataclasses.dataclass(frozen=True)
class SkewMomentMatrix:
    """Antisymmetric matrix of pairings of monomials, M_ij = <x^i, y^j>."""

    beta: int
    n: int
    rows: tuple
    potential: Potential

    def entry(self, i: int, j: int):
        return self.rows[i][j]

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def as_lists(self):
        return [list(r) for r in self.rows]


@dataclasses.dataclass(frozen=True)
class HankelMatrix:
    """Symmetric moment matrix H_ij = m_{i+j} for the weight exp(-V)."""

    n: int
    rows: tuple
    potential: Potential

    def entry(self, i: int, j: int):
        return self.rows[i][j]

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def as_lists(self):
        return [list(r) for r in self.rows]


def _checked_grid_moment(table: WeightTable, i: int, j: int):
    """Integral of x^i w_j(x) dx with two-level agreement, escalating the
    grid when the check fails."""
    tol = table.tol
    for _ in range(3):
        fine, coarse, sabs = table.w_entry(i, j)
        # absolute floor at the integrand mass: parity-zero entries cancel
        # only to round-off, which anything below sabs would never accept
        scale = max(abs(fine), sabs)
        if abs(fine - coarse) <= tol * scale:
            return fine
        table.ensure_level(table.level + 1)
    raise QuadratureFailure(f"moment entry ({i},{j}) did not stabilize")


def build_skew_moment_matrix(V: Potential, beta: int, n: int,
                             ctx: PrecisionContext = DEFAULT_CONTEXT,
                             table: WeightTable = None) -> SkewMomentMatrix:
    """n x n matrix of monomial pairings under the beta = 1 or 4 product."""
    if beta not in (1, 4):
        raise ValueError("beta must be 1 or 4")
    if n < 1:
        raise ValueError("n must be >= 1")
    if table is None:
        table = get_weight_table(V, ctx, i_max=max(2 * n - 1, 4),
                                 w_max=(n - 1 if beta == 1 else 0))
    with mp.workprec(ctx.mantissa_bits + 16):
        zero = mp.mpf(0)
        rows = [[zero] * n for _ in range(n)]
        if beta == 1:
            table.ensure_ranges(i_max=n - 1, w_max=n - 1)
            for j in range(n):
                for i in range(j):
                    v = _checked_grid_moment(table, i, j)
                    rows[i][j] = v
                    rows[j][i] = -v
        else:
            table.ensure_ranges(i_max=max(2 * n - 3, 2))
            for j in range(n):
                for i in range(j):
                    v = (j - i) * table.moment(i + j - 1)
                    rows[i][j] = v
                    rows[j][i] = -v
    return SkewMomentMatrix(beta=beta, n=n,
                            rows=tuple(tuple(r) for r in rows), potential=V)


def build_hankel_matrix(V: Potential, n: int,
                        ctx: PrecisionContext = DEFAULT_CONTEXT,
                        table: WeightTable = None) -> HankelMatrix:
    if n < 1:
        raise ValueError("n must be >= 1")
    if table is None:
        table = get_weight_table(V, ctx, i_max=max(2 * n - 2, 4), w_max=0)
    table.ensure_ranges(i_max=max(2 * n - 2, 2))
    rows = [[table.moment(i + j) for j in range(n)] for i in range(n)]
    return HankelMatrix(n=n, rows=tuple(tuple(r) for r in rows), potential=V)


def _degree_guard(f: Poly, g: Poly, limit: int, what: str):
    if f.degree > limit or g.degree > limit:
        raise MomentRangeExceeded(
            f"{what}: degrees ({f.degree},{g.degree}) exceed table limit {limit}"
        )


def skew_inner_1(f: Poly, g: Poly, M: SkewMomentMatrix):
    """Bilinear pairing through a beta = 1 skew moment matrix."""
    if M.beta != 1:
        raise ValueError("matrix is not a beta=1 moment matrix")
    _degree_guard(f, g, M.n - 1, "skew_inner_1")
    rowdots = [mp.fdot(M.rows[i][:g.degree + 1], g.coeffs)
               for i in range(f.degree + 1)]
    return mp.fdot(f.coeffs, rowdots)


def inner_2(f: Poly, g: Poly, table: WeightTable):
    """Pairing against exp(-2V): sum of (f*g) coefficients times moments."""
    prod = f * g
    table.ensure_ranges(i_max=prod.degree)
    return mp.fdot(prod.coeffs, [table.moment2(s) for s in range(prod.degree + 1)])


def skew_inner_4(f: Poly, g: Poly, table: WeightTable):
    """Pairing int (f g' - f' g) exp(-V) via the closed moment form
    sum_ij f_i g_j (j - i) m_{i+j-1}."""
    need = f.degree + g.degree - 1
    table.ensure_ranges(i_max=max(need, 2))
    terms = []
    for i, fi in enumerate(f.coeffs):
        if fi == 0:
            continue
        for j, gj in enumerate(g.coeffs):
            if gj == 0 or j == i:
                continue
            terms.append(fi * gj * (j - i) * table.moment(i + j - 1))
    return mp.fsum(terms) if terms else mp.mpf(0)


def skew_inner(f: Poly, g: Poly, beta: int, M_or_table):
    """Dispatch on beta for callers holding either structure."""
    if beta == 1:
        return skew_inner_1(f, g, M_or_table)
    if beta == 4:
        return skew_inner_4(f, g, M_or_table)
    raise ValueError("beta must be 1 or 4")
