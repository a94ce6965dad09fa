"""Precision contexts, dense polynomials, and full-pivot linear algebra.

Scalars are mpmath mpf/mpc carrying the mantissa width of the active
context.  Public entry points set the working precision themselves;
internal helpers assume the caller already did.
"""
from __future__ import annotations

import dataclasses
from typing import Iterable, Sequence

from mpmath import mp

from .errors import SingularSystem


@dataclasses.dataclass(frozen=True)
class PrecisionContext:
    """Immutable bundle of mantissa width and the two tolerance knobs.

    quad_tol drives adaptive quadrature termination; verify_tol is the
    looser bound used when checking identities that stack several
    quadrature results.
    """

    mantissa_bits: int = 256
    quad_tol: float = 1e-30
    verify_tol: float = 1e-20

    def __post_init__(self):
        if self.mantissa_bits < 64:
            raise ValueError("mantissa_bits must be >= 64")
        if not (0 < float(self.quad_tol) < float(self.verify_tol)):
            raise ValueError("need 0 < quad_tol < verify_tol")

    def workprec(self):
        return mp.workprec(self.mantissa_bits)

    @property
    def eps(self):
        with self.workprec():
            return mp.mpf(2) ** (-self.mantissa_bits + 4)


DEFAULT_CONTEXT = PrecisionContext()


def _to_mpf(x):
    if isinstance(x, mp.mpf):
        return x
    if isinstance(x, (int, str)):
        return mp.mpf(x)
    if isinstance(x, float):
        return mp.mpf(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to real scalar")


def _to_mpc(x):
    if isinstance(x, (mp.mpf, mp.mpc, int, float, str)):
        return mp.mpc(x)
    if isinstance(x, complex):
        return mp.mpc(x.real, x.imag)
    raise TypeError(f"cannot coerce {type(x).__name__} to complex scalar")


class Poly:
    """Dense polynomial, coefficient index = power, trailing zeros trimmed.

    The zero polynomial is represented as a single zero coefficient.
    """

    __slots__ = ("coeffs",)
    _scalar = staticmethod(_to_mpf)

    def __init__(self, coeffs: Iterable):
        cs = [self._scalar(c) for c in coeffs]
        if not cs:
            cs = [self._scalar(0)]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, name, value):
        raise AttributeError("polynomials are immutable")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0] == 0

    @property
    def leading(self):
        return self.coeffs[-1]

    def __call__(self, z):
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * z + c
        return acc

    def __eq__(self, other):
        return isinstance(other, Poly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"{type(self).__name__}({list(self.coeffs)!r})"

    def _wrap(self, coeffs):
        cls = type(self)
        return cls(coeffs)

    def __add__(self, other):
        cls = CPoly if isinstance(other, CPoly) or isinstance(self, CPoly) else Poly
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        a = a + (self._scalar(0),) * (n - len(a))
        b = b + (other._scalar(0),) * (n - len(b))
        return cls([x + y for x, y in zip(a, b)])

    def __sub__(self, other):
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c):
        cls = type(self)
        if isinstance(c, (complex, mp.mpc)) and not isinstance(self, CPoly):
            cls = CPoly
        s = cls._scalar(c)
        return cls([s * x for x in self.coeffs])

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return self.scale(other)
        cls = CPoly if isinstance(other, CPoly) or isinstance(self, CPoly) else Poly
        a, b = self.coeffs, other.coeffs
        out = []
        for s in range(len(a) + len(b) - 1):
            lo = max(0, s - len(b) + 1)
            hi = min(s, len(a) - 1)
            out.append(mp.fsum(a[i] * b[s - i] for i in range(lo, hi + 1)))
        return cls(out)

    def __rmul__(self, other):
        return self.scale(other)

    def shift_up(self, k: int):
        """Multiply by x**k."""
        if self.is_zero:
            return self
        return self._wrap((self._scalar(0),) * k + self.coeffs)

    def monic(self):
        if self.is_zero:
            raise ValueError("zero polynomial has no monic form")
        lead = self.coeffs[-1]
        return self._wrap([c / lead for c in self.coeffs])

    def coeff(self, i: int):
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return self._scalar(0)


class CPoly(Poly):
    """Polynomial with complex coefficients."""

    __slots__ = ()
    _scalar = staticmethod(_to_mpc)


def poly_eval(p: Poly, z):
    """Horner evaluation at a real or complex point."""
    return p(z)


def poly_derivative(p: Poly) -> Poly:
    if p.degree == 0:
        return p._wrap([0])
    return p._wrap([i * c for i, c in enumerate(p.coeffs)][1:])


# ---------------------------------------------------------------------------
# dense matrix helpers (lists of lists of mpf/mpc)

def mat_identity(n, one=None):
    one = mp.mpf(1) if one is None else one
    zero = one * 0
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def mat_mul(A, B):
    n, m, p = len(A), len(B), len(B[0])
    Bt = [[B[k][j] for k in range(m)] for j in range(p)]
    return [[mp.fdot(A[i], Bt[j]) for j in range(p)] for i in range(n)]


def mat_vec(A, x):
    return [mp.fdot(row, x) for row in A]


def mat_sub(A, B):
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_transpose(A):
    return [list(col) for col in zip(*A)]


def mat_copy(A):
    return [list(row) for row in A]


def mat_inf_norm(A):
    return max(max(abs(v) for v in row) for row in A)


def _eliminate(A, bs, ctx: PrecisionContext, pivot_rtol=None):
    """Full-pivot Gaussian elimination on a copy of A.

    Returns (solutions for each rhs in bs, determinant).  Raises
    SingularSystem when the best remaining pivot underflows the
    relative threshold.
    """
    n = len(A)
    M = mat_copy(A)
    X = [list(b) for b in bs]
    scale = mat_inf_norm(M)
    if scale == 0:
        raise SingularSystem("zero matrix")
    if pivot_rtol is None:
        pivot_rtol = mp.mpf(2) ** (-(ctx.mantissa_bits - 16))
    floor = scale * pivot_rtol
    colperm = list(range(n))
    det = mp.mpf(1)
    for k in range(n):
        pr, pc, pv = k, k, abs(M[k][k])
        for i in range(k, n):
            for j in range(k, n):
                a = abs(M[i][j])
                if a > pv:
                    pr, pc, pv = i, j, a
        if pv < floor:
            raise SingularSystem(f"pivot {pv} below threshold {floor}")
        if pr != k:
            M[k], M[pr] = M[pr], M[k]
            for b in X:
                b[k], b[pr] = b[pr], b[k]
            det = -det
        if pc != k:
            for row in M:
                row[k], row[pc] = row[pc], row[k]
            colperm[k], colperm[pc] = colperm[pc], colperm[k]
            det = -det
        piv = M[k][k]
        det = det * piv
        for i in range(k + 1, n):
            f = M[i][k] / piv
            if f == 0:
                continue
            for j in range(k, n):
                M[i][j] = M[i][j] - f * M[k][j]
            for b in X:
                b[i] = b[i] - f * b[k]
    sols = []
    for b in X:
        y = [None] * n
        for i in range(n - 1, -1, -1):
            s = mp.fdot(M[i][i + 1:], y[i + 1:]) if i + 1 < n else mp.mpf(0)
            y[i] = (b[i] - s) / M[i][i]
        x = [None] * n
        for pos, orig in enumerate(colperm):
            x[orig] = y[pos]
        sols.append(x)
    return sols, det


def linear_solve(A: Sequence[Sequence], b: Sequence,
                 ctx: PrecisionContext = DEFAULT_CONTEXT, pivot_rtol=None):
    """Solve A x = b with full pivoting; result residual-checked.

    Raises SingularSystem if a pivot underflows or the residual exceeds
    verify_tol relative to the system scale.
    """
    with ctx.workprec():
        sols, _ = _eliminate(A, [list(b)], ctx, pivot_rtol)
        x = sols[0]
        r = [mp.fdot(row, x) - bi for row, bi in zip(A, b)]
        scale = max(max(abs(v) for v in b), mat_inf_norm(A) * max(abs(v) for v in x))
        if scale > 0 and max(abs(v) for v in r) > mp.mpf(ctx.verify_tol) * scale:
            raise SingularSystem("residual check failed; system effectively singular")
        return x


def determinant(A: Sequence[Sequence], ctx: PrecisionContext = DEFAULT_CONTEXT):
    """Determinant via the same full-pivot elimination."""
    with ctx.workprec():
        try:
            _, det = _eliminate(A, [], ctx, pivot_rtol=mp.mpf(0))
        except ZeroDivisionError:
            return mp.mpf(0)
        except SingularSystem:
            return mp.mpf(0)
        return det
