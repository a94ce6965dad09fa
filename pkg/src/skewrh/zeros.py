"""Polynomial root finding, reality/interlacing checks, and zero histograms.

Roots come from a simultaneous Aberth-Ehrlich iteration started on a
perturbed circle, run 64 bits above the context precision, and verified
by back-substitution.  Interlacing compares two root reports whose
degrees differ by one (consecutive classical polynomials) or two
(consecutive same-parity family members): the lower-degree roots must
sit strictly inside the higher-degree hull, every gap of the lower
polynomial must catch at least one higher root, and no gap of the
higher polynomial may catch more than one lower root.  Reality is
judged against a tolerance proportional to the root scale, separate
from the algebraic verification tolerance.
"""
from __future__ import annotations

import bisect
import dataclasses

from mpmath import mp

from .errors import NoConvergence, NotReal
from .numerics import DEFAULT_CONTEXT, Poly, PrecisionContext

REALITY_FACTOR = "1e-10"


@dataclasses.dataclass(frozen=True)
class RootReport:
    """All roots of one polynomial, with reality metadata.

    roots are sorted by (real, imag); sorted_real_parts carries just the
    real parts in increasing order; interlaces_with optionally records
    the outcome of a pairing check against another report.
    """

    roots: tuple
    max_imag: object
    sorted_real_parts: tuple
    interlaces_with: bool | None = None

    @property
    def degree(self) -> int:
        return len(self.roots)

    @property
    def scale(self):
        """Largest root modulus (zero for the all-zero root set)."""
        return max(abs(z) for z in self.roots)


@dataclasses.dataclass(frozen=True)
class Histogram:
    """Normalized counts over uniform bins; len(edges) == len(mass) + 1."""

    edges: tuple
    mass: tuple

    @property
    def total_mass(self):
        return mp.fsum(self.mass)


def _horner(coeffs, z):
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * z + c
    return acc


def _aberth(coeffs, tol, max_iter):
    """Simultaneous root iteration for a coefficient list, low power first.

    Assumes len(coeffs) >= 2 with nonzero leading and constant terms.
    Returns the converged approximations in arbitrary order.
    """
    n = len(coeffs) - 1
    lead = coeffs[-1]
    radius = 1 + max(abs(c / lead) for c in coeffs[:-1])
    zs = []
    for i in range(n):
        ang = 2 * mp.pi * i / n + mp.mpf("0.7") / n + mp.mpf("0.25")
        rad = radius * (1 + mp.mpf(i % 7 + 1) / (50 * (n + 6)))
        zs.append(rad * mp.mpc(mp.cos(ang), mp.sin(ang)))
    dcoeffs = [i * c for i, c in enumerate(coeffs)][1:]
    tiny = mp.mpf(2) ** (-mp.prec)
    for _ in range(max_iter):
        max_step = mp.mpf(0)
        for i in range(n):
            z = zs[i]
            dv = _horner(dcoeffs, z)
            if dv == 0:
                zs[i] = z + radius * tiny + tol
                max_step = radius
                continue
            newton = _horner(coeffs, z) / dv
            repulse = mp.mpc(0)
            for j in range(n):
                if j == i:
                    continue
                diff = z - zs[j]
                if diff == 0:
                    diff = radius * tiny
                repulse += 1 / diff
            den = 1 - newton * repulse
            step = newton if den == 0 else newton / den
            zs[i] = z - step
            max_step = max(max_step, abs(step))
        if max_step < tol:
            return zs
    raise NoConvergence(
        f"root iteration stalled: max step {mp.nstr(max_step, 6)} "
        f"after {max_iter} sweeps (tolerance {mp.nstr(tol, 6)})"
    )


def roots(p: Poly, ctx: PrecisionContext = DEFAULT_CONTEXT, verify_tol=None,
          max_iter: int = 220) -> RootReport:
    """Find all complex roots of p and package them as a RootReport.

    Exact zero constant terms are deflated first, so parity-symmetric
    polynomials report their origin root exactly.  After convergence
    every root is re-substituted; the residual must stay below
    verify_tol times the coefficient norm at root scale.
    """
    if p.degree < 1:
        raise ValueError("root finding needs degree >= 1")
    prec = ctx.mantissa_bits + 64
    with mp.workprec(prec):
        tol = (mp.mpf(2) ** (16 - ctx.mantissa_bits) if verify_tol is None
               else mp.mpf(verify_tol))
        coeffs = [mp.mpc(c) for c in p.coeffs]
        found = []
        while len(coeffs) > 1 and coeffs[0] == 0:
            coeffs.pop(0)
            found.append(mp.mpc(0))
        if len(coeffs) > 1:
            found.extend(_aberth(coeffs, tol, max_iter))
        found.sort(key=lambda z: (z.real, z.imag))
        scale = max(1, max(abs(z) for z in found))
        norm = mp.fsum(abs(c) * scale ** s for s, c in enumerate(p.coeffs))
        worst = max(abs(_horner([mp.mpc(c) for c in p.coeffs], z))
                    for z in found)
        if not worst <= tol * norm:
            raise NoConvergence(
                f"root residual {mp.nstr(worst, 6)} exceeds "
                f"{mp.nstr(tol * norm, 6)}"
            )
        return RootReport(
            roots=tuple(found),
            max_imag=max(abs(z.imag) for z in found),
            sorted_real_parts=tuple(sorted(z.real for z in found)),
        )


def _require_real(reports, reality_tol):
    worst = max(r.max_imag for r in reports)
    if worst > reality_tol:
        raise NotReal(
            f"imaginary part {mp.nstr(worst, 6)} exceeds reality tolerance "
            f"{mp.nstr(reality_tol, 6)}"
        )


def interlacing(a: RootReport, b: RootReport, reality_tol=None) -> bool:
    """True when the roots of a strictly interlace those of b.

    a is the lower-degree report; the degree gap must be 1 or 2 (equal
    degrees compare False, since strict interlacing is impossible).
    Raises NotReal when either report has roots off the real axis
    beyond the reality tolerance.
    """
    gap = b.degree - a.degree
    if gap == 0:
        return False
    if gap not in (1, 2):
        raise ValueError("degree gap must be 1 or 2 for interlacing")
    with mp.workprec(max(mp.prec, 64)):
        if reality_tol is None:
            reality_tol = mp.mpf(REALITY_FACTOR) * max(a.scale, b.scale)
        _require_real((a, b), reality_tol)
        lo = list(a.sorted_real_parts)
        hi = list(b.sorted_real_parts)
        merged = sorted(lo + hi)
        if any(x == y for x, y in zip(merged, merged[1:])):
            return False
        if not (hi[0] < lo[0] and lo[-1] < hi[-1]):
            return False
        for x, y in zip(lo, lo[1:]):
            if bisect.bisect_left(hi, y) - bisect.bisect_right(hi, x) < 1:
                return False
        for x, y in zip(hi, hi[1:]):
            if bisect.bisect_left(lo, y) - bisect.bisect_right(lo, x) > 1:
                return False
        return True


def empirical_distribution(reports, bins: int = 40, reality_tol=None) -> Histogram:
    """Pool the (real) roots of several reports into a normalized histogram.

    Bins are uniform over [min, max] of the pooled roots; the last bin
    is closed on the right.  A single distinct value collapses to one
    bin of mass 1.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("need at least one root report")
    if bins < 1:
        raise ValueError("bin count must be positive")
    with mp.workprec(max(mp.prec, 128)):
        if reality_tol is None:
            reality_tol = mp.mpf(REALITY_FACTOR) * max(r.scale for r in reports)
        _require_real(reports, reality_tol)
        xs = sorted(x for r in reports for x in r.sorted_real_parts)
        lo, hi = xs[0], xs[-1]
        total = len(xs)
        if lo == hi:
            return Histogram(edges=(lo, hi), mass=(mp.mpf(1),))
        width = (hi - lo) / bins
        counts = [0] * bins
        for x in xs:
            idx = int(mp.floor((x - lo) / width))
            counts[min(idx, bins - 1)] += 1
        edges = tuple(lo + width * i for i in range(bins)) + (hi,)
        return Histogram(edges=edges,
                         mass=tuple(mp.mpf(c) / total for c in counts))
