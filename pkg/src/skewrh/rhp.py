"""Matrix boundary-value problems characterizing the skew families.

For a degree-d potential the object is a (d+1) x (d+1) matrix Y(z),
analytic off the real axis, whose rows are (p, C(p W), C(p w_0), ...,
C(p w_{d-2})) for polynomials p pinned by moment conditions.  Row 0
carries the top-degree family member; each lower row solves a square
linear system built from the exp(-2V) moments and the w_n pairings,
normalized so its diagonal entry decays like z^e with unit coefficient.

Verification is numeric throughout: jump residuals by boundary-offset
extrapolation on a shared delta ladder, growth exponents by log-log
slope fits along rays, determinant structure by off-axis sampling.
"""
from __future__ import annotations

import dataclasses

from mpmath import mp

from .errors import (
    DegenerateInnerProduct,
    QuadratureFailure,
    UnsupportedRegime,
)
from .moments import build_skew_moment_matrix, inner_2, skew_inner_1
from .numerics import (
    CPoly,
    DEFAULT_CONTEXT,
    Poly,
    PrecisionContext,
    determinant,
    linear_solve,
    poly_eval,
)
from .potentials import Potential, WeightTable, _tail_radius, get_weight_table, pi_polynomial
from .quadrature import boundary_deltas, richardson_limit, ts_mapped_level
from .skewalg import SkewFamily, skew_orthogonal_family

def _two_pi_i() -> mp.mpc:
    """2*pi*i evaluated at the current working precision.

    Must be a function, not a module constant: a constant would freeze pi
    at whatever precision was active at import time, and the boundary-value
    identities cancel the kernel normalization against half-residue terms
    that use mp.pi at work precision, so any mismatch shows up directly in
    the jump residual.
    """
    return 2 * mp.pi * mp.mpc(0, 1)


@dataclasses.dataclass(frozen=True)
class RHProblem:
    """Problem data: potential, half-degree index, parity, gauge scalars."""

    potential: Potential
    k: int
    parity: str
    free_params: tuple = ()

    def __post_init__(self):
        if self.parity not in ("even", "odd"):
            raise ValueError("parity must be 'even' or 'odd'")

    @property
    def d(self) -> int:
        return self.potential.degree

    @property
    def size(self) -> int:
        return self.d + 1


class JumpMatrix:
    """x -> M(x): identity plus first row (1, W(x), w_0 .. w_{d-2})."""

    def __init__(self, V: Potential, ctx: PrecisionContext = DEFAULT_CONTEXT,
                 table: WeightTable = None):
        self.potential = V
        self.d = V.degree
        self.ctx = ctx
        if table is None:
            table = get_weight_table(V, ctx, i_max=max(4, self.d - 2),
                                     w_max=max(0, self.d - 2))
        else:
            table.ensure_ranges(w_max=max(0, self.d - 2))
        self.table = table

    def first_row(self, x):
        ex, ex2, ws = self.table.weights_at(mp.mpf(x), self.d - 1)
        return [mp.mpf(1), ex2] + ws

    def __call__(self, x):
        n = self.d + 1
        M = [[mp.mpf(1) if r == c else mp.mpf(0) for c in range(n)]
             for r in range(n)]
        M[0] = self.first_row(x)
        return M


class RHSolution:
    """Constructed solution: rows stored as complex combinations of real
    polynomials, evaluated via grid Cauchy transforms.

    Far from the axis the shared master grid is used directly; near it
    the integrand is split at the foot point with local subtraction, on
    tanh-sinh panels whose nodes are shared across a whole delta ladder.
    """

    def __init__(self, problem: RHProblem, family: SkewFamily,
                 table: WeightTable, row_terms, alpha,
                 collapse_residual, ctx: PrecisionContext):
        self.problem = problem
        self.family = family
        self.table = table
        self.row_terms = tuple(tuple(term) for term in row_terms)
        self.alpha = alpha
        self.collapse_residual = collapse_residual
        self.ctx = ctx
        self._far_fu = {}
        self._near_nodes = {}
        self._near_fu = {}
        self._near_level = {}

    # -- structure ---------------------------------------------------------

    @property
    def d(self) -> int:
        return self.problem.d

    @property
    def k(self) -> int:
        return self.problem.k

    @property
    def parity(self) -> str:
        return self.problem.parity

    @property
    def size(self) -> int:
        return self.d + 1

    @property
    def row_polys(self):
        """Materialized first-column polynomials, one per row."""
        out = []
        for terms in self.row_terms:
            acc = CPoly([0])
            for factor, poly in terms:
                acc = acc + CPoly([factor * c for c in poly.coeffs])
            out.append(acc)
        return out

    def expected_exponents(self):
        lead = 2 * self.k + (1 if self.parity == "odd" else 0)
        return [lead, -2 * self.k + self.d - 1] + [-1] * (self.d - 1)

    def perturbed(self, row: int, coeff, poly: Poly = None) -> "RHSolution":
        """Copy with coeff*poly (default p_{2k}) added to one row."""
        if poly is None:
            poly = self.family.polys[2 * self.k]
        terms = [list(t) for t in self.row_terms]
        terms[row] = list(terms[row]) + [(mp.mpc(coeff), poly)]
        return RHSolution(self.problem, self.family, self.table, terms,
                          self.alpha, self.collapse_residual, self.ctx)

    # -- column weight data ------------------------------------------------

    def _u_active(self, col: int):
        """Values of the column-col density on the active master nodes."""
        if col == 1:
            return self.table.aew2
        return self.table.w_values(col - 2)

    def _u_at(self, x, col: int):
        ex, ex2, ws = self.table.weights_at(x, max(1, self.d - 1))
        return ex2 if col == 1 else ws[col - 2]

    # -- far-field evaluation ---------------------------------------------

    def _far_fu_vec(self, poly: Poly, col: int):
        key = (poly, col, self.table.version)
        vec = self._far_fu.get(key)
        if vec is None:
            uvals = self._u_active(col)
            vec = [poly(x) * u for x, u in zip(self.table.axs, uvals)]
            self._far_fu[key] = vec
        return vec

    def _eval_far(self, z):
        t = self.table
        kern = [w / (x - z) for w, x in zip(t.awq, t.axs)]
        n = self.size
        Y = [[mp.mpc(0)] * n for _ in range(n)]
        for r, terms in enumerate(self.row_terms):
            for factor, poly in terms:
                if factor == 0:
                    continue
                Y[r][0] += factor * poly_eval(poly, z)
                for c in range(1, n):
                    dot = mp.fdot(self._far_fu_vec(poly, c), kern)
                    Y[r][c] += factor * dot / _two_pi_i()
        return Y

    # -- near-field evaluation --------------------------------------------

    def _split_nodes(self, x0, level):
        """Inner panels around x0 plus pruned outer panels, with the
        per-node column densities and foot-point offsets attached."""
        key = (x0, level, self.table.version)
        hit = self._near_nodes.get(key)
        if hit is not None:
            return hit
        t = self.table
        prec = t._prec
        with mp.workprec(prec):
            margin = mp.mpf('0.25')
            P = _tail_radius(t.potential, t.i_max, t.tol * mp.mpf('1e-2'))
            P = min(P + margin, t.radius)
            inner = []
            for a, b in ((x0 - 1, x0), (x0, x0 + 1)):
                xs, ws = ts_mapped_level(a, b, prec, level)
                inner.extend(zip(xs, ws))
            outer = []
            for a, b in ((-P, x0 - 1), (x0 + 1, P)):
                if b <= a:
                    continue
                xs, ws = ts_mapped_level(a, b, prec, level)
                # edge clusters carry weight below the tail bound scale
                outer.extend(p for p in zip(xs, ws)
                             if abs(p[0]) <= P - margin or abs(p[0]) <= 1 + abs(x0))
            ixs = [p[0] for p in inner]
            iws = [p[1] for p in inner]
            oxs = [p[0] for p in outer]
            ows = [p[1] for p in outer]
            ncols = self.size - 1
            t.weights_batch(ixs + oxs + [x0], max(1, self.d - 1))
            iu = [[self._u_at(x, c + 1) for x in ixs] for c in range(ncols)]
            ou = [[self._u_at(x, c + 1) for x in oxs] for c in range(ncols)]
            ia = [x - x0 for x in ixs]
            oa = [x - x0 for x in oxs]
        out = (ixs, iws, oxs, ows, iu, ou, ia, oa)
        self._near_nodes[key] = out
        return out

    def _near_fu_vec(self, poly: Poly, col: int, x0, level):
        key = (poly, col, x0, level, self.table.version)
        hit = self._near_fu.get(key)
        if hit is None:
            ixs, iws, oxs, ows, iu, ou, ia, oa = self._split_nodes(x0, level)
            ivec = [poly(x) * u for x, u in zip(ixs, iu[col - 1])]
            ovec = [poly(x) * u for x, u in zip(oxs, ou[col - 1])]
            hit = (ivec, ovec)
            self._near_fu[key] = hit
        return hit

    def _near_kernels(self, x0, delta, level):
        """Weighted kernel parts for z = x0 + i delta: the boundary value
        from below is the conjugate, so one build serves both sides."""
        ixs, iws, oxs, ows, iu, ou, ia, oa = self._split_nodes(x0, level)
        ikr, iki = [], []
        for a, w in zip(ia, iws):
            den = a * a + delta * delta
            ikr.append(w * a / den)
            iki.append(w * delta / den)
        okr, oki = [], []
        for a, w in zip(oa, ows):
            den = a * a + delta * delta
            okr.append(w * a / den)
            oki.append(w * delta / den)
        return ikr, iki, okr, oki, mp.fsum(ikr), mp.fsum(iki)

    def _eval_near(self, z, x0, level):
        delta = mp.im(z)
        ikr, iki, okr, oki, sr, si = self._near_kernels(x0, abs(delta), level)
        sgn = 1 if delta > 0 else -1
        logterm = mp.log(x0 + 1 - z) - mp.log(x0 - 1 - z)
        n = self.size
        Y = [[mp.mpc(0)] * n for _ in range(n)]
        for r, terms in enumerate(self.row_terms):
            for factor, poly in terms:
                if factor == 0:
                    continue
                Y[r][0] += factor * poly_eval(poly, z)
                p0 = poly(x0)
                for c in range(1, n):
                    ivec, ovec = self._near_fu_vec(poly, c, x0, level)
                    f0 = p0 * self._u_at(x0, c)
                    val = mp.mpc(mp.fdot(ivec, ikr) + mp.fdot(ovec, okr) - f0 * sr,
                                 sgn * (mp.fdot(ivec, iki) + mp.fdot(ovec, oki) - f0 * si))
                    val += f0 * logterm
                    Y[r][c] += factor * val / _two_pi_i()
        return Y

    def _near_level_for(self, x0, delta):
        """Smallest panel level whose matrices agree at the given offset."""
        key = (x0, self.table.version)
        lvl = self._near_level.get(key)
        if lvl is not None:
            return lvl
        zp = mp.mpc(x0, delta)
        prev = self._eval_near(zp, x0, 7)
        tol = self.table.tol
        for level in range(8, self.table.max_level + 1):
            cur = self._eval_near(zp, x0, level)
            scale = max(max(abs(v) for v in row) for row in cur)
            dev = max(max(abs(a - b) for a, b in zip(ra, rb))
                      for ra, rb in zip(cur, prev))
            if dev <= tol * max(1, scale):
                # the coarser level already sits within tolerance of the
                # finer one, so the whole ladder may run at it
                self._near_level[key] = level - 1
                return level - 1
            prev = cur
        raise QuadratureFailure(
            f"near-axis evaluation did not stabilize at x0={mp.nstr(x0, 8)}")

    # -- public evaluation -------------------------------------------------

    def evaluate(self, z):
        """Y(z) for z off the real axis."""
        with mp.workprec(self.table._prec):
            z = mp.mpc(z)
            if mp.im(z) == 0:
                raise ValueError("Y is defined off the real axis")
            dx = abs(mp.re(z)) - self.table.base_radius
            dist = abs(mp.im(z)) if dx <= 0 else mp.hypot(dx, mp.im(z))
            if dist >= 1:
                return self._eval_far(z)
            x0 = mp.mpf(mp.re(z))
            level = self._near_level_for(x0, abs(mp.im(z)))
            return self._eval_near(z, x0, level)

    def __repr__(self):
        return (f"RHSolution(parity={self.parity!r}, k={self.k}, "
                f"d={self.d})")


# ---------------------------------------------------------------------------
# construction

def _monomial(j: int) -> Poly:
    return Poly([0] * j + [1])


def _solve_row(table: WeightTable, matrix, k: int, d: int, row: int,
               ctx: PrecisionContext) -> Poly:
    """Degree <= 2k-1 polynomial for one lower row, before the -2*pi*i
    scaling.  Conditions: vanishing exp(-2V) moments up to the order
    forced by column 1, vanishing w_n pairings except the row's own,
    and a unit normalization on the designated moment."""
    n_unk = 2 * k
    A, b = [], []
    if row == 1:
        for j in range(2 * k - d):
            A.append([table.moment2(s + j) for s in range(n_unk)])
            b.append(mp.mpf(0))
        A.append([table.moment2(s + 2 * k - d) for s in range(n_unk)])
        b.append(mp.mpf(1))
        for n in range(d - 1):
            A.append([matrix.entry(s, n) for s in range(n_unk)])
            b.append(mp.mpf(0))
    else:
        for j in range(2 * k - d + 1):
            A.append([table.moment2(s + j) for s in range(n_unk)])
            b.append(mp.mpf(0))
        for n in range(d - 1):
            if n == row - 2:
                continue
            A.append([matrix.entry(s, n) for s in range(n_unk)])
            b.append(mp.mpf(0))
        A.append([matrix.entry(s, row - 2) for s in range(n_unk)])
        b.append(mp.mpf(1))
    assert len(A) == n_unk, "row condition count must match unknowns"
    return Poly(linear_solve(A, b, ctx))


def _prepare(V: Potential, k: int, ctx: PrecisionContext):
    d = V.degree
    table = get_weight_table(V, ctx, i_max=max(4 * k + 3, 4),
                             w_max=2 * k + 1)
    family = skew_orthogonal_family(V, 1, k, ctx, table=table)
    matrix = family.matrix
    den = skew_inner_1(family.polys[2 * k - 2], _monomial(2 * k - 1), matrix)
    scale = abs(matrix.entry(2 * k - 2, 2 * k - 1)) + abs(den)
    if not abs(den) > scale * mp.mpf(2) ** (-ctx.mantissa_bits + 16):
        raise DegenerateInnerProduct(
            "pairing of p_{2k-2} against y^{2k-1} degenerates")
    return d, table, family, matrix, den


def _row_one_data(table, matrix, family, k, d, ctx):
    """Row-1 solve plus its collapse onto the lower even family member."""
    c = _solve_row(table, matrix, k, d, 1, ctx)
    alpha = -_two_pi_i() * c.coeff(2 * k - 2)
    target = family.polys[2 * k - 2]
    dev = mp.mpf(0)
    for s in range(2 * k - 1):
        dev = max(dev, abs(-_two_pi_i() * c.coeff(s) - alpha * target.coeff(s)))
    collapse = dev / max(abs(alpha), mp.mpf(1))
    return c, alpha, collapse


def build_even(V: Potential, k: int,
               ctx: PrecisionContext = DEFAULT_CONTEXT) -> RHSolution:
    """Unique solution with corner growth z^{2k}; rows 1..d are the
    -2*pi*i scaled moment-condition solves."""
    d = V.degree
    if 2 * k < d:
        raise UnsupportedRegime(
            f"need 2k >= d for a square condition system (k={k}, d={d})")
    with ctx.workprec():
        d, table, family, matrix, den = _prepare(V, k, ctx)
        c1, alpha, collapse = _row_one_data(table, matrix, family, k, d, ctx)
        rows = [((mp.mpc(1), family.polys[2 * k]),),
                ((-_two_pi_i(), c1),)]
        for r in range(2, d + 1):
            rows.append(((-_two_pi_i(), _solve_row(table, matrix, k, d, r, ctx)),))
    problem = RHProblem(potential=V, k=k, parity="even")
    return RHSolution(problem, family, table, rows, alpha, collapse, ctx)


def build_odd(V: Potential, k: int, free_params=None,
              ctx: PrecisionContext = DEFAULT_CONTEXT) -> RHSolution:
    """General solution with corner growth z^{2k+1}: the even-problem
    rows shifted by gauge multiples of p_{2k}.

    free_params lists (a_k, b_0 .. b_{d-1}); omitted entries default 0.
    """
    d = V.degree
    if 2 * k + 1 < d:
        raise UnsupportedRegime(
            f"need 2k+1 >= d for a square condition system (k={k}, d={d})")
    if free_params is None:
        free_params = ()
    params = [mp.mpc(p) for p in free_params]
    if len(params) > d + 1:
        raise ValueError(f"at most d+1 = {d + 1} free parameters")
    params += [mp.mpc(0)] * (d + 1 - len(params))
    with ctx.workprec():
        d, table, family, matrix, den = _prepare(V, k, ctx)
        c1, alpha, collapse = _row_one_data(table, matrix, family, k, d, ctx)
        p2k = family.polys[2 * k]
        a_k, bs = params[0], params[1:]
        rows = [((mp.mpc(1), family.polys[2 * k + 1]), (a_k, p2k)),
                ((-_two_pi_i(), c1), (bs[0], p2k))]
        for r in range(2, d + 1):
            rows.append(((-_two_pi_i(), _solve_row(table, matrix, k, d, r, ctx)),
                         (bs[r - 1], p2k)))
    problem = RHProblem(potential=V, k=k, parity="odd",
                        free_params=tuple(params))
    return RHSolution(problem, family, table, rows, alpha, collapse, ctx)


def build(problem: RHProblem, ctx: PrecisionContext = DEFAULT_CONTEXT) -> RHSolution:
    if problem.parity == "even":
        return build_even(problem.potential, problem.k, ctx)
    return build_odd(problem.potential, problem.k, problem.free_params, ctx)


# ---------------------------------------------------------------------------
# verification

def _boundary_pair(sol: RHSolution, x0, delta, level):
    """(Y(x0 + i delta), Y(x0 - i delta)) from one shared kernel build.

    Row polynomials are real, so every grid sum for the lower boundary
    value is the conjugate of the upper one; only the complex row
    factors break the symmetry, and they multiply at the end.
    """
    zp = mp.mpc(x0, delta)
    ikr, iki, okr, oki, sr, si = sol._near_kernels(x0, delta, level)
    lt = mp.log(x0 + 1 - zp) - mp.log(x0 - 1 - zp)
    n = sol.size
    Yp = [[mp.mpc(0)] * n for _ in range(n)]
    Ym = [[mp.mpc(0)] * n for _ in range(n)]
    for r, terms in enumerate(sol.row_terms):
        for factor, poly in terms:
            if factor == 0:
                continue
            v0 = poly_eval(poly, zp)
            Yp[r][0] += factor * v0
            Ym[r][0] += factor * mp.conj(v0)
            p0 = poly(x0)
            for c in range(1, n):
                ivec, ovec = sol._near_fu_vec(poly, c, x0, level)
                f0 = p0 * sol._u_at(x0, c)
                re = mp.fdot(ivec, ikr) + mp.fdot(ovec, okr) - f0 * sr
                im = mp.fdot(ivec, iki) + mp.fdot(ovec, oki) - f0 * si
                base = mp.mpc(re, im) + f0 * lt
                conj = mp.mpc(re, -im) + f0 * mp.conj(lt)
                Yp[r][c] += factor * base / _two_pi_i()
                Ym[r][c] += factor * conj / _two_pi_i()
    return Yp, Ym


def _jump_pair(sol: RHSolution, x0, delta, level, jump_row):
    """Y(x0 + i delta) - Y(x0 - i delta) M(x0) and the magnitude scale."""
    Yp, Ym = _boundary_pair(sol, x0, delta, level)
    n = sol.size
    D = [[mp.mpc(0)] * n for _ in range(n)]
    scale = mp.mpf(1)
    for r in range(n):
        lead = Ym[r][0]
        D[r][0] = Yp[r][0] - lead
        for c in range(1, n):
            D[r][c] = Yp[r][c] - Ym[r][c] - lead * jump_row[c]
            scale = max(scale, abs(Yp[r][c]))
        scale = max(scale, abs(lead))
    return D, scale


def jump_residual(sol: RHSolution, x,
                  ctx: PrecisionContext = None):
    """Max entry of the delta -> 0 extrapolated two-sided mismatch."""
    table = sol.table
    with mp.workprec(table._prec):
        x0 = mp.mpf(x)
        if abs(x0) > table.base_radius:
            raise ValueError("sample point outside the truncated support")
        jump_row = JumpMatrix(sol.problem.potential, sol.ctx,
                              table=table).first_row(x0)
        deltas = boundary_deltas()
        level = sol._near_level_for(x0, deltas[-1])
        mats = [_jump_pair(sol, x0, delta, level, jump_row)[0]
                for delta in deltas]
        n = sol.size
        worst = mp.mpf(0)
        for r in range(n):
            for c in range(n):
                vals = [D[r][c] for D in mats]
                worst = max(worst, abs(richardson_limit(deltas, vals)))
        return worst


def asymptotic_exponents(sol: RHSolution, theta, radii,
                         ctx: PrecisionContext = None):
    """Least-squares slopes of log |Y_rc| vs log R along one ray.

    Entries with magnitudes at the noise floor come back as None; the
    caller compares the diagonal against expected_exponents().
    """
    table = sol.table
    with mp.workprec(table._prec):
        theta = mp.mpf(theta)
        if mp.sin(theta) < mp.mpf('0.05'):
            raise ValueError("ray must stay away from the real axis")
        radii = [mp.mpf(r) for r in radii]
        if len(radii) < 2:
            raise ValueError("need at least two radii for a slope fit")
        if min(radii) < 10 * table.base_radius:
            raise ValueError("radii must clear 10x the truncation radius")
        ray = mp.mpc(mp.cos(theta), mp.sin(theta))
        mags = [sol._eval_far(R * ray) for R in radii]
        floor = mp.mpf(2) ** (-sol.ctx.mantissa_bits // 2)
        n = sol.size
        logr = [mp.log(R) for R in radii]
        rbar = mp.fsum(logr) / len(logr)
        var = mp.fsum((L - rbar) ** 2 for L in logr)
        out = [[None] * n for _ in range(n)]
        for r in range(n):
            for c in range(n):
                vals = [abs(m[r][c]) for m in mags]
                if min(vals) < floor:
                    continue
                logy = [mp.log(v) for v in vals]
                ybar = mp.fsum(logy) / len(logy)
                slope = mp.fsum((L - rbar) * (y - ybar)
                                for L, y in zip(logr, logy)) / var
                out[r][c] = slope
        return out


def det_residual(sol: RHSolution, z_samples,
                 ctx: PrecisionContext = None):
    """Even: max |det Y - 1|.  Odd: deviation of det Y from the best
    monic linear z + c* over the samples."""
    with mp.workprec(sol.table._prec):
        zs = [mp.mpc(z) for z in z_samples]
        if any(mp.im(z) == 0 for z in zs):
            raise ValueError("determinant samples must lie off the axis")
        dets = [determinant(sol.evaluate(z), sol.ctx) for z in zs]
        if sol.parity == "even":
            return max(abs(v - 1) for v in dets)
        shifts = [v - z for v, z in zip(dets, zs)]
        cstar = mp.fsum(shifts) / len(shifts)
        return max(abs(s - cstar) for s in shifts)


def identity_2_1_residual(V: Potential, f: Poly, j: int,
                          ctx: PrecisionContext = DEFAULT_CONTEXT,
                          table: WeightTable = None):
    """|<f, pi_{j+d-1}(y)>_1 - 2 <f, x^j>_2| for the bridge polynomial
    pi built from the potential derivative."""
    with ctx.workprec():
        pi = pi_polynomial(V, j)
        n = max(f.degree, pi.degree) + 1
        if table is None:
            table = get_weight_table(V, ctx, i_max=max(2 * n - 1, 4),
                                     w_max=n - 1)
        matrix = build_skew_moment_matrix(V, 1, n, ctx, table=table)
        lhs = skew_inner_1(f, pi, matrix)
        rhs = 2 * inner_2(f, _monomial(j), table)
        return abs(lhs - rhs)
