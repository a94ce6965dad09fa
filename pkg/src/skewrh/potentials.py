"""Confining potentials and the weight data derived from them.

A WeightTable holds, for one potential and precision context, a shared
tanh-sinh master grid over the truncated support together with running
half-line integrals of y^j exp(-V).  Every moment-type integral then
reduces to a weighted dot product over that grid, and the half-line
integrals at arbitrary points cost one short Gauss-Legendre panel.

Grid sums for integrands carrying exp(-V) run over the active slice
|x| <= cut only, where cut satisfies x^i_max exp(-V(x)) < quad_tol*1e-4;
the discarded terms are below the validated error scale by construction.
"""
from __future__ import annotations

import bisect

from mpmath import mp

from .errors import IntegrabilityError, MomentRangeExceeded, QuadratureFailure
from .numerics import DEFAULT_CONTEXT, Poly, PrecisionContext, poly_derivative
from .quadrature import QuadraturePlan, legendre_nodes, ts_mapped_level


class Potential:
    """Even-degree polynomial V with positive leading coefficient.

    scale_n is folded into the coefficients once at construction, so the
    stored polynomial is the effective exponent of exp(-V).
    """

    def __init__(self, coeffs, scale_n=1):
        s = mp.mpf(scale_n)
        if not s > 0:
            raise IntegrabilityError("scale_n must be positive")
        poly = Poly([s * mp.mpf(c) for c in coeffs])
        if poly.degree < 2 or poly.degree % 2 != 0:
            raise IntegrabilityError(
                f"potential degree must be even and >= 2, got {poly.degree}"
            )
        if not poly.leading > 0:
            raise IntegrabilityError("leading coefficient must be positive")
        self.poly = poly
        self.dpoly = poly_derivative(poly)

    @classmethod
    def parse(cls, text: str, scale_n=1) -> "Potential":
        parts = [p.strip() for p in text.split(",")]
        if not parts or any(p == "" for p in parts):
            raise ValueError(f"malformed coefficient list: {text!r}")
        return cls([mp.mpf(p) for p in parts], scale_n=scale_n)

    @property
    def degree(self) -> int:
        return self.poly.degree

    @property
    def leading(self):
        return self.poly.leading

    def __call__(self, x):
        return self.poly(x)

    def key(self):
        return tuple(mp.nstr(c, 40) for c in self.poly.coeffs)

    def deformed(self, j: int, t) -> "Potential":
        """Potential with t*x^j added (validity re-checked)."""
        coeffs = list(self.poly.coeffs)
        while len(coeffs) <= j:
            coeffs.append(mp.mpf(0))
        coeffs[j] = coeffs[j] + mp.mpf(t)
        return Potential(coeffs)

    def __repr__(self):
        return f"Potential({[mp.nstr(c, 8) for c in self.poly.coeffs]})"


def weight_W(V: Potential, x, ctx: PrecisionContext = DEFAULT_CONTEXT):
    """The squared-exponent weight exp(-2 V(x))."""
    with ctx.workprec():
        return mp.e ** (-2 * V(mp.mpf(x)))


def pi_polynomial(V: Potential, j: int) -> Poly:
    """j*y^(j-1) - y^j * V'(y); degree j + d - 1, leading -d*v_d."""
    if j < 0:
        raise ValueError("j must be >= 0")
    d = V.degree
    if j == 0:
        out = -V.dpoly
    else:
        out = Poly([0] * (j - 1) + [j]) - V.dpoly.shift_up(j)
    assert out.degree == j + d - 1
    assert out.leading == -d * V.leading
    return out


def _tail_radius(V: Potential, i_max: int, tol):
    """Smallest R >= 1 with R^i_max exp(-V(R)) < tol."""
    tol = mp.mpf(tol)

    def small(r):
        return r ** i_max * mp.e ** (-V(r)) < tol

    lo, hi = mp.mpf(1), mp.mpf(1)
    while not small(hi):
        lo = hi
        hi = hi * 2
        if hi > 2 ** 40:
            raise QuadratureFailure("cannot satisfy tail bound; check potential")
    for _ in range(60):
        mid = (lo + hi) / 2
        if small(mid):
            hi = mid
        else:
            lo = mid
    return hi


def truncation_radius(V: Potential, i_max: int, tol):
    """Support half-width: smallest R with R^i_max exp(-V(R)) < tol/100,
    doubled for safety.  Returns (base, doubled)."""
    base = _tail_radius(V, i_max, mp.mpf(tol) / 100)
    return base, 2 * base


class WeightTable:
    """Grid data, moments, and half-line integral tables for one potential.

    Grown on demand (ensure_ranges / ensure_level); consumers holding
    derived vectors should compare `version` before reusing them.
    """

    panel_order = 20
    panel_max_width = 0.25
    min_level = 4
    max_level = 11

    def __init__(self, potential: Potential, ctx: PrecisionContext = DEFAULT_CONTEXT,
                 i_max: int = 8, w_max=None):
        self.potential = potential
        self.ctx = ctx
        self.i_max = max(2, int(i_max))
        w_max = self.i_max if w_max is None else max(0, int(w_max))
        self.w_max = min(w_max, self.i_max)
        self._prec = ctx.mantissa_bits + 16
        self.version = 0
        self._ew_memo = {}
        with mp.workprec(self._prec):
            self.tol = mp.mpf(ctx.quad_tol)
            self.base_radius, self.radius = truncation_radius(
                potential, self.i_max, self.tol)
            self._build_grid()
            self._build_F()

    # -- construction ------------------------------------------------------

    def _ew(self, x):
        v = self._ew_memo.get(x)
        if v is None:
            v = mp.e ** (-self.potential(x))
            self._ew_memo[x] = v
        return v

    def _grid_at_level(self, level):
        xs, ws = ts_mapped_level(-self.radius, self.radius, self._prec, level)
        order = sorted(range(len(xs)), key=lambda i: xs[i])
        xs = [xs[i] for i in order]
        ws = [ws[i] for i in order]
        ew = [self._ew(x) for x in xs]
        return xs, ws, ew

    def _moments_on(self, xs, ws, ew, count):
        out = []
        cur = [w * e for w, e in zip(ws, ew)]
        for i in range(count):
            if i > 0:
                cur = [c * x for c, x in zip(cur, xs)]
            out.append((mp.fsum(cur), mp.fsum(abs(c) for c in cur)))
        return out

    def _build_grid(self):
        n_m = self.i_max + 1
        prev = None
        for level in range(self.min_level, self.max_level + 1):
            xs, ws, ew = self._grid_at_level(level)
            cur = self._moments_on(xs, ws, ew, n_m)
            if prev is not None:
                ok = True
                for (v, sabs), (pv, _) in zip(cur, prev):
                    scale = max(abs(v), sabs)
                    if abs(v - pv) > self.tol * scale:
                        ok = False
                        break
                if ok:
                    self.level = level
                    self._install_grid(xs, ws, ew, cur)
                    return
            prev = cur
        raise QuadratureFailure("moment grid did not stabilize")

    def _install_grid(self, xs, ws, ew, moments):
        self.xs = xs
        self.wq = ws
        self.ew = ew
        self.ew2 = [e * e for e in ew]
        self.m = [v for v, _ in moments]
        cur = [w * e for w, e in zip(ws, self.ew2)]
        self.m2 = []
        for i in range(self.i_max + 1):
            if i > 0:
                cur = [c * x for c, x in zip(cur, xs)]
            self.m2.append(mp.fsum(cur))
        coarse_x = set(ts_mapped_level(-self.radius, self.radius,
                                       self._prec, self.level - 1)[0])
        self._coarse_full = [x in coarse_x for x in xs]
        self._install_active()
        self.version += 1

    def _install_active(self):
        self.active_radius = _tail_radius(self.potential, self.i_max,
                                          self.tol * mp.mpf('1e-4'))
        self.active_radius = min(self.active_radius, self.radius)
        lo = bisect.bisect_left(self.xs, -self.active_radius)
        hi = bisect.bisect_right(self.xs, self.active_radius)
        self._alo, self._ahi = lo, hi
        self.axs = self.xs[lo:hi]
        self.awq = self.wq[lo:hi]
        self.aew = self.ew[lo:hi]
        self.aew2 = self.ew2[lo:hi]
        self.acoarse = [k for k, c in enumerate(self._coarse_full[lo:hi]) if c]
        self._apow = {0: [mp.mpf(1)] * len(self.axs)}
        self._awq_pow = {}
        self._awq_pow_c = {}
        self._awq_pow_abs = {}
        self._aw_vec = {}
        self._aw_vec_c = {}
        self._aw_vec_abs = {}
        self._weights_at_memo = {}

    # -- half-line integral tables ----------------------------------------

    def _panel_nodes(self, a, b):
        """Gauss-Legendre nodes/weights covering [a, b] in short panels."""
        width = b - a
        if width <= 0:
            return []
        pieces = max(1, int(mp.ceil(width / mp.mpf(self.panel_max_width))))
        gx, gw = legendre_nodes(self.panel_order, self._prec)
        out = []
        step = width / pieces
        for p in range(pieces):
            u = a + p * step
            c, r = u + step / 2, step / 2
            out.append(([c + r * x for x in gx], [r * w for w in gw]))
        return out

    def _panel_F(self, a, b, j_count):
        """Integrals of y^j exp(-V) over [a, b] for j = 0..j_count-1."""
        totals = [mp.mpf(0)] * j_count
        for ys, ws in self._panel_nodes(a, b):
            cur = [w * self._ew(y) for w, y in zip(ws, ys)]
            for j in range(j_count):
                if j > 0:
                    cur = [c * y for c, y in zip(cur, ys)]
                totals[j] += mp.fsum(cur)
        return totals

    def _order_for(self, width):
        # Gauss-Legendre on an entire integrand converges like
        # (width/2r)^(2n); these steps keep the panel error past the
        # table tolerance with two decades of margin.
        if width > mp.mpf('0.05'):
            return self.panel_order
        bits = -mp.log(self.tol, 2) + 40
        need = int(mp.ceil(bits / (2 * mp.log(2 / width, 2))))
        return min(self.panel_order, max(4, need))

    def _panel_F_step(self, a, b, j_count):
        """Like _panel_F but with order matched to the step width."""
        width = b - a
        if width <= 0:
            return [mp.mpf(0)] * j_count
        if width > self.panel_max_width:
            return self._panel_F(a, b, j_count)
        gx, gw = legendre_nodes(self._order_for(width), self._prec)
        c, r = (a + b) / 2, width / 2
        ys = [c + r * x for x in gx]
        cur = [r * w * self._ew(y) for w, y in zip(gw, ys)]
        totals = []
        for j in range(j_count):
            if j > 0:
                cur = [v * y for v, y in zip(cur, ys)]
            totals.append(mp.fsum(cur))
        return totals

    def weights_batch(self, points, n_count: int):
        """Prime the weights_at memo for many nearby points at once.

        Consecutive gaps are integrated incrementally, so clustered
        ladders of nodes cost one short low-order panel per gap instead
        of one anchored panel per point.
        """
        if n_count - 1 > self.w_max:
            raise MomentRangeExceeded(f"w_{n_count-1} beyond table ({self.w_max})")
        todo = sorted({mp.mpf(x) for x in points}
                      - {x for x, n in self._weights_at_memo if n == n_count})
        if not todo:
            return
        with mp.workprec(self._prec):
            nf = max(1, n_count)
            Fs = self._F_at(todo[0], nf)
            prev = todo[0]
            for x in todo:
                if x != prev:
                    step = self._panel_F_step(prev, x, nf)
                    Fs = [f + s for f, s in zip(Fs, step)]
                    prev = x
                key = (x, n_count)
                if key in self._weights_at_memo:
                    continue
                ex = self._ew(x)
                ws = [ex * (2 * Fs[n] - self.m[n]) for n in range(n_count)]
                self._weights_at_memo[key] = (ex, ex * ex, ws)

    def _build_F(self):
        n_j = self.w_max + 1
        xs = self.xs
        cut = self.active_radius
        F = [[None] * len(xs) for _ in range(n_j)]
        zero = [mp.mpf(0)] * n_j
        prev_x = -self.radius
        run = list(zero)
        for k, x in enumerate(xs):
            # segments fully outside the active region carry mass below
            # the validated error scale (tail bound) and are skipped
            if x <= -cut or prev_x >= cut:
                seg = zero
            else:
                seg = self._panel_F(max(prev_x, -cut), min(x, cut), n_j)
            run = [r + s for r, s in zip(run, seg)]
            for j in range(n_j):
                F[j][k] = run[j]
            prev_x = x
        self.F = F
        self._aw_vec = {}
        self._aw_vec_c = {}
        self._aw_vec_abs = {}

    # -- growth ------------------------------------------------------------

    def ensure_level(self, level):
        if level <= self.level:
            return
        if level > self.max_level:
            raise QuadratureFailure("grid level cap reached")
        with mp.workprec(self._prec):
            xs, ws, ew = self._grid_at_level(level)
            cur = self._moments_on(xs, ws, ew, self.i_max + 1)
            self.level = level
            self._install_grid(xs, ws, ew, cur)
            self._build_F()

    def ensure_ranges(self, i_max=None, w_max=None):
        i_max = self.i_max if i_max is None else max(self.i_max, int(i_max))
        w_max = self.w_max if w_max is None else max(self.w_max, int(w_max))
        i_max = max(i_max, w_max)
        if i_max == self.i_max and w_max == self.w_max:
            return
        with mp.workprec(self._prec):
            if i_max > self.i_max:
                base, doubled = truncation_radius(self.potential, i_max, self.tol)
                self.i_max = i_max
                self.w_max = w_max
                if doubled > self.radius:
                    # wider support: rebuild everything from scratch
                    self.base_radius, self.radius = base, doubled
                    self._ew_memo = {}
                    self._build_grid()
                    self._build_F()
                    return
                moms = self._moments_on(self.xs, self.wq, self.ew, self.i_max + 1)
                self._install_grid(self.xs, self.wq, self.ew, moms)
                self._build_F()
                return
            if w_max > self.w_max:
                self.w_max = w_max
                self._build_F()
                self.version += 1

    # -- moments and grid sums --------------------------------------------

    def moment(self, i: int):
        """Integral of x^i exp(-V)."""
        if not 0 <= i <= self.i_max:
            raise MomentRangeExceeded(f"moment {i} beyond table ({self.i_max})")
        return self.m[i]

    def moment2(self, i: int):
        """Integral of x^i exp(-2V)."""
        if not 0 <= i <= self.i_max:
            raise MomentRangeExceeded(f"moment2 {i} beyond table ({self.i_max})")
        return self.m2[i]

    def power_vector(self, i: int):
        """x^i at the active grid nodes (cached, built incrementally)."""
        if i not in self._apow:
            lo = max(k for k in self._apow if k <= i)
            cur = self._apow[lo]
            for k in range(lo + 1, i + 1):
                cur = [c * x for c, x in zip(cur, self.axs)]
                self._apow[k] = cur
        return self._apow[i]

    def _wq_pow(self, i: int):
        if i not in self._awq_pow:
            pv = self.power_vector(i)
            full = [w * p for w, p in zip(self.awq, pv)]
            self._awq_pow[i] = full
            self._awq_pow_c[i] = [2 * full[k] for k in self.acoarse]
            self._awq_pow_abs[i] = [abs(v) for v in full]
        return (self._awq_pow[i], self._awq_pow_c[i], self._awq_pow_abs[i])

    def w_values(self, n: int):
        """w_n at the active grid nodes: exp(-V) * (2 F_n - m_n)."""
        if not 0 <= n <= self.w_max:
            raise MomentRangeExceeded(f"w_{n} beyond table ({self.w_max})")
        if n not in self._aw_vec:
            mn = self.m[n]
            Fn = self.F[n][self._alo:self._ahi]
            vec = [e * (2 * f - mn) for e, f in zip(self.aew, Fn)]
            self._aw_vec[n] = vec
            self._aw_vec_c[n] = [vec[k] for k in self.acoarse]
            self._aw_vec_abs[n] = [abs(v) for v in vec]
        return self._aw_vec[n]

    def w_entry(self, i: int, j: int):
        """(fine, coarse, abs-sum) for the pairing integral x^i w_j."""
        wp, wpc, wpa = self._wq_pow(i)
        self.w_values(j)
        fine = mp.fdot(wp, self._aw_vec[j])
        coarse = mp.fdot(wpc, self._aw_vec_c[j])
        sabs = mp.fdot(wpa, self._aw_vec_abs[j])
        return fine, coarse, sabs

    def grid_dot(self, values):
        """Quadrature sum of a vector sampled on the active nodes."""
        return mp.fdot(self.awq, values)

    def grid_dot_coarse(self, values):
        return mp.fsum(2 * self.awq[k] * values[k] for k in self.acoarse)

    # -- pointwise evaluation ---------------------------------------------

    def half_integral(self, j: int, x):
        """Integral of y^j exp(-V) from the lower truncation point to x."""
        if not 0 <= j <= self.w_max:
            raise MomentRangeExceeded(f"F_{j} beyond table ({self.w_max})")
        with mp.workprec(self._prec):
            return self._F_at(x, j + 1)[j]

    def _F_at(self, x, j_count):
        x = mp.mpf(x)
        if x <= -self.active_radius:
            return [mp.mpf(0)] * j_count
        if x >= self.active_radius:
            return [self.m[j] for j in range(j_count)]
        k = bisect.bisect_right(self.xs, x) - 1
        if k < 0:
            return self._panel_F(-self.active_radius, x, j_count)
        seg = self._panel_F(self.xs[k], x, j_count)
        return [self.F[j][k] + seg[j] for j in range(j_count)]

    def weights_at(self, x, n_count: int):
        """(exp(-V(x)), exp(-2V(x)), [w_0(x) .. w_{n_count-1}(x)]).

        One shared panel per point serves every w_n, so ladders of
        evaluations at common nodes stay cheap.
        """
        if n_count - 1 > self.w_max:
            raise MomentRangeExceeded(f"w_{n_count-1} beyond table ({self.w_max})")
        key = (x, n_count)
        hit = self._weights_at_memo.get(key)
        if hit is not None:
            return hit
        with mp.workprec(self._prec):
            x = mp.mpf(x)
            ex = self._ew(x)
            Fs = self._F_at(x, max(1, n_count))
            ws = [ex * (2 * Fs[n] - self.m[n]) for n in range(n_count)]
            out = (ex, ex * ex, ws)
        if len(self._weights_at_memo) > 200000:
            self._weights_at_memo.clear()
        self._weights_at_memo[key] = out
        return out

    def plan(self, rule: str = "tanh-sinh") -> QuadraturePlan:
        return QuadraturePlan(radius=self.radius, target_tol=self.tol,
                              prec=self._prec, rule=rule,
                              max_level=self.max_level)


_TABLE_REGISTRY = {}


def get_weight_table(V: Potential, ctx: PrecisionContext = DEFAULT_CONTEXT,
                     i_max: int = 8, w_max=None) -> WeightTable:
    """Shared, growable WeightTable per (potential, context)."""
    key = (V.key(), ctx.mantissa_bits, float(ctx.quad_tol))
    table = _TABLE_REGISTRY.get(key)
    if table is None:
        table = WeightTable(V, ctx, i_max=i_max, w_max=w_max)
        _TABLE_REGISTRY[key] = table
    else:
        table.ensure_ranges(i_max=i_max, w_max=w_max)
    return table


def w_function(V: Potential, n: int, x, ctx: PrecisionContext = DEFAULT_CONTEXT):
    """w_n(x) = exp(-V(x)) * (2 * int_{-inf}^x y^n exp(-V) dy - m_n)."""
    table = get_weight_table(V, ctx, i_max=max(n, 4), w_max=n)
    with ctx.workprec():
        return table.weights_at(mp.mpf(x), n + 1)[2][n]
