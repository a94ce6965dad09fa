"""Polynomial arithmetic, evaluation, and dense linear algebra."""

import random

import pytest
from mpmath import mp

from skewrh.errors import SingularSystem
from skewrh.numerics import (
    CPoly,
    Poly,
    PrecisionContext,
    determinant,
    linear_solve,
    mat_identity,
    mat_inf_norm,
    mat_mul,
    mat_sub,
    mat_transpose,
    mat_vec,
    poly_derivative,
    poly_eval,
)


def test_poly_eval_constant_term():
    p = Poly([mp.mpf("-0.5"), 0, 1])
    assert poly_eval(p, mp.mpf(0)) == mp.mpf("-0.5")


def test_poly_eval_identity_polynomial():
    p = Poly([0, 1])
    z = mp.mpc(3, 4)
    assert poly_eval(p, z) == z


def test_poly_eval_at_root():
    p = Poly([mp.mpf("-0.5"), 0, 1])
    r = mp.sqrt(mp.mpf("0.5"))
    assert abs(poly_eval(p, r)) <= mp.mpf(2) ** -300


def test_poly_derivative_constant():
    assert poly_derivative(Poly([7])) == Poly([0])
    assert poly_derivative(Poly([7])).is_zero


def test_poly_derivative_square():
    assert poly_derivative(Poly([0, 0, 1])) == Poly([0, 2])


def test_poly_derivative_term_by_term():
    assert poly_derivative(Poly([1, 1, 1, 1])) == Poly([1, 2, 3])


def test_poly_eval_additive_random():
    rng = random.Random(1001)
    for _ in range(25):
        p = Poly([rng.randint(-40, 40) for _ in range(rng.randint(1, 9))])
        q = Poly([rng.randint(-40, 40) for _ in range(rng.randint(1, 9))])
        z = mp.mpc(rng.randint(-300, 300), rng.randint(-300, 300)) / 64
        lhs = poly_eval(p + q, z)
        rhs = poly_eval(p, z) + poly_eval(q, z)
        scale = 1 + abs(lhs) + abs(rhs)
        assert abs(lhs - rhs) <= mp.mpf(2) ** -290 * scale


def test_product_rule_coefficient_exact():
    rng = random.Random(2002)
    for _ in range(25):
        p = Poly([rng.randint(-25, 25) for _ in range(rng.randint(1, 8))])
        q = Poly([rng.randint(-25, 25) for _ in range(rng.randint(1, 8))])
        lhs = poly_derivative(p * q)
        rhs = poly_derivative(p) * q + p * poly_derivative(q)
        assert lhs == rhs


def test_poly_algebra_basics():
    p = Poly([1, 2])
    assert p.shift_up(2) == Poly([0, 0, 1, 2])
    assert Poly([2, 4]).monic() == Poly([mp.mpf("0.5"), 1])
    assert Poly([1, 2]).coeff(5) == 0
    assert (-p) == Poly([-1, -2])
    with pytest.raises(ValueError):
        Poly([0]).monic()


def test_cpoly_promotion():
    p = Poly([1, 1])
    z = p.scale(mp.mpc(0, 1))
    assert isinstance(z, CPoly)
    assert z.coeffs == (mp.mpc(0, 1), mp.mpc(0, 1))


def test_linear_solve_identity(ctx):
    A = mat_identity(3)
    x = linear_solve(A, [mp.mpf(1), mp.mpf(2), mp.mpf(3)], ctx)
    assert [v for v in x] == [1, 2, 3]


def test_linear_solve_permutation(ctx):
    A = [[mp.mpf(0), mp.mpf(1)], [mp.mpf(1), mp.mpf(0)]]
    x = linear_solve(A, [mp.mpf(5), mp.mpf(7)], ctx)
    assert abs(x[0] - 7) <= ctx.verify_tol and abs(x[1] - 5) <= ctx.verify_tol


def test_linear_solve_hilbert_block(ctx):
    A = [[mp.mpf(1), mp.mpf(1) / 2], [mp.mpf(1) / 2, mp.mpf(1) / 3]]
    b = mat_vec(A, [mp.mpf(1), mp.mpf(1)])
    x = linear_solve(A, b, ctx)
    assert max(abs(v - 1) for v in x) <= ctx.verify_tol


def test_linear_solve_residual_random_sizes(ctx):
    rng = random.Random(3003)
    for n in (3, 10, 25, 60):
        A = [[mp.mpf(rng.randint(-64, 64)) / 256 + (8 if i == j else 0)
              for j in range(n)] for i in range(n)]
        x_true = [mp.mpf(rng.randint(-50, 50)) for _ in range(n)]
        b = mat_vec(A, x_true)
        x = linear_solve(A, b, ctx)
        resid = max(abs(r) for r in
                    [ax - bv for ax, bv in zip(mat_vec(A, x), b)])
        bnorm = max(abs(v) for v in b)
        assert resid <= ctx.verify_tol * max(1, bnorm)


def test_linear_solve_singular(ctx):
    A = [[mp.mpf(1), mp.mpf(1)], [mp.mpf(1), mp.mpf(1)]]
    with pytest.raises(SingularSystem):
        linear_solve(A, [mp.mpf(1), mp.mpf(2)], ctx)


def test_determinant_known_values(ctx):
    assert determinant(mat_identity(4), ctx) == 1
    A = [[mp.mpf(2), mp.mpf(1)], [mp.mpf(5), mp.mpf(3)]]
    assert abs(determinant(A, ctx) - 1) <= mp.mpf("1e-70")
    # antisymmetric odd size is exactly singular
    B = [[mp.mpf(0), mp.mpf(2), mp.mpf(-1)],
         [mp.mpf(-2), mp.mpf(0), mp.mpf(4)],
         [mp.mpf(1), mp.mpf(-4), mp.mpf(0)]]
    assert abs(determinant(B, ctx)) <= mp.mpf("1e-70")


def test_matrix_helpers_exact():
    A = [[mp.mpf(1), mp.mpf(2)], [mp.mpf(3), mp.mpf(4)]]
    B = [[mp.mpf(0), mp.mpf(1)], [mp.mpf(1), mp.mpf(0)]]
    assert mat_mul(A, B) == [[2, 1], [4, 3]]
    assert mat_transpose(A) == [[1, 3], [2, 4]]
    assert mat_sub(A, A) == [[0, 0], [0, 0]]
    assert mat_inf_norm(A) == 4  # entrywise max-abs norm
    assert mat_vec(A, [mp.mpf(1), mp.mpf(1)]) == [3, 7]


def test_precision_context_protocol(ctx):
    assert ctx.mantissa_bits == 256
    with ctx.workprec():
        assert mp.prec == 256
    c2 = PrecisionContext(mantissa_bits=128, quad_tol=mp.mpf("1e-20"),
                          verify_tol=mp.mpf("1e-12"))
    assert c2.eps == mp.mpf(2) ** (-128 + 4)  # four guard bits
