import random
from fractions import Fraction

import pytest

from integrable_lab import expr as ex
from integrable_lab import lax, pde, tau
from integrable_lab.expr import EvaluationPoint, Var, evaluate
from integrable_lab.jetring import JetPolynomial
from integrable_lab.lax import (DifferentialOperator, LaxPair,
                                NotMultiplicationOperator, ckdv_lax_pair,
                                extend_operator_y, instantiate_and_apply,
                                kdv_lax_pair, mkdv_lax_pair, op_commutator,
                                op_compose, verify_lax_symbolic)
from integrable_lab.quadrature import QuadConfig
from integrable_lab.scalars import SIGMA, SigmaRational

from conftest import make_pole_excluder

J = JetPolynomial.jet
F = JetPolynomial.field
C = JetPolynomial.const
D = DifferentialOperator
WX = (1, 0, 0)
WXX = (2, 0, 0)


def random_operator(rng, max_order=2):
    terms = {}
    for _ in range(rng.randint(1, 3)):
        key = (rng.randint(0, max_order), 0, 0, 0)
        coeff = JetPolynomial()
        for _ in range(rng.randint(1, 3)):
            c = SigmaRational(Fraction(rng.randint(-4, 4), rng.randint(1, 3)),
                              Fraction(rng.randint(-2, 2)))
            mono = C(c)
            for _ in range(rng.randint(0, 2)):
                k = rng.choice([(0, 0, 0), WX, WXX])
                mono = mono * J(k, rng.randint(1, 2) if k != (0, 0, 0)
                                else rng.choice([-2, -1, 1, 2]))
            coeff = coeff + mono
        if not coeff.is_zero():
            terms[key] = coeff + terms.get(key, JetPolynomial())
    return D(terms)


class TestCompose:
    def test_dx_after_dx(self):
        got = op_compose(D.d("x"), D.d("x"))
        assert got == D({(2, 0, 0, 0): C(1)})

    def test_commutator_dxx_with_multiplication(self):
        # [d_x^2, u] = u_xx + 2 u_x d_x
        u_mult = D.mult(F())
        dxx = D({(2, 0, 0, 0): C(1)})
        got = op_commutator(dxx, u_mult)
        want = D({(0, 0, 0, 0): J(WXX), (1, 0, 0, 0): C(2) * J(WX)})
        assert got == want

    def test_kdv_L_against_dx(self):
        # [L, d_x] = -u_x as a multiplication operator
        L = kdv_lax_pair().L
        diff = op_compose(L, D.d("x")) - op_compose(D.d("x"), L)
        assert diff == D({(0, 0, 0, 0): C(-1) * J(WX)})

    def test_dx_with_field_multiplication(self):
        got = op_commutator(D.d("x"), D.mult(F()))
        assert got == D({(0, 0, 0, 0): J(WX)})


class TestCommutatorAlgebra:
    def test_self_commutator_vanishes(self):
        rng = random.Random(21)
        for _ in range(100):
            a = random_operator(rng)
            assert op_commutator(a, a).is_zero()

    def test_antisymmetry_and_bilinearity(self):
        rng = random.Random(22)
        for _ in range(100):
            a, b, c = (random_operator(rng) for _ in range(3))
            ab = op_commutator(a, b)
            ba = op_commutator(b, a)
            assert (ab + ba).is_zero()
            lin = op_commutator(a + b, c) - op_commutator(a, c) - op_commutator(b, c)
            assert lin.is_zero()

    def test_jacobi_identity(self):
        rng = random.Random(23)
        for _ in range(100):
            a, b, c = (random_operator(rng) for _ in range(3))
            total = (op_commutator(op_commutator(a, b), c)
                     + op_commutator(op_commutator(b, c), a)
                     + op_commutator(op_commutator(c, a), b))
            assert total.is_zero()


def kdv_lhs_poly():
    return pde.EQUATIONS["KdV"].jet_poly


def mkdv_lhs_poly():
    return pde.EQUATIONS["mKdV"].jet_poly


def ckdv_lhs_poly():
    return pde.EQUATIONS["CKdV"].jet_poly


class TestLocalPairs:
    def test_kdv_commutator_known_form(self):
        # frozen oracle (hand/CAS expansion): [L,T] = -(u_t + u_xxx/4 + 3/2 u u_x)
        K = op_commutator(*_lt(kdv_lax_pair()))
        assert set(K.terms) == {(0, 0, 0, 0)}
        assert K.terms[(0, 0, 0, 0)] == C(-1) * kdv_lhs_poly()

    def test_mkdv_commutator_known_form(self):
        # frozen oracle: [L,T] = -2 sigma (mKdV lhs) d_x;  order 1, not 0
        K = op_commutator(*_lt(mkdv_lax_pair()))
        assert set(K.terms) == {(1, 0, 0, 0)}
        assert K.terms[(1, 0, 0, 0)] == C(-2) * SIGMA * mkdv_lhs_poly()

    def test_ckdv_commutator_order_one_coefficient(self):
        # frozen oracle: the d_x coefficient is (sigma/w^2) * (CKdV lhs)
        K = op_commutator(*_lt(ckdv_lax_pair()))
        assert set(K.terms) == {(0, 0, 0, 0), (1, 0, 0, 0)}
        assert K.terms[(1, 0, 0, 0)] == SIGMA * F(-2) * ckdv_lhs_poly()

    @pytest.mark.parametrize("builder", [kdv_lax_pair, mkdv_lax_pair, ckdv_lax_pair])
    def test_exact_vanishing_after_substitution(self, builder):
        verdict = verify_lax_symbolic(builder())
        assert verdict.exact_zero
        assert verdict.residual.is_zero()

    def test_perturbed_pair_fails(self):
        pair = ckdv_lax_pair(t_perturbation=Fraction(1, 100))
        with pytest.raises(NotMultiplicationOperator):
            verify_lax_symbolic(pair)

    def test_t_slot_invariant(self):
        L = kdv_lax_pair().L
        bad_T = kdv_lax_pair().T + D.d("t")   # doubles the d_t coefficient
        with pytest.raises(ValueError):
            LaxPair(L, bad_T, pde.evolution_rhs("KdV"), "KdV")


def _lt(pair):
    return pair.L, pair.T


class TestExtendY:
    def test_extends_spatial_operator(self):
        L = ckdv_lax_pair().L
        got = extend_operator_y(L)
        assert got.terms[(0, 1, 0, 0)] == C(1)
        assert all(got.terms[k] == L.terms[k] for k in L.terms)

    def test_double_extension_rejected(self):
        L = extend_operator_y(ckdv_lax_pair().L)
        with pytest.raises(ValueError):
            extend_operator_y(L)

    def test_zero_operator(self):
        got = extend_operator_y(D({}))
        assert got == D.d("y")


class TestNumericBridge:
    def test_commutator_matches_operator_application(self):
        # evaluate [L,T] 1 numerically through the expression engine and
        # compare with the jet-level order-0 coefficient at the same jets
        pair = ckdv_lax_pair()
        K = op_commutator(pair.L, pair.T)
        rng = random.Random(31)
        X, T_ = Var("x"), Var("t")
        w_poly = ex.add(ex.Const(2),
                        ex.mul(ex.Const(Fraction(1, 3)), X),
                        ex.mul(ex.Const(Fraction(-1, 4)), T_),
                        ex.mul(ex.Const(Fraction(1, 7)), ex.pow_(X, 2)),
                        ex.mul(ex.Const(Fraction(1, 11)), ex.pow_(X, 3), T_),
                        ex.mul(ex.Const(Fraction(1, 17)), ex.pow_(X, 4)),
                        ex.mul(ex.Const(Fraction(-1, 13)), ex.pow_(X, 2),
                               ex.pow_(T_, 1)))
        one = ex.ONE
        lt = instantiate_and_apply(pair.T, w_poly, one)
        ltl = instantiate_and_apply(pair.L, w_poly, lt)
        tl = instantiate_and_apply(pair.L, w_poly, one)
        tlt = instantiate_and_apply(pair.T, w_poly, tl)
        for _ in range(5):
            x0, t0 = rng.uniform(-1, 1), rng.uniform(-1, 1)
            pt = EvaluationPoint({"x": x0, "t": t0})
            numeric = evaluate(ltl, pt) - evaluate(tlt, pt)
            jets = {}
            for key in {k for m, _ in K.terms[(0, 0, 0, 0)].monomials() for k, _ in m}:
                e = w_poly
                for _ in range(key[0]):
                    e = ex.differentiate(e, X)
                for _ in range(key[2]):
                    e = ex.differentiate(e, T_)
                jets[key] = evaluate(e, pt)
            symbolic = K.terms[(0, 0, 0, 0)].evaluate(jets, sigma_sign=1)
            assert abs(numeric - symbolic) <= 1e-10 * (1 + abs(symbolic))


class TestNumericLax:
    def test_two_plus_one_pair_on_exact_solution(self, params_fig4):
        w = tau.build_ckdv_solution(params_fig4).field
        rep = lax.verify_lax_numeric(
            lax.numeric_L_second_order(w), lax.numeric_T_ckdv2p1(w),
            testfns=lax.default_test_functions(2), n_points=30,
            cfg=QuadConfig(detour=1.0),
            exclude=make_pole_excluder(params_fig4), equation="CKdV-2p1")
        assert rep.relative <= 1e-5

    def test_cbs_pair_on_transformed_solution(self, params_fig4):
        u = pde.miura_forward(tau.build_mkdv_solution(params_fig4).field)
        rep = lax.verify_lax_numeric(
            lax.numeric_L_cbs(u), lax.numeric_T_cbs(u),
            testfns=lax.default_test_functions(2), n_points=30,
            cfg=QuadConfig(detour=1.0),
            exclude=make_pole_excluder(params_fig4), equation="CBS")
        assert rep.relative <= 1e-5

    def test_mcbs_pair(self, params_fig4):
        v = tau.build_mkdv_solution(params_fig4).field
        rep = lax.verify_lax_numeric(
            lax.numeric_L_second_order(v, modified=True), lax.numeric_T_mcbs(v),
            testfns=lax.default_test_functions(2), n_points=30,
            cfg=QuadConfig(detour=1.0),
            exclude=make_pole_excluder(params_fig4), equation="mCBS")
        assert rep.relative <= 1e-5

    def test_degenerate_dimensional_embedding(self):
        # the transverse-parameter-equals-wavenumber solution embeds the 1+1
        # soliton into the 2+1 system (its z = 0 section is exactly the 1+1
        # solution), so the 2+1 pair's commutator residual must match the 1+1
        # symbolic result (zero)
        peq = tau.SolitonParams(p=(1,), s=(2,), q=(1,))
        weq = tau.build_ckdv_solution(peq).field
        rep = lax.verify_lax_numeric(
            lax.numeric_L_second_order(weq), lax.numeric_T_ckdv2p1(weq),
            testfns=lax.default_test_functions(2), n_points=30,
            cfg=QuadConfig(detour=1.0), exclude=make_pole_excluder(peq, 0.2),
            equation="degenerate")
        assert rep.relative <= 1e-7
