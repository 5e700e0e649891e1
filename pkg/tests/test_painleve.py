from fractions import Fraction

import pytest

from integrable_lab import painleve, pde
from integrable_lab.painleve import (CompatibilityFailure, InterpolationUnstable,
                                     NoBalance, compatibility_check,
                                     leading_order, resonance_polynomial,
                                     run_painleve)
from integrable_lab.scalars import SIGMA, SigmaRational


class TestLeadingOrder:
    def test_w_form(self):
        lead = leading_order("W-CKdV")
        assert lead.alpha == -1
        # condition is monic: leading coefficient squared plus one
        assert lead.condition == {0: SigmaRational(1), 2: SigmaRational(1)}
        assert set(lead.roots) == {SIGMA, -SIGMA}

    def test_w_form_two_plus_one(self):
        lead = leading_order("W-CKdV-2p1")
        assert lead.alpha == -1
        assert lead.condition == {0: SigmaRational(1), 2: SigmaRational(1)}
        assert set(lead.roots) == {SIGMA, -SIGMA}

    def test_kdv_selftest(self):
        lead = leading_order("KdV")
        assert lead.alpha == -2
        assert lead.roots == [SigmaRational(-2)]

    def test_condition_independent_of_seed(self):
        conditions = {repr(sorted(leading_order("W-CKdV-2p1", seed=s).condition.items()))
                      for s in range(5)}
        assert len(conditions) == 1

    def test_no_balance_error(self):
        # a single-term "equation" cannot balance
        from integrable_lab.jetring import JetPolynomial
        eq = pde.EquationDescriptor("toy", "w", ("x", "t"), True,
                                    JetPolynomial.jet((3, 0, 0)))
        with pytest.raises(NoBalance):
            leading_order(eq)


EXPECTED_ROOTS = {
    "W-CKdV": [-1, 1, 3],
    "W-CKdV-2p1": [-1, 1, 2, 3],
    "KdV": [-1, 4, 6],
}


class TestResonances:
    @pytest.mark.parametrize("eq_id,roots", sorted(EXPECTED_ROOTS.items()))
    def test_integer_roots(self, eq_id, roots):
        lead = leading_order(eq_id)
        rp = resonance_polynomial(eq_id, lead)
        assert rp.roots == roots
        # the root count matches the expansion's arbitrary-function count,
        # i.e. the degree of the linearization polynomial
        assert len(rp.roots) == rp.degree

    def test_minus_one_always_resonates(self):
        for eq_id in EXPECTED_ROOTS:
            rp = resonance_polynomial(eq_id, leading_order(eq_id))
            assert -1 in rp.roots

    def test_monic_cubic_coefficients(self):
        # frozen oracle: (j+1)(j-1)(j-3) = j^3 - 3j^2 - j + 3
        rp = resonance_polynomial("W-CKdV", leading_order("W-CKdV"))
        assert rp.coefficients == [Fraction(3), Fraction(-1), Fraction(-3),
                                   Fraction(1)]

    def test_quartic_coefficients(self):
        # (j+1)(j-1)(j-2)(j-3) = j^4 - 5j^3 + 5j^2 + 5j - 6
        rp = resonance_polynomial("W-CKdV-2p1", leading_order("W-CKdV-2p1"))
        assert rp.coefficients == [Fraction(-6), Fraction(5), Fraction(5),
                                   Fraction(-5), Fraction(1)]

    def test_independent_of_psi_samples(self):
        polys = set()
        for seed in range(5):
            rp = resonance_polynomial("W-CKdV-2p1",
                                      leading_order("W-CKdV-2p1", seed=seed),
                                      seed=seed)
            polys.add(tuple(rp.coefficients))
        assert len(polys) == 1

    def test_both_leading_branches_same_resonances(self):
        lead = leading_order("W-CKdV-2p1")
        roots = []
        for branch in (0, 1):
            swapped = painleve.LeadingOrder(
                lead.equation, lead.alpha, lead.base_power, lead.condition,
                [lead.roots[branch], lead.roots[1 - branch]], lead.dominant,
                lead.psi_samples)
            rp = resonance_polynomial("W-CKdV-2p1", swapped)
            roots.append(rp.roots)
        assert roots[0] == roots[1] == [-1, 1, 2, 3]


class TestCompatibility:
    def test_w_form_arbitrary_at_1_and_3(self):
        lead = leading_order("W-CKdV")
        rep = compatibility_check("W-CKdV", lead, max_j=6, trials=20, strict=False)
        assert rep.resonances == [1, 3]
        assert rep.all_ok
        assert all(rep.worst(j) <= 1e-8 for j in rep.resonances)

    def test_two_plus_one_arbitrary_at_1_2_3(self):
        lead = leading_order("W-CKdV-2p1")
        rep = compatibility_check("W-CKdV-2p1", lead, max_j=6, trials=20,
                                  strict=False)
        assert rep.resonances == [1, 2, 3]
        assert rep.all_ok

    def test_kdv_selftest(self):
        lead = leading_order("KdV")
        rep = compatibility_check("KdV", lead, max_j=6, trials=20, strict=False)
        assert rep.resonances == [4, 6]
        assert rep.all_ok

    def test_both_branches_compatible(self):
        lead = leading_order("W-CKdV")
        for branch in (0, 1):
            rep = compatibility_check("W-CKdV", lead, max_j=4, trials=5,
                                      branch=branch, strict=False)
            assert rep.all_ok

    def test_negative_control_fails(self):
        # a dissipative perturbation keeps the resonances but must break the
        # arbitrariness (engine sensitivity check)
        eqp = pde.perturbed_kdv()
        lead = leading_order(eqp)
        rp = resonance_polynomial(eqp, lead)
        assert rp.roots == [-1, 4, 6]
        rep = compatibility_check(eqp, lead, rp, max_j=6, trials=5, strict=False)
        assert not rep.all_ok
        assert rep.witness["resonance"] == 6
        with pytest.raises(CompatibilityFailure):
            compatibility_check(eqp, lead, rp, max_j=6, trials=2, strict=True)


def test_extended_precision_recursion_path():
    # the near-threshold recheck reruns a trial in 40-digit arithmetic; make
    # sure that path stays healthy even though clean verdicts rarely hit it
    import random
    import mpmath as mp
    lead = leading_order("W-CKdV", seed=1)
    rp = resonance_polynomial("W-CKdV", lead, seed=1)
    w0 = lead.roots[0].to_complex(1)
    with mp.workdps(40):
        forcings, _ = painleve._run_trial(
            pde.EQUATIONS["W-CKdV"].jet_poly, lead.alpha, lead.base_power, w0,
            [j for j in rp.roots if j > 0], lead.dominant, 6,
            random.Random(5), 1e-8, dtype=object, mp_ctx=mp)
    assert set(forcings) == {1, 3}
    assert all(v <= 1e-20 for v in forcings.values())


def test_run_painleve_report_shape():
    rep = run_painleve("W-CKdV", trials=3, max_j=4)
    d = rep.to_dict()
    assert d["resonances"] == [-1, 1, 3]
    assert d["leading_order"]["alpha"] == -1
    assert d["compatibility"]["all_ok"]
