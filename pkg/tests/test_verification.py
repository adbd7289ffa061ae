"""
Unit tests for the theorem registry and the verification harness
"""

import numpy as np
import pytest

from conftest import scalar_field, vector_field
from src.geometry.errors import InstanceKindError, MissingAuxiliaryDataError
from src.geometry.manifold import VectorFieldSpec
from src.geometry.soliton import SolitonInstance
from src.verification.models import CheckRole, Verdict
from src.verification.theorems import THEOREM_CASES, parse_case_id, verify_theorem

TOL = 1e-6


def conclusions(report):
    return [check for check in report.checks if check.role is CheckRole.CONCLUSION]


def hypotheses(report):
    return [check for check in report.checks if check.role is CheckRole.HYPOTHESIS]


def constant(check, name):
    return next(c for c in check.constants if c.name == name)


@pytest.fixture
def hyp3_soliton(hyp3):
    """Hyperbolic space with X = 0 is a RBS with lambda = -2, rho = 0"""
    return SolitonInstance(hyp3, -2.0, 0.0, field=VectorFieldSpec.zero(hyp3))


# ===========================
# Registry
# ===========================


def test_registry_holds_all_cases():
    expected = {f"T3.{i}" for i in range(1, 8)} | {"S4.1", "S4.2", "S4.3", "S4.4"}
    expected |= {"G4.1", "G4.2", "G4.3"}
    assert set(THEOREM_CASES) == expected


def test_parse_case_id():
    case, clause = parse_case_id("T3.5(i)")
    assert case.case_id == "T3.5" and clause == "i"
    case, clause = parse_case_id(" G4.3 ")
    assert case.case_id == "G4.3" and clause is None
    assert THEOREM_CASES["G4.3"].clause_labels == ["a", "b"]


@pytest.mark.parametrize("case_id", ["T9.9", "T3.2(iv)", "S4.2(i)", "t3.2", ""])
def test_unknown_case_ids_rejected(case_id):
    with pytest.raises(KeyError):
        parse_case_id(case_id)


# ===========================
# Verdicts
# ===========================


def test_killing_soliton_on_hyperbolic_space(hyp3, hyp3_soliton):
    """T3.2: every factor is Einstein with mu_i = 0"""
    report = verify_theorem("T3.2", hyp3_soliton, hyp3.sample_grid(3), TOL)
    assert set(report.verdicts()) == {Verdict.PASS}
    assert len(hypotheses(report)) == 5
    assert [c.clause for c in conclusions(report)] == ["i", "ii", "iii"]
    for check in conclusions(report):
        index = check.name[1]
        stated = constant(check, f"mu{index} (stated)")
        fitted = constant(check, f"mu{index} (fitted)")
        assert abs(stated.mean) < 1e-9 and stated.spread < 1e-9
        assert abs(fitted.mean) < 1e-9 and fitted.spread < 1e-9
    assert report.ledger == []


def test_translation_along_third_factor_is_einstein(flat3):
    """T3.5(i) with X = d_z on flat space"""
    field = vector_field(flat3, [["0"], ["0"], ["1"]])
    instance = SolitonInstance(flat3, 0.0, 0.0, field=field)
    report = verify_theorem("T3.5(i)", instance, flat3.sample_grid(3), TOL)
    assert set(report.verdicts()) == {Verdict.PASS}
    assert {c.clause for c in report.checks} <= {None, "i"}
    assert [c.name for c in conclusions(report)] == ["M Einstein"]


def test_homothetic_field_on_flat_space(flat3):
    """T3.4 with X = x d_x + y d_y + z d_z: alpha = 1, lambda = 1"""
    field = vector_field(flat3, [["x"], ["y"], ["z"]])
    instance = SolitonInstance(flat3, 1.0, 0.0, field=field)
    report = verify_theorem("T3.4", instance, flat3.sample_grid(3), TOL)
    assert set(report.verdicts()) == {Verdict.PASS}
    conformal = next(c for c in report.checks if c.operation == "soliton.conformal_extract"
                     and c.role is CheckRole.HYPOTHESIS)
    assert constant(conformal, "alpha (fitted)").mean == pytest.approx(1.0)


def test_static_time_translation(mink):
    """S4.3(i) with X = d_t on Minkowski space"""
    field = vector_field(mink, [["0"], ["0"], ["1"]])
    instance = SolitonInstance(mink, 0.0, 0.0, field=field)
    report = verify_theorem("S4.3(i)", instance, mink.sample_grid(3), TOL)
    assert set(report.verdicts()) == {Verdict.PASS}


@pytest.fixture
def hyp3_dilation(hyp3):
    """X = d_x - y d_y - z d_z is Killing for dx^2 + e^2x (dy^2 + dz^2)"""
    field = vector_field(hyp3, [["1"], ["-y"], ["-z"]])
    return SolitonInstance(hyp3, -2.0, 0.0, field=field)


@pytest.fixture
def mink_dilation(mink):
    """X = x d_x + y d_y + t d_t is homothetic on Minkowski space: L_X g = 2 g"""
    field = vector_field(mink, [["x"], ["y"], ["t"]])
    return SolitonInstance(mink, 1.0, 0.0, field=field)


def test_factor_solitons_on_hyperbolic_space(hyp3, hyp3_dilation):
    """
    T3.1: M1 and M3 inherit solitons; X2 = -y d_y is not Killing on M2, so
    clause ii is skipped.
    """
    report = verify_theorem("T3.1", hyp3_dilation, hyp3.sample_grid(3), TOL)
    assert [c.verdict for c in hypotheses(report) if c.clause is None] == [Verdict.PASS]
    by_clause = {c.clause: c for c in conclusions(report)}
    assert by_clause["i"].verdict is Verdict.PASS
    assert by_clause["iii"].verdict is Verdict.PASS
    assert by_clause["ii"].verdict is Verdict.SKIP
    assert "X2 Killing on M2" in by_clause["ii"].note

    stated = constant(by_clause["iii"], "lambda3 + rho3 R3 (stated)")
    assert stated.minimum == pytest.approx(-np.exp(1.8))
    assert stated.maximum == pytest.approx(-np.exp(-1.8))
    assert Verdict.FLAG not in report.verdicts()


def test_einstein_factors_force_conformal_components(hyp3, hyp3_dilation):
    """T3.6: L_Xi gi = 2 phi_i gi with phi = 0, -1, -1"""
    report = verify_theorem("T3.6", hyp3_dilation, hyp3.sample_grid(3), TOL)
    assert set(report.verdicts()) == {Verdict.PASS}
    rows = conclusions(report)
    assert [c.name for c in rows] == ["X1 conformal on M1", "X2 conformal on M2",
                                      "X3 conformal on M3"]
    for check, phi in zip(rows, [0.0, -1.0, -1.0]):
        index = check.name[1]
        for kind in ("stated", "fitted"):
            value = constant(check, f"phi{index} ({kind})")
            assert value.mean == pytest.approx(phi, abs=1e-9)
            assert value.spread < 1e-9


def test_trivial_soliton_factor_cases_on_hyperbolic_space(hyp3, hyp3_soliton):
    for case_id in ["T3.1", "T3.6"]:
        report = verify_theorem(case_id, hyp3_soliton, hyp3.sample_grid(3), TOL)
        assert set(report.verdicts()) == {Verdict.PASS}, case_id
        assert [c.clause for c in conclusions(report)] == ["i", "ii", "iii"]


def test_gaussian_soliton_induces_factor_gradient_solitons(flat3):
    """T3.7 with u = |x|^2 / 2 and lambda = 1"""
    u = scalar_field(flat3, "(x^2 + y^2 + z^2) / 2")
    instance = SolitonInstance(flat3, 1.0, 0.0, potential=u)
    report = verify_theorem("T3.7", instance, flat3.sample_grid(3), TOL)
    assert set(report.verdicts()) == {Verdict.PASS}
    assert [c.name for c in conclusions(report)] == ["M1 is a gradient RBS",
                                                     "M3 is a gradient RBS"]
    for check in conclusions(report):
        index = check.name[1]
        assert constant(check, f"lambda{index} + rho{index} R{index} (stated)").mean == \
            pytest.approx(1.0)


def test_static_soliton_with_homothetic_field(mink, mink_dilation):
    """S4.1: M1 soliton and time-block identity hold; X2 = y d_y is not Killing on M2"""
    report = verify_theorem("S4.1", mink_dilation, mink.sample_grid(3), TOL)
    by_clause = {c.clause: c for c in conclusions(report)}
    assert by_clause["i"].name == "M1 is a RBS"
    assert by_clause["i"].verdict is Verdict.PASS
    assert by_clause["ii"].verdict is Verdict.SKIP
    assert by_clause["iii"].name == "time-block identity"
    assert by_clause["iii"].verdict is Verdict.PASS
    assert Verdict.FLAG not in report.verdicts()


@pytest.mark.parametrize("case_id", ["S4.2", "S4.4"])
def test_static_cases_with_homothetic_field(mink, mink_dilation, case_id):
    report = verify_theorem(case_id, mink_dilation, mink.sample_grid(3), TOL)
    assert set(report.verdicts()) == {Verdict.PASS}
    assert len(conclusions(report)) == 2
    assert report.ledger == []


def test_static_cases_with_zero_field(mink):
    instance = SolitonInstance(mink, 0.0, 0.0, field=VectorFieldSpec.zero(mink))
    for case_id in ["S4.1", "S4.2", "S4.4"]:
        report = verify_theorem(case_id, instance, mink.sample_grid(3), TOL)
        assert set(report.verdicts()) == {Verdict.PASS}, case_id


@pytest.fixture
def desitter_soliton(desitter):
    """de Sitter has Ric = 2 g, so X = 0 with lambda = 2 is a RBS"""
    return SolitonInstance(desitter, 2.0, 0.0, field=VectorFieldSpec.zero(desitter))


def test_grw_time_block_sign_on_de_sitter(desitter, desitter_soliton):
    """
    G4.1: the printed time term evaluates to -2 where lambda = 2; the M2
    combination also misses, while clause iii holds.
    """
    report = verify_theorem("G4.1", desitter_soliton, desitter.sample_grid(3), TOL)
    assert [c.verdict for c in hypotheses(report)] == [Verdict.PASS, Verdict.PASS]
    by_clause = {c.clause: c for c in conclusions(report)}
    assert by_clause["i"].verdict is Verdict.FLAG
    assert by_clause["ii"].verdict is Verdict.FLAG
    assert by_clause["iii"].verdict is Verdict.PASS

    ledger = {entry.identity: entry for entry in report.ledger}
    assert set(ledger) == {"G4.1(i): time-block identity", "G4.1(ii): M2 is a RBS"}
    time_block = ledger["G4.1(i): time-block identity"]
    assert time_block.oracle_value == pytest.approx(-2.0)
    assert time_block.closed_form_value == pytest.approx(2.0)
    assert time_block.ratio == pytest.approx(-1.0)
    assert time_block.abs_diff == pytest.approx(4.0)

    second = ledger["G4.1(ii): M2 is a RBS"]
    assert second.oracle_value == pytest.approx(0.0, abs=1e-9)
    assert second.closed_form_value == pytest.approx(np.exp(1.8) - 1.0)
    assert second.worst_point["t"] == pytest.approx(0.9)


def test_grw_conformal_case_flags_on_de_sitter(desitter, desitter_soliton):
    """G4.2: the stated mu2 and mu3 inherit the time-term sign and miss Ric2 = Ric3 = 0"""
    report = verify_theorem("G4.2", desitter_soliton, desitter.sample_grid(3), TOL)
    assert set(c.verdict for c in hypotheses(report)) == {Verdict.PASS}
    assert [(c.name, c.verdict) for c in conclusions(report)] == [
        ("M2 Einstein", Verdict.FLAG), ("M3 Einstein", Verdict.FLAG)]

    ledger = {entry.identity: entry for entry in report.ledger}
    assert set(ledger) == {"G4.2: M2 Einstein", "G4.2: M3 Einstein"}
    assert ledger["G4.2: M2 Einstein"].closed_form_value == \
        pytest.approx(-3.0 * np.exp(1.8) - 1.0)
    assert ledger["G4.2: M3 Einstein"].closed_form_value == pytest.approx(-4.0 * np.exp(1.8))
    for entry in ledger.values():
        assert entry.oracle_value == pytest.approx(0.0, abs=1e-9)
        assert entry.ratio == pytest.approx(0.0, abs=1e-9)


def test_failed_hypothesis_skips_dependent_conclusions(hyp3):
    """With lambda = -1 the soliton equation fails, so no conclusion is judged"""
    instance = SolitonInstance(hyp3, -1.0, 0.0, field=VectorFieldSpec.zero(hyp3))
    report = verify_theorem("T3.2", instance, hyp3.sample_grid(3), TOL)

    rbs = next(c for c in report.checks if c.name == "M is a RBS")
    assert rbs.verdict is Verdict.SKIP
    assert rbs.note.startswith("hypothesis not satisfied")
    assert rbs.stats.max_abs > TOL

    rows = conclusions(report)
    assert len(rows) == 3
    for check in rows:
        assert check.verdict is Verdict.SKIP
        assert check.stats is None
        assert check.note.startswith("hypothesis failed: ")
        assert "M is a RBS" in check.note
    assert Verdict.FLAG not in report.verdicts()
    assert report.ledger == []


def test_skip_notes_list_clause_hypotheses(rand_riemann):
    """
    Neither the soliton equation nor HessBar h = psi gbar holds; clause iii has
    no hypotheses of its own, so only the shared failure is named there.
    """
    instance = SolitonInstance(rand_riemann, 0.0, 0.0, field=VectorFieldSpec.zero(rand_riemann))
    report = verify_theorem("T3.2", instance, rand_riemann.sample_grid(3), TOL)
    by_clause = {c.clause: c for c in conclusions(report)}
    assert all(c.verdict is Verdict.SKIP for c in by_clause.values())
    assert "HessBar h = psi gbar" in by_clause["i"].note
    assert "HessBar h = psi gbar" not in by_clause["iii"].note


def test_conclusion_flags_enter_the_ledger(desitter):
    """G4.3(a) on de Sitter: Hess e^t = -e^t g, the printed f' g has the opposite sign"""
    u = scalar_field(desitter, "exp(t)")
    instance = SolitonInstance(desitter, 3.0, 0.0, potential=u)
    report = verify_theorem("G4.3(a)", instance, desitter.sample_grid(3), TOL)

    assert [c.verdict for c in hypotheses(report)] == [Verdict.PASS]
    rows = conclusions(report)
    assert [c.verdict for c in rows] == [Verdict.FLAG] * 3
    assert len(report.ledger) == 3
    for entry in report.ledger:
        assert entry.identity.startswith("G4.3(a): Hess u = f' g on block")
        assert entry.ratio == pytest.approx(-1.0)


def test_gradient_hypothesis_fails_on_de_sitter(desitter):
    u = scalar_field(desitter, "exp(t)")
    instance = SolitonInstance(desitter, 3.0, 0.0, potential=u)
    report = verify_theorem("G4.3(b)", instance, desitter.sample_grid(3), TOL)
    gradient = next(c for c in report.checks if c.name == "M is a gradient RBS")
    assert gradient.verdict is Verdict.SKIP
    assert [c.verdict for c in conclusions(report)] == [Verdict.SKIP]


def test_report_is_deterministic(hyp3, hyp3_soliton):
    grid = hyp3.sample_grid(3)
    first = verify_theorem("T3.3", hyp3_soliton, grid, TOL).model_dump_json()
    second = verify_theorem("T3.3", hyp3_soliton, grid, TOL).model_dump_json()
    assert first == second


# ===========================
# Errors
# ===========================


def test_kind_mismatch(mink):
    instance = SolitonInstance(mink, 0.0, 0.0, field=VectorFieldSpec.zero(mink))
    with pytest.raises(InstanceKindError):
        verify_theorem("T3.2", instance, mink.sample_grid(2), TOL)


def test_gradient_case_needs_potential(hyp3, hyp3_soliton):
    with pytest.raises(MissingAuxiliaryDataError):
        verify_theorem("T3.7", hyp3_soliton, hyp3.sample_grid(2), TOL)


def test_vector_case_needs_field(flat3):
    instance = SolitonInstance(flat3, 1.0, 0.0, potential=scalar_field(flat3, "x"))
    with pytest.raises(MissingAuxiliaryDataError):
        verify_theorem("T3.2", instance, flat3.sample_grid(2), TOL)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
