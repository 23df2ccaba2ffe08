import numpy as np
import pytest

from sparsehm import attributes as at
from sparsehm.attributes import Attribute, MeasureUnderTest, Orientation
from sparsehm.errors import ParameterError
from sparsehm.mpmf import power_mean

M = at.builtin_measures()
SI, SNE, GI, SK = M["SI"], M["SNE"], M["GI"], M["SK"]
NEG_SI = MeasureUnderTest("-SI", lambda x: -at.si_values(x))
MEAN = MeasureUnderTest("mean", lambda x: power_mean(x, 1.0))


def assert_certified(m, v):
    assert v.holds is False and v.counterexample is not None
    assert at.recheck(m, v)
    cx = v.counterexample
    assert at.Counterexample.from_json(cx.to_json()) == cx


class TestNonnegativity:
    @pytest.mark.parametrize("m", [SI, SNE, GI, SK], ids=lambda m: m.name)
    def test_holds(self, m):
        assert at.check_nonnegativity(m, 2000).holds

    def test_negated_si_fails(self):
        v = at.check_nonnegativity(NEG_SI, 100)
        assert_certified(NEG_SI, v)
        assert v.trials == 1


class TestRobinHood:
    def test_sne_holds_at_10k(self):
        v = at.check_robin_hood(SNE, 10_000)
        assert v.holds and v.trials == 10_000

    def test_si_fails_quickly(self):
        v = at.check_robin_hood(SI, 100)
        assert v.trials <= 100
        assert_certified(SI, v)

    def test_si_oriented_holds(self):
        # with SI read as lower-is-sparser the transfer lowers sparsity
        assert at.check_robin_hood(SI, 2000, oriented=True).holds

    def test_gi_holds(self):
        assert at.check_robin_hood(GI, 2000).holds


class TestScaling:
    @pytest.mark.parametrize("m", [SI, SNE, GI, SK], ids=lambda m: m.name)
    def test_holds(self, m):
        assert at.check_scaling(m, 2000).holds

    def test_mean_fails(self):
        assert_certified(MEAN, at.check_scaling(MEAN, 100))


class TestRisingTide:
    def test_sne_holds(self):
        assert at.check_rising_tide(SNE, 2000).holds

    def test_si_fails(self):
        assert_certified(SI, at.check_rising_tide(SI, 100))

    def test_sk_holds(self):
        assert at.check_rising_tide(SK, 2000).holds


class TestCloning:
    @pytest.mark.parametrize("m", [SI, SNE, GI, SK], ids=lambda m: m.name)
    def test_holds(self, m):
        assert at.check_cloning(m, 1000).holds


class TestBillGates:
    @pytest.mark.parametrize("m", [SI, SNE], ids=lambda m: m.name)
    def test_fails(self, m):
        assert_certified(m, at.check_bill_gates(m, 200))

    def test_sk_exists_holds(self):
        assert at.check_bill_gates(SK, 200, quantifier="exists").holds

    def test_sk_forall_fails(self):
        # growing an entry past the point where it dominates lowers SK again
        assert_certified(SK, at.check_bill_gates(SK, 200))

    def test_bad_quantifier(self):
        with pytest.raises(ParameterError):
            at.check_bill_gates(SK, 10, quantifier="some")


class TestBabies:
    def test_sne_holds(self):
        assert at.check_babies(SNE, 2000).holds

    def test_si_fails(self):
        v = at.check_babies(SI, 10)
        assert_certified(SI, v)
        assert v.counterexample.lhs == 0.0

    def test_gi_holds(self):
        assert at.check_babies(GI, 2000).holds

    def test_no_zero_limit_is_inconclusive(self):
        m = MeasureUnderTest("nozero", at.sk_values)
        v = at.check_babies(m, 10)
        assert v.holds is None and v.mark == "?" and v.counterexample is None


def test_trials_must_be_positive():
    with pytest.raises(ParameterError):
        at.check_scaling(SI, 0)


def test_recheck_needs_counterexample():
    with pytest.raises(ParameterError):
        at.recheck(SNE, at.check_scaling(SNE, 5))


def test_counterexamples_violate_beyond_tolerance():
    for m in (SI, SNE):
        table = at.attribute_table([m], trials=300, seed=3)
        for v in table.rows[m.name].values():
            if v.holds is False:
                assert at.recheck(m, v)


def test_orientation_tags():
    assert SI.orientation is Orientation.LOWER_IS_SPARSER
    assert all(M[n].orientation is Orientation.HIGHER_IS_SPARSER for n in ("SNE", "GI", "SK", "PQ"))


class TestTable:
    def test_table_one(self):
        t = at.attribute_table([SI, SNE], trials=10_000, seed=0)
        assert t.marks("SI") == list("✓✗✓✗✓✗✗")
        assert t.marks("SNE") == list("✓✓✓✓✓✗✓")
        for name, m in (("SI", SI), ("SNE", SNE)):
            for v in t.rows[name].values():
                if v.holds is False:
                    assert at.recheck(m, v)

    def test_empty(self):
        t = at.attribute_table([], trials=10)
        assert t.rows == {} and t.csv_rows() == [["measure", "attribute", "holds", "trials", "counterexample"]]
        assert t.render_text().splitlines()[0].startswith("Measure")

    def test_reproducible_and_parallel(self):
        a = at.attribute_table([SK, GI], trials=200, seed=7)
        b = at.attribute_table([SK, GI], trials=200, seed=7, jobs=4)
        assert a.csv_rows() == b.csv_rows() and a.render_text() == b.render_text()

    def test_seed_changes_certificates(self):
        a = at.attribute_table([SI], trials=50, seed=1).rows["SI"][Attribute.D1].counterexample
        b = at.attribute_table([SI], trials=50, seed=2).rows["SI"][Attribute.D1].counterexample
        assert a != b

    def test_render(self):
        text = at.attribute_table([SI, SNE], trials=50).render_text()
        lines = text.splitlines()
        assert lines[0].split() == ["Measure", "Nonneg", "D1", "D2", "D3", "D4", "P1", "P2"]
        assert lines[2].split()[0] == "SI" and lines[3].split()[0] == "SNE"
