from fractions import Fraction as F

import pytest

from lasgap.certify import integral_optimum
from lasgap.instances import (
    balanced_gapknap_certificate,
    empty_hull_reciprocal_ok,
    gapknap_P,
    gen_empty_hull,
    gen_gapknap,
    gen_gapknap_augmented,
    gen_origin_indicator,
    scan_gapknap,
    svc_exclude,
    two_point_indicator,
)
from lasgap.lattice import enumerate_subsets
from lasgap.moment import lasserre_check, objective_value


def test_gapknap_closed_form():
    inst, cert = gen_gapknap(2, 2)
    assert gapknap_P(2, 2) == 64
    y = cert.yN.by_mask()
    assert y[1] == y[2] == F(4, 63) and y[3] == F(4, 127)
    assert sum(y) == 1
    assert inst.constraints[0].g0 == F(-1, 64)


def test_balanced_certificate_value():
    for n, k in ((2, 2), (4, 10), (6, 3)):
        inst, _ = gen_gapknap(n, k)
        cert = balanced_gapknap_certificate(n, k)
        assert objective_value(inst.objective, cert.yN) == F(1, k)


def test_empty_hull_reciprocal_n2():
    b = F(1, 8)
    assert -8 + F(16, 7) + F(8, 15) < 0
    assert empty_hull_reciprocal_ok(2, b)
    assert not empty_hull_reciprocal_ok(2, F(49, 100))
    inst, cert = gen_empty_hull(2, F(49, 100))
    assert cert is None and inst.m == 4


def test_svc_exclude():
    full, _ = gen_empty_hull(3)
    assert svc_exclude(3, enumerate_subsets(3, 3)) == full
    assert svc_exclude(3, []).m == 0
    inst = svc_exclude(2, [0], F(1, 4))
    feasible = [m for m in range(4) if all(g.value_table()[m] >= 0 for g in inst.constraints)]
    assert feasible == [1, 2, 3]
    with pytest.warns(UserWarning):
        assert svc_exclude(2, [1, 1]).m == 1
    with pytest.raises(ValueError):
        svc_exclude(2, [0], F(1, 2))


def test_origin_indicator():
    assert gen_origin_indicator(1).coeffs == {0: 1, 1: -1}
    for n in range(1, 6):
        t = gen_origin_indicator(n).value_table()
        assert t[0] == 1 and all(v == 0 for v in t[1:])


def test_two_point():
    f = two_point_indicator(3, 0b010, 0b101)
    t = f.value_table()
    assert t[0b010] == t[0b101] == 1 and sum(t) == 2
    with pytest.raises(ValueError):
        two_point_indicator(2, 1, 1)


def test_augmented_lift():
    inst, cert = gen_gapknap_augmented(2, 2)
    assert inst.n == 3 and integral_optimum(inst).value == 1
    y = cert.yN.by_mask()
    assert all(v == 0 for m, v in enumerate(y) if not m & 0b100)
    rep = lasserre_check(inst, cert.moments(), 1)
    assert rep.feasible
    # at t = 2 the shifted corner has one negative entry next to zeros
    hi = lasserre_check(inst, cert.moments(), 2)
    assert not hi.feasible and hi.matrices[1].witness["case"] == "zero-with-negative"


def test_scan_small():
    res = scan_gapknap(2, 2)
    assert res.threshold is not None
    assert res.lower_bound <= res.threshold <= res.upper_bound
    assert res.lower_bound == 9 and res.upper_bound == 64
    with pytest.raises(ValueError):
        scan_gapknap(2, 1)


def test_scan_closed_form_family():
    res = scan_gapknap(3, 2, family="closed-form")
    assert res.threshold is not None and res.threshold <= res.upper_bound
