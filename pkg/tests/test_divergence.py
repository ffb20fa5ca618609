import math
from fractions import Fraction

import pytest

from divlab.cayley import EXACT, AvoidantQuery, avoidant_distance, ball
from divlab.divergence import (
    LOWER_ESTIMATE,
    NOT_WITNESSED,
    POWER,
    POWER_LOG,
    WITNESSED,
    AllPairs,
    GrowthCurve,
    Sample,
    Sampled,
    contraction_profile,
    cyclic_divergence,
    dominates,
    extrinsic_profile,
    fit_growth,
    forbidden_radius,
    g1_pair_upper_bound,
    k_extendable,
    pair_divergence,
)
from divlab.errors import ConfigError, InsufficientData, InvalidQuery
from divlab.groups import make_h, make_model
from oracles import bfs_distance_two_sided

RS = range(1, 65)


def curve(name, fn):
    return GrowthCurve.synthetic(name, fn, RS)


def test_forbidden_radius():
    assert forbidden_radius(1, 3) == 3
    assert forbidden_radius(Fraction(1, 2), 3) == 2
    assert forbidden_radius(Fraction(1, 4), 2) == 1


def test_growth_curve_rows_and_order():
    c = GrowthCurve("cyclic", "G2[BS12]")
    c.add(Sample(1, 5, EXACT))
    c.add(Sample(2, None, "CapExceeded"))
    with pytest.raises(ValueError):
        c.add(Sample(2, 7, EXACT))
    rows = c.rows()
    assert [row["value"] for row in rows] == [5, "inf"]
    assert c.to_csv().splitlines()[0] == "experiment,model,rho,r,value,status,seed"


def test_extrinsic_profiles():
    fa = extrinsic_profile(make_h("FreeAbelian2"), 64)
    assert all(fa.lengths[n] == n for n in range(1, 65))
    assert fa.sandwich_ok()
    bs = extrinsic_profile(make_h("BS12"), 128)
    f = bs.h.f
    assert all(f(n) <= bs.lengths[n] for n in range(1, 129))
    assert bs.sandwich_ok()


def test_g1_pair_bound_matches_simple_cases():
    # same b-sign: climb to height R and back
    assert g1_pair_upper_bound(2, 0, 2, 0, 2) == 8
    # opposite sides of the b-axis
    assert g1_pair_upper_bound(0, 2, 0, -2, 2) == 8


@pytest.mark.parametrize("kind", ("FreeAbelian2", "BS12"))
def test_g1_pair_divergence_is_linear(kind):
    g1 = make_model(kind, 1)
    assert k_extendable(g1, 4)
    for r in (1, 2, 3):
        res = pair_divergence(g1, 1, r)
        assert res.status == EXACT
        assert res.value == 4 * r


def test_g1_pair_divergence_matches_plain_search():
    """Branch and bound against a direct max over every sphere pair."""
    g1 = make_model("FreeAbelian2", 1)
    r = 2
    sphere = sorted(ball(g1, r).sphere(r), key=repr)
    e = g1.identity()
    best = 0
    for i, x in enumerate(sphere):
        for y in sphere[i + 1:]:
            d = avoidant_distance(AvoidantQuery(e, r, g1.wrap(x), g1.wrap(y))).length
            best = max(best, d)
    assert pair_divergence(g1, 1, r).value == best


def test_tiny_forbidden_ball_removes_only_the_identity():
    g1 = make_model("FreeAbelian2", 1)
    res = pair_divergence(g1, Fraction(1, 4), 2)
    assert res.status == EXACT and res.value >= 4


@pytest.mark.parametrize("kind", ("FreeAbelian2", "BS12"))
def test_g2_pair_divergence_matches_oracle(kind):
    g2 = make_model(kind, 2)
    e = g2.top.identity
    sphere = sorted(ball(g2, 1).sphere(1), key=repr)

    def nbrs(p):
        for s in g2.letters:
            q = g2.step(p, s)
            if q != e:
                yield q

    best = max(bfs_distance_two_sided(x, y, nbrs, 20) for x in sphere for y in sphere)
    res = pair_divergence(g2, Fraction(1, 2), 1)
    assert res.status == EXACT and res.value == best


def test_g2_pair_divergence_policies():
    g2 = make_model("BS12", 2)
    res = pair_divergence(g2, Fraction(1, 2), 1)
    samp = pair_divergence(g2, Fraction(1, 2), 1, Sampled(3, 1))
    assert samp.status == LOWER_ESTIMATE and samp.value <= res.value
    assert pair_divergence(g2, Fraction(1, 2), 1, Sampled(3, 1)).value == samp.value
    with pytest.raises(InvalidQuery):
        pair_divergence(g2, 0, 1)
    assert isinstance(AllPairs(), AllPairs)


@pytest.mark.parametrize("kind", ("FreeAbelian2", "BS12"))
def test_cyclic_divergence_small(kind):
    g2 = make_model(kind, 2)
    res = cyclic_divergence(g2, "a2", 1)
    assert res.status == EXACT and 0 < res.value < 10
    for r in (1, 2, 3):
        res = cyclic_divergence(g2, "a2", r)
        assert res.sandwiched
    with pytest.raises(InvalidQuery):
        cyclic_divergence(g2, "b", 1)


def test_domination_examples():
    lin, sq, cube = curve("r", lambda r: r), curve("r2", lambda r: r * r), curve("r3", lambda r: r ** 3)
    sqlog = curve("r2log", lambda r: r * r * math.log2(r) if r > 1 else 0)
    d = dominates(lin, sq)
    assert d.verdict == WITNESSED and d.A == 1 and d.B <= 1
    assert dominates(sq, lin).verdict == NOT_WITNESSED
    assert dominates(sq, cube).verdict == WITNESSED
    assert dominates(cube, sq).verdict == NOT_WITNESSED
    assert dominates(sqlog, cube).verdict == WITNESSED
    assert dominates(cube, sqlog).verdict == NOT_WITNESSED
    same = dominates(sq, sq)
    assert (same.verdict, same.A, same.B, same.C) == (WITNESSED, 1, 0, 0)


def test_fits():
    fit = fit_growth(curve("r2", lambda r: r * r))
    assert abs(fit.exponent - 2) < 0.01 and not fit.degenerate
    fit = fit_growth(GrowthCurve.synthetic("r2log", lambda r: r * r * math.log2(r), range(2, 65)), POWER_LOG)
    assert abs(fit.exponent - 2) < 0.05
    assert fit_growth(curve("const", lambda r: 5)).degenerate
    short = GrowthCurve.synthetic("short", lambda r: r, range(1, 4))
    with pytest.raises(InsufficientData):
        fit_growth(short, POWER)
    with pytest.raises(ConfigError):
        fit_growth(curve("r", lambda r: r), "exp")


def test_contraction_profiles():
    g2 = make_model("BS12", 2)
    assert contraction_profile(g2, "a2", 3, 0, 1).samples == []
    prof = contraction_profile(g2, "a2", 4, 2, 1)
    assert {s["d"] for s in prof.samples} == {1, 2, 3, 4}
    assert all(s["diameter"] >= 0 for s in prof.samples)
    assert set(prof.monotone) == {"1/4", "1/2", "3/4"}
    again = contraction_profile(g2, "a2", 4, 2, 1)
    assert again.samples == prof.samples
    # on a flat direction the projections spread out
    flat = contraction_profile(make_model("FreeAbelian2", 1), "a0", 4, 2, 1)
    assert max(s["diameter"] for s in flat.samples) > 0
    for s in flat.samples:
        assert s["diameter"] <= 2 * s["R"] + 2 * s["d"]
