import random

import pytest

from divlab.cayley import ball, word_length
from divlab.errors import InvalidSphere
from divlab.groups import apply_word, make_model
from divlab.paths import (
    INSIDE,
    OUTSIDE_BY_HEURISTIC,
    ConstantLedger,
    WordPath,
    a0_detour,
    comb_to_axis,
    g1_pair_path,
    h_geodesic,
    p_path,
    p_path_report,
    product_detour,
    product_detour_report,
    q_path_report,
    validate,
)
from oracles import bs12_ball

KINDS = ("FreeAbelian2", "BS12")


def test_validate_examples():
    g2 = make_model("BS12", 2)
    e = g2.identity()
    r = 3
    start = g2.power("a0", r)
    rep = validate(WordPath(start, ()), e, r)
    assert rep.valid and rep.length == 0
    rep = validate(WordPath(start, ("a0",) * r), e, r)
    assert rep.valid
    assert set(rep.verdicts) == {OUTSIDE_BY_HEURISTIC}
    rep = validate(WordPath(g2.gen("a1"), ("A1", "a2")), e, 1)
    assert not rep.avoids
    assert rep.verdicts[1] == INSIDE and rep.first_inside == 1


def test_length_bound_enforced():
    g2 = make_model("FreeAbelian2", 2)
    rep = validate(WordPath(g2.power("a0", 2), ("a0",) * 4), g2.identity(), 2, length_bound=3)
    assert rep.avoids and not rep.within_bound and not rep.valid


def test_h_geodesics_are_geodesic():
    oracle = {nf[1]: d for nf, (d, _) in bs12_ball(8).items() if nf[0] == 0 and nf[2] == 0}
    for n, d in oracle.items():
        if n > 0:
            assert len(h_geodesic("BS12", n)) == d
    assert h_geodesic("FreeAbelian2", 5) == ("c",) * 5


@pytest.mark.parametrize("kind", KINDS)
def test_p_and_q_paths(kind):
    g3 = make_model(kind, 3)
    for m in (2, 3):
        for n in (1, 2, 3):
            for eps in (1, -1):
                path = p_path(g3, m, n, eps)
                assert path.end == g3.power(f"a{m}", eps) * g3.power("a0", 2 * n)
                assert p_path_report(g3, m, n, eps).valid
            assert q_path_report(g3, m, n, n).valid
            assert q_path_report(g3, m, n, -n).valid


def test_ledger_constants_are_monotone():
    for kind in KINDS:
        led = ConstantLedger.for_model(kind)
        assert led.C3 == 10
        for m in range(2, 7):
            assert led.M[m + 1] >= led.M[m] and led.N[m + 1] >= led.N[m] and led.B[m + 1] >= led.B[m]


@pytest.mark.parametrize("kind", KINDS)
def test_product_detour(kind):
    g1 = make_model(kind, 1)
    for n in (1, 2, 4):
        x, y = g1.power("a0", n), g1.power("a0", -n)
        rep = product_detour_report(g1, x, y)
        assert rep.valid and rep.length <= 8 * n
        assert "b" in product_detour(g1, x, y).letters
    x = g1.power("b", 3)
    rep = product_detour_report(g1, x, x)
    assert rep.valid and rep.length <= 6
    with pytest.raises(InvalidSphere):
        product_detour(g1, g1.power("a0", 2), g1.power("a0", 3))


@pytest.mark.parametrize("kind", KINDS)
def test_g1_pair_paths_on_spheres(kind):
    g1 = make_model(kind, 1)
    cache = ball(g1, 4)
    rng = random.Random(5)
    for r in (2, 3, 4):
        sphere = sorted(cache.sphere(r), key=repr)
        for _ in range(20):
            x, y = (g1.wrap(p) for p in rng.sample(sphere, 2))
            path = g1_pair_path(g1, x, y, r)
            assert path.end == y
            assert validate(path, g1.identity(), r).avoids
            assert path.length <= 8 * r


@pytest.mark.parametrize("kind", KINDS)
def test_comb_examples(kind):
    g2 = make_model(kind, 2)
    res = comb_to_axis(g2, g2.power("a0", 3), 3)
    assert res.path.length == 0 and res.report.valid
    res = comb_to_axis(g2, g2.power("a2", 3), 3)
    assert res.report.valid
    assert res.path.end == g2.power("a0", 3 * res.sigma)
    g1 = make_model(kind, 1)
    res = comb_to_axis(g1, g1.power("b", 3), 3)
    assert res.report.valid


@pytest.mark.parametrize("kind", KINDS)
def test_combs_on_random_sphere_points(kind):
    g3 = make_model(kind, 3)
    cache = ball(g3, 3)
    rng = random.Random(9)
    for r in (2, 3):
        for p in rng.sample(sorted(cache.sphere(r), key=repr), 8):
            x = g3.wrap(p)
            res = comb_to_axis(g3, x, r)
            assert res.report.valid, res.report.to_json()
            assert word_length(g3, x) == r


def test_a0_detour():
    g1 = make_model("BS12", 1)
    e = g1.identity()
    far = WordPath(g1.power("b", 5), ("a0",) * 4)
    assert a0_detour(g1, far, e, 4) is far
    r = 3
    alpha = WordPath(g1.power("a0", -r), ("a0",) * (2 * r))
    beta = a0_detour(g1, alpha, e, r)
    assert beta.end == alpha.end
    rep = validate(beta, e, -(-r // 2), length_bound=11 * alpha.length)
    assert rep.valid
    single = WordPath(g1.power("a0", 2), ())
    assert a0_detour(g1, single, e) is single
    assert apply_word(alpha.base, beta.letters) == alpha.end
