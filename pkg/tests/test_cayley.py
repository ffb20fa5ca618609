import random

import pytest

from divlab.cayley import (
    EXACT,
    AvoidantQuery,
    avoidant_distance,
    ball,
    bidirectional_distance,
    geodesic_word,
    membership,
    sphere_components,
    strip_distance,
    word_length,
)
from divlab.divergence import extrinsic_profile
from divlab.errors import BudgetExceeded
from divlab.groups import apply_word, make_h, make_model
from oracles import bfs_distance_two_sided, bs12_ball

KINDS = ("FreeAbelian2", "BS12")


def test_small_balls():
    model = make_model("BS12", 2)
    assert ball(model, 0).dist == {model.top.identity: 0}
    assert len(ball(model, 1)) == 1 + len(model.letters)


def test_ball_budget():
    with pytest.raises(BudgetExceeded):
        ball(make_model("BS12", 3), 6, cap=1000)


def test_parallel_ball_matches_serial():
    model = make_model("FreeAbelian2", 2)
    assert ball(model, 4, workers=2).dist == ball(model, 4).dist


def test_word_length_examples():
    for kind in KINDS:
        g2 = make_model(kind, 2)
        assert word_length(g2, g2.element("a0a0a0a2a2")) == 5
        assert word_length(g2, g2.identity()) == 0


def test_h_lengths_match_bfs_oracle():
    """|c^n| in BS(1,2) from the library agrees with a brute-force BFS over rewriting normal forms."""
    oracle = {nf[1]: d for nf, (d, _) in bs12_ball(8).items() if nf[0] == 0 and nf[2] == 0}
    prof = extrinsic_profile(make_h("BS12"), 64)
    for n in range(1, 65):
        if n in oracle:
            assert prof.lengths[n] == oracle[n]
        else:
            assert prof.lengths[n] > 8
    assert prof.lengths[8] == oracle[8] < 10


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("m", [1, 2, 3])
def test_astar_agrees_with_bfs_ball(kind, m):
    model = make_model(kind, m)
    cache = ball(model, 4)
    rng = random.Random(m)
    sample = rng.sample(sorted(cache.dist, key=repr), 150)
    for p in sample:
        g = model.wrap(p)
        assert word_length(model, g) == cache.dist[p]
        w = geodesic_word(model, g)
        assert len(w) == cache.dist[p]
        assert apply_word(model.identity(), w) == g


def test_bidirectional_distance_matches_ball():
    model = make_model("BS12", 2)
    cache = ball(model, 4)
    for p, d in list(cache.dist.items())[:: 97]:
        nbrs = lambda v: (model.step(v, s) for s in model.letters)  # noqa: E731
        assert bidirectional_distance(model.top.identity, p, nbrs) == d


def _oracle_avoidant(model, r, source, target, limit):
    inside = membership(model, r).inside

    def nbrs(p):
        for s in model.letters:
            q = model.step(p, s)
            if not inside(q):
                yield q
    return bfs_distance_two_sided(source.payload, target.payload, nbrs, limit)


def test_avoidant_examples():
    g2 = make_model("BS12", 2)
    e = g2.identity()
    a03, a23 = g2.element("a0a0a0"), g2.element("a2a2a2")
    res = avoidant_distance(AvoidantQuery(e, 3, a03, a23))
    assert res.status == EXACT and res.length >= 2
    assert res.length == _oracle_avoidant(g2, 3, a03, a23, res.length + 1)
    a02 = g2.element("a0a0")
    assert avoidant_distance(AvoidantQuery(e, 2, a02, a02)).length == 0
    x = g2.element("a1a2b")
    assert avoidant_distance(AvoidantQuery(e, 0, e, x)).length == word_length(g2, x)


@pytest.mark.parametrize("kind", KINDS)
def test_avoidant_and_strip_distances_match_restricted_bfs(kind):
    g2 = make_model(kind, 2)
    e = g2.identity()
    cache = ball(g2, 4)
    rng = random.Random(11)
    checked = 0
    for r in (2, 3):
        sphere = sorted(cache.sphere(r), key=repr)
        for _ in range(6):
            u, v = (g2.wrap(p) for p in rng.sample(sphere, 2))
            res = strip_distance(g2, e, r, u, v)
            assert res.status == EXACT
            assert apply_word(u, res.letters) == v
            assert len(res.letters) == res.length
            inside = membership(g2, r).inside
            walk = u
            for s in res.letters:
                walk = apply_word(walk, [s])
                assert not inside(walk.payload)
            if res.length <= 10:
                assert res.length == _oracle_avoidant(g2, r, u, v, res.length + 1)
                assert avoidant_distance(AvoidantQuery(e, r, u, v)).length == res.length
                checked += 1
    assert checked >= 6


def test_sphere_components():
    assert len(sphere_components(make_model("FreeAbelian2", 1), 2)) == 1
    assert len(sphere_components(make_model("FreeAbelian2", 2), 0)) == 1
    assert len(sphere_components(make_model("BS12", 2), 3)) == 1
