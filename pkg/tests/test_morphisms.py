import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divlab.cayley import ball
from divlab.errors import LevelMismatch, UnsupportedLevel
from divlab.groups import H_MODELS, make_model
from divlab.morphisms import (
    ALL_A_TO_Z,
    PHI_Z,
    PSI_H,
    PSI_Z2,
    RetractionKind,
    apply,
    heuristic_lower_bound,
    payload_lower_bound,
)

KINDS = ("FreeAbelian2", "BS12")


def test_psi_and_phi_examples():
    for kind in KINDS:
        g2 = make_model(kind, 2)
        assert apply(RetractionKind(PSI_Z2, 2), g2.element("a0a0a0a2a2")) == (3, 2)
        assert apply(RetractionKind(PHI_Z, 2), g2.element("a0" * 5)) == 0
        e = g2.identity()
        assert apply(RetractionKind(PSI_Z2, 2), e) == (0, 0)
        assert apply(RetractionKind(PHI_Z, 2), e) == 0
        assert apply(RetractionKind(ALL_A_TO_Z), e) == 0


def test_retraction_levels():
    with pytest.raises(UnsupportedLevel):
        RetractionKind(PSI_Z2, 1)
    g1 = make_model("BS12", 1)
    with pytest.raises(LevelMismatch):
        apply(RetractionKind(PHI_Z, 2), g1.element("a0"))
    g2 = make_model("BS12", 2)
    with pytest.raises(LevelMismatch):
        apply(RetractionKind(PSI_H), g2.element("a2"))


def test_lower_bound_examples():
    g2 = make_model("FreeAbelian2", 2)
    assert heuristic_lower_bound(g2.element("a0a0a0a2a2")) == 5
    assert heuristic_lower_bound(g2.identity()) == 0
    g1 = make_model("BS12", 1)
    assert heuristic_lower_bound(g1.element("a0" * 4 + "a1" * 6)) >= g1.h.f(6)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("m", [1, 2, 3])
def test_lower_bound_is_admissible(kind, m):
    model = make_model(kind, m)
    cache = ball(model, 4 if m < 3 else 3)
    for payload, d in cache.dist.items():
        assert payload_lower_bound(model, payload) <= d


G3 = make_model("BS12", 3)
WORDS = st.lists(st.sampled_from(G3.letters), max_size=12)


@settings(max_examples=150, deadline=None)
@given(WORDS, WORDS)
def test_integer_retractions_are_homomorphisms(u, v):
    x, y = G3.element(u), G3.element(v)
    for kind in (RetractionKind(ALL_A_TO_Z), RetractionKind(PHI_Z, 3)):
        assert apply(kind, x * y) == apply(kind, x) + apply(kind, y)
    p, q = apply(RetractionKind(PSI_Z2, 3), x), apply(RetractionKind(PSI_Z2, 3), y)
    assert apply(RetractionKind(PSI_Z2, 3), x * y) == (p[0] + q[0], p[1] + q[1])


G1 = make_model("BS12", 1)
G1_WORDS = st.lists(st.sampled_from(G1.letters), max_size=12)


@settings(max_examples=150, deadline=None)
@given(G1_WORDS, G1_WORDS)
def test_h_retraction_is_a_homomorphism(u, v):
    x, y = G1.element(u), G1.element(v)
    px, py = apply(RetractionKind(PSI_H), x), apply(RetractionKind(PSI_H), y)
    pxy = apply(RetractionKind(PSI_H), x * y)
    assert pxy == H_MODELS["BS12"].mul(px, py)
