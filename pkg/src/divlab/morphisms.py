"""Retraction homomorphisms of the tower and the word-length lower bound built from them."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import LevelMismatch, UnsupportedLevel
from .groups import H_MODELS, GroupElement, GroupModel, descend, lowest_level

PSI_Z2 = "PsiZ2"
PHI_Z = "PhiZ"
PSI_H = "PsiH"
PSI_PRIME_H = "PsiPrimeH"
ALL_A_TO_Z = "AllAtoZ"


@dataclass(frozen=True)
class RetractionKind:
    """A retraction; ``param`` is j for PsiZ2 and k for PhiZ, unused otherwise."""

    kind: str
    param: int | None = None

    def __post_init__(self):
        if self.kind in (PSI_Z2, PHI_Z):
            if self.param is None or self.param < 2:
                raise UnsupportedLevel(f"{self.kind} needs a level >= 2, got {self.param!r}")
        elif self.kind not in (PSI_H, PSI_PRIME_H, ALL_A_TO_Z):
            raise ValueError(f"unknown retraction {self.kind!r}")

    @property
    def domain_level(self) -> int | None:
        """Level on which the map is a homomorphism (None: every level)."""
        if self.kind in (PSI_Z2, PHI_Z):
            return self.param
        if self.kind in (PSI_H, PSI_PRIME_H):
            return 1
        return None


def _payload_at(kind: RetractionKind, g: GroupElement):
    level = kind.domain_level
    if level is None:
        return g.model.m, g.payload
    if level > g.model.m:
        raise LevelMismatch(f"{kind.kind}({kind.param}) needs level {level}, element is in G_{g.model.m}")
    payload = descend(g.model, g.payload, level)
    if payload is None:
        raise LevelMismatch(f"element is not in the subgroup G_{level} where {kind.kind} is defined")
    return level, payload


def apply(kind: RetractionKind, g: GroupElement):
    """Image of g: an int (PhiZ, AllAtoZ), an int pair (PsiZ2) or an H payload (PsiH, PsiPrimeH)."""
    level, payload = _payload_at(kind, g)
    ops = g.model.level_ops(level)
    if kind.kind == ALL_A_TO_Z:
        return ops.abelian(payload)[0]
    if kind.kind == PSI_Z2:
        total = ops.abelian(payload)[0]
        top = sum(payload[1])
        return (total - top, top)
    if kind.kind == PHI_Z:
        return sum(payload[1])
    psi, psi_prime = ops.h_images(payload)
    return psi if kind.kind == PSI_H else psi_prime


def h_length_lower_bound(model: GroupModel, h_payload) -> int:
    """Lower bound on |h|_T for an element of H; exact over FreeAbelian2."""
    ops = H_MODELS[model.h.kind]
    return ops.length_lower_bound(h_payload, model.h.f)


def _stable_bound(model, level, payload):
    ops = model.level_ops(level)
    a, second, b = ops.abelian(payload)
    top = sum(payload[1]) if level > 1 else 0
    count = len(payload[1]) if level > 1 else 0
    # every generator moves (count, a - top, second, b) by at most one in total
    return count + abs(a - top) + abs(second) + abs(b)


def heuristic_lower_bound(g: GroupElement) -> int:
    return payload_lower_bound(g.model, g.payload)


def payload_lower_bound(model: GroupModel, payload) -> int:
    """Admissible lower bound on the word length of the element with this payload.

    The element is first pushed down to the smallest G_j containing it, which
    is harmless because each G_j sits isometrically in G_m.
    """
    level, low = lowest_level(model, payload)
    best = _stable_bound(model, level, low)
    if level == 1:
        ops = model.level_ops(1)
        psi, psi_prime = ops.h_images(low)
        b = abs(low[1])
        best = max(
            best,
            h_length_lower_bound(model, psi) + b,
            h_length_lower_bound(model, psi_prime) + b,
        )
    return best
