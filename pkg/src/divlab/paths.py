"""Explicit avoidant paths: the P/Q recursion, combs, product and b-commuting detours,
and a validator certifying avoidance and length bounds."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

from .cayley import BallCache, bidirectional_path, geodesic_word, guide_ball, membership, word_length
from .errors import InvalidSphere, NoGeodesicSpelling, UnsupportedLevel
from .groups import (
    H_MODELS,
    GroupElement,
    GroupModel,
    apply_word,
    descend,
    invert_letter,
    invert_word,
    make_model,
)
from .morphisms import payload_lower_bound

EXACT_BALL_RADIUS = 5  # largest inner ball enumerated for exact membership

OUTSIDE_BY_HEURISTIC = "OutsideByHeuristic"
OUTSIDE_BY_EXACT = "OutsideByExact"
INSIDE = "Inside"
UNCERTIFIED = "Uncertified"


@dataclass(frozen=True)
class WordPath:
    base: GroupElement
    letters: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(self.letters))

    @property
    def model(self) -> GroupModel:
        return self.base.model

    def __len__(self):
        return len(self.letters)

    @property
    def length(self) -> int:
        return len(self.letters)

    def vertex_payloads(self) -> Iterator:
        model = self.model
        p = self.base.payload
        yield p
        for s in self.letters:
            p = model.step(p, s)
            yield p

    def vertices(self) -> list[GroupElement]:
        return [self.model.wrap(p) for p in self.vertex_payloads()]

    @property
    def end(self) -> GroupElement:
        return apply_word(self.base, self.letters)

    def reversed(self) -> "WordPath":
        return WordPath(self.end, tuple(invert_word(self.letters)))

    def then(self, letters: Sequence[str]) -> "WordPath":
        return WordPath(self.base, self.letters + tuple(letters))

    def to_json(self) -> dict:
        return {"base": self.base.key, "letters": list(self.letters), "length": self.length}


# ---------------------------------------------------------------------------
# constants


C2 = 8  # product detour: at most 8n
C3 = C2 + 2


@dataclass(frozen=True)
class ConstantLedger:
    """Explicit constants for the upper-bound constructions of one H model."""

    C1: Fraction
    C3: int
    M: dict
    N: dict
    R: dict
    B: dict
    A: dict

    @classmethod
    def for_model(cls, model_or_kind, top: int = 8) -> "ConstantLedger":
        kind = model_or_kind if isinstance(model_or_kind, str) else model_or_kind.h.kind
        return _ledger(kind, top)

    def f(self, x):
        return _f(self.kind_of_c1, x)

    @property
    def kind_of_c1(self):
        return "FreeAbelian2" if self.C1 == 1 else "BS12"

    def p_bound(self, m: int, r: int, f) -> Fraction:
        M = self.M[m]
        return M * r ** (m - 2) * (f(M * r) + 1)

    def q_bound(self, m: int, r: int, f) -> Fraction:
        N = self.N[m]
        return N * r ** (m - 1) * (f(N * r) + 1)

    def comb_bound(self, m: int, r: int, f) -> Fraction:
        B = self.B[max(m, 2)]
        if m <= 2:
            return B * r * r + B * r
        return B * r ** (m - 1) * (f(B * r) + 1)


@lru_cache(maxsize=None)
def _ledger(kind: str, top: int) -> ConstantLedger:
    c1 = make_model(kind, 1).h.extrinsic_profile_constant
    M = {2: max(c1 + 1, Fraction(2))}
    N = {}
    for m in range(2, top + 1):
        N[m] = max(2 ** (m - 2) * M[m], 2 * M[m]) + 7
        M[m + 1] = 2 ** (m - 1) * N[m] + 1
    R = {}
    B = {}
    A = {}
    for m in range(2, top + 1):
        R[m] = max(4 * C3, 4 ** m * max(M[i] for i in range(2, m + 1))) + 1
        B[m] = R[m] + 7
        A[m] = 2 * B[m] + 2 * C3
    return ConstantLedger(c1, C3, M, N, R, B, A)


def _f(kind, x):
    return make_model(kind, 1).h.f(x)


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    start: str
    end: str
    center: str
    radius: int
    length: int
    length_bound: float | None
    verdicts: list[str] = field(repr=False)
    expected_end: str | None = None

    @property
    def counts(self) -> dict:
        out: dict = {}
        for v in self.verdicts:
            out[v] = out.get(v, 0) + 1
        return out

    @property
    def avoids(self) -> bool:
        return all(v in (OUTSIDE_BY_HEURISTIC, OUTSIDE_BY_EXACT) for v in self.verdicts)

    @property
    def within_bound(self) -> bool:
        return self.length_bound is None or self.length <= self.length_bound

    @property
    def endpoint_ok(self) -> bool:
        return self.expected_end is None or self.expected_end == self.end

    @property
    def valid(self) -> bool:
        return self.avoids and self.within_bound and self.endpoint_ok

    @property
    def first_inside(self) -> int | None:
        for i, v in enumerate(self.verdicts):
            if v == INSIDE:
                return i
        return None

    def to_json(self) -> dict:
        return {
            "start": self.start,
            "end": self.end,
            "expected_end": self.expected_end,
            "center": self.center,
            "radius": self.radius,
            "length": self.length,
            "length_bound": None if self.length_bound is None else float(self.length_bound),
            "counts": self.counts,
            "avoids": self.avoids,
            "within_bound": self.within_bound,
            "valid": self.valid,
        }


def _inside_test(model: GroupModel, r: int, cache: BallCache | None = None):
    """Exact predicate |v| < r on payloads: a ball lookup when small enough, else a per-vertex search."""
    if r - 1 <= EXACT_BALL_RADIUS or (cache is not None and cache.radius >= r - 1):
        return membership(model, r, cache).inside
    guide = guide_ball(model)

    def inside(q):
        return word_length(model, model.wrap(q), cache=guide) < r

    return inside


def validate(
    path: WordPath,
    center: GroupElement,
    r: int,
    length_bound=None,
    exact: bool = True,
    expected_end: GroupElement | None = None,
    cache: BallCache | None = None,
) -> ValidationReport:
    """Certify that every vertex of ``path`` lies outside the open ball B(center, r).

    Each vertex is first tried against the retraction lower bound; when that is
    inconclusive and ``exact`` is set, membership in the exact ball decides.
    """
    model = path.model
    top = model.top
    shift = top.inv(center.payload)
    trivial_center = center.payload == top.identity
    inner = _inside_test(model, r, cache) if exact and r > 0 else None
    verdicts = []
    memo: dict = {}
    for p in path.vertex_payloads():
        hit = memo.get(p)
        if hit is None:
            q = p if trivial_center else top.mul(shift, p)
            if r <= 0 or payload_lower_bound(model, q) >= r:
                hit = OUTSIDE_BY_HEURISTIC
            elif inner is None:
                hit = UNCERTIFIED
            else:
                hit = INSIDE if inner(q) else OUTSIDE_BY_EXACT
            memo[p] = hit
        verdicts.append(hit)
    return ValidationReport(
        start=path.base.key,
        end=path.end.key,
        center=center.key,
        radius=r,
        length=path.length,
        length_bound=length_bound,
        verdicts=verdicts,
        expected_end=None if expected_end is None else expected_end.key,
    )


# ---------------------------------------------------------------------------
# building blocks


def _a(j: int, k: int) -> list[str]:
    """Letters of a_j^k."""
    name = f"a{j}"
    return [name] * k if k >= 0 else [name.upper()] * (-k)


def _letters_of(letter: str, k: int) -> list[str]:
    return [letter] * k if k >= 0 else [invert_letter(letter)] * (-k)


@lru_cache(maxsize=4096)
def h_geodesic(kind: str, n: int) -> tuple[str, ...]:
    """A shortest word in T for c^n inside H alone."""
    if kind == "FreeAbelian2":
        return tuple(_letters_of("c", n))
    ops = H_MODELS[kind]
    steps = []
    for name in ("c", ops.second):
        g = ops.generator(name)
        gi = ops.inv(g)
        steps.append((name, lambda v, g=g: ops.mul(v, g)))
        steps.append((name.upper(), lambda v, gi=gi: ops.mul(v, gi)))
    word = bidirectional_path(ops.identity, ops.cpow(n), steps)
    return tuple(word)


def spelling(model: GroupModel, g: GroupElement) -> list[str]:
    """Deterministic geodesic spelling (walk-back through a ball when it covers g)."""
    guide = guide_ball(model)
    word = geodesic_word(model, g, cache=guide)
    if apply_word(model.identity(), word) != g:  # pragma: no cover - defensive
        raise NoGeodesicSpelling(f"spelling of {g.key} does not evaluate back")
    return word


def _check_level(model: GroupModel, m: int):
    if m < 2 or m > model.m:
        raise UnsupportedLevel(f"P/Q paths need 2 <= m <= {model.m}, got {m}")


# ---------------------------------------------------------------------------
# the P/Q recursion


def p_letters(model: GroupModel, m: int, n: int, eps: int) -> list[str]:
    """Letters of the path from a0^{2n} to a_m^eps a0^{2n} avoiding B(e, |n|)."""
    _check_level(model, m)
    if n == 0 or eps not in (1, -1):
        raise ValueError("p_path needs n != 0 and eps = +-1")
    name = f"a{m}"
    if m == 2:
        if eps == -1:
            # a0^{2n} c^{-2n} = a1^{2n}, then a1^{2n} a2^-1 = a2^-1 a0^{2n}
            return list(h_geodesic(model.h.kind, -2 * n)) + [name.upper()]
        return [name] + list(h_geodesic(model.h.kind, 2 * n))
    inner = q_letters(model, m - 1, 2 * n, 2 * n)
    if eps == -1:
        return inner + [name.upper()]
    return [name] + invert_word(inner)


def q_letters(model: GroupModel, m: int, n1: int, n2: int) -> list[str]:
    """Letters of the path from a0^{n1} to a_m^{n2} avoiding B(e, r), |n1| = |n2| = r."""
    _check_level(model, m)
    if n1 == 0 or n2 == 0 or abs(n1) != abs(n2):
        raise ValueError("q_path needs |n1| = |n2| = r > 0")
    sigma = 1 if n2 > 0 else -1
    tooth = p_letters(model, m, 2 * n1, sigma)
    word = _a(0, 3 * n1)
    for _ in range(abs(n2)):
        word.extend(tooth)
    word.extend(_a(0, -4 * n1))
    return word


def p_path(model: GroupModel, m: int, n: int, eps: int) -> WordPath:
    return WordPath(model.power("a0", 2 * n), tuple(p_letters(model, m, n, eps)))


def q_path(model: GroupModel, m: int, n1: int, n2: int) -> WordPath:
    return WordPath(model.power("a0", n1), tuple(q_letters(model, m, n1, n2)))


def p_path_report(model, m, n, eps, exact=True) -> ValidationReport:
    led = ConstantLedger.for_model(model)
    path = p_path(model, m, n, eps)
    target = model.power(f"a{m}", eps) * model.power("a0", 2 * n)
    bound = led.p_bound(m, abs(n), model.h.f)
    return validate(path, model.identity(), abs(n), bound, exact=exact, expected_end=target)


def q_path_report(model, m, n1, n2, exact=True) -> ValidationReport:
    led = ConstantLedger.for_model(model)
    path = q_path(model, m, n1, n2)
    bound = led.q_bound(m, abs(n1), model.h.f)
    return validate(path, model.identity(), abs(n1), bound, exact=exact, expected_end=model.power(f"a{m}", n2))


# ---------------------------------------------------------------------------
# product detour in G_1 = K x <b>


def _split_g1(model: GroupModel, g: GroupElement):
    """(K-part as a G_1 element with trivial b, b exponent, |g|) for g in G_1."""
    payload = descend(model, g.payload, 1)
    if payload is None:
        raise InvalidSphere("product detour endpoints must lie in G_1")
    kappa, beta = payload
    G1 = make_model(model.h.kind, 1)
    k = G1.wrap((kappa, 0))
    return k, beta, _length(G1, k) + abs(beta)


def _length(model: GroupModel, g: GroupElement) -> int:
    d = guide_ball(model).length(g)
    return d if d is not None else word_length(model, g)


def product_detour(model: GroupModel, g1: GroupElement, g2: GroupElement, n: int | None = None) -> WordPath:
    """Five-leg path between two points of S(e, n) in G_1 that never enters B(e, n).

    G_1 = K x <b> carries the l1 metric, so pushing |b| up to n first keeps every
    vertex at distance >= n while the K-coordinate is rerouted through a0^n.
    """
    k1, b1, d1 = _split_g1(model, g1)
    k2, b2, d2 = _split_g1(model, g2)
    if n is None:
        n = d1
    if d1 != n or d2 != n:
        raise InvalidSphere(f"endpoints have lengths {d1}, {d2}, expected {n}")
    if g1 == g2:
        return WordPath(g1, ())
    G1 = k1.model
    s1 = 1 if b1 >= 0 else -1
    s2 = 1 if b2 >= 0 else -1
    letters = (
        _letters_of("b", s1 * n - b1)
        + invert_word(spelling(G1, k1))
        + _a(0, n)
        + _letters_of("b", s2 * n - s1 * n)
        + _a(0, -n)
        + spelling(G1, k2)
        + _letters_of("b", b2 - s2 * n)
    )
    return WordPath(g1, tuple(letters))


def g1_pair_path(model: GroupModel, x: GroupElement, y: GroupElement, R: int) -> WordPath:
    """Explicit path in G_1 = K x <b> between points outside B(e, R).

    With b-exponents of one sign it lifts to height max(R, |b1|, |b2|) and crosses
    K through e.  Otherwise it walks k1 outwards to length R while lowering b,
    flips the sign of b there, and crosses K at height R on the other side.
    """
    if model.m != 1:
        raise UnsupportedLevel("g1_pair_path lives in G_1")
    k1, b1, _ = _split_g1(model, x)
    k2, b2, _ = _split_g1(model, y)
    l1, l2 = _length(model, k1), _length(model, k2)
    if b1 * b2 >= 0:
        sign = 1 if (b1 > 0 or b2 > 0) else (-1 if (b1 < 0 or b2 < 0) else 1)
        top = max(R, abs(b1), abs(b2))
        letters = (
            _letters_of("b", sign * top - b1)
            + invert_word(spelling(model, k1))
            + spelling(model, k2)
            + _letters_of("b", b2 - sign * top)
        )
        return WordPath(x, tuple(letters))
    from .divergence import g1_pair_upper_bound

    forward = g1_pair_upper_bound(l1, b1, l2, b2, R)
    if forward != _via_cost(l1, b1, l2, b2, R):
        return g1_pair_path(model, y, x, R).reversed()
    s1 = 1 if b1 > 0 else -1
    s2 = -s1
    letters: list[str] = []
    k = k1
    b = b1
    while _length(model, k) < R:
        s = _extend_letter(model, k)
        letters.append(s)
        k = k * model.gen(s)
        if b:
            letters.extend(_letters_of("b", -s1))
            b -= s1
    letters.extend(_letters_of("b", -b))
    height = max(R, abs(b2))
    letters.extend(_letters_of("b", s2 * height))
    letters.extend(invert_word(spelling(model, k)) + spelling(model, k2))
    letters.extend(_letters_of("b", b2 - s2 * height))
    return WordPath(x, tuple(letters))


def _via_cost(ka, ba, kb, bb, R):
    height = max(R, abs(bb))
    return max(0, R - ka) + abs(ba) + height + max(ka, R) + kb + height - abs(bb)


def _extend_letter(model: GroupModel, k: GroupElement) -> str:
    d = _length(model, k)
    for s in model.letters:
        if s.lower() == "b":
            continue
        if _length(model, k * model.gen(s)) == d + 1:
            return s
    raise InvalidSphere(f"{k.key} has no geodesic extension in K")


def product_detour_report(model, g1, g2, n=None) -> ValidationReport:
    path = product_detour(model, g1, g2, n)
    n = n if n is not None else _split_g1(model, g1)[2]
    bound = 2 * n if g1 == g2 else 8 * n
    return validate(path, model.identity(), n, bound, expected_end=g2)


# ---------------------------------------------------------------------------
# teeth and the comb


def _commutes_with_a0(letter: str) -> bool:
    return letter.lower() in ("a0", "a1", "b", "c")


def tooth_letters(model: GroupModel, s: str, r: int, sigma: int) -> list[str]:
    """Path from a0^{4 sigma r} to s a0^{4 sigma r} avoiding B(e, 2r)."""
    name, sign = s.lower(), (1 if s.islower() else -1)
    if _commutes_with_a0(s):
        return [s]
    if name.startswith("a") and int(name[1:]) >= 2:
        return p_letters(model, int(name[1:]), 2 * sigma * r, sign)
    return g1_tooth_letters(model, s, 2 * sigma * r)


def g1_tooth_letters(model: GroupModel, s: str, n: int) -> list[str]:
    """Path from a0^{2n} to s a0^{2n} outside B(e, |n|): back to the sphere, product detour, out again."""
    G1 = make_model(model.h.kind, 1)
    sign = 1 if n > 0 else -1
    size = abs(n)
    # last crossing of S(e, |n|) along j -> s a0^{sign j}, 0 <= j <= 2|n|
    lengths = []
    for j in range(2 * size + 1):
        lengths.append(_length(G1, G1.element([s] + _a(0, sign * j))))
    inside = [j for j in range(2 * size + 1) if lengths[j] < size]
    j_star = inside[-1] + 1 if inside else 0
    while lengths[j_star] != size:
        j_star += 1  # only reached when s a0^{.} starts beyond the sphere
        if j_star > 2 * size:  # pragma: no cover
            raise InvalidSphere("tooth does not meet the sphere")
    start = G1.power("a0", size * sign)
    target = G1.element([s] + _a(0, sign * j_star))
    detour = product_detour(G1, start, target, size)
    return _a(0, -sign * size) + list(detour.letters) + _a(0, sign * (2 * size - j_star))


@dataclass
class CombResult:
    path: WordPath
    sigma: int
    report: ValidationReport
    spelling: list[str]


def comb_to_axis(model: GroupModel, x: GroupElement, r: int | None = None, exact: bool = True,
                 cache: BallCache | None = None, word: Sequence[str] | None = None) -> CombResult:
    """Path from x in S(e, r) to a0^r or a0^-r avoiding B(e, ceil(r/2)).

    ``word`` may supply a known geodesic spelling of x; it is checked to spell x.
    """
    if word is not None:
        word = list(word)
        if apply_word(model.identity(), word) != x:
            raise InvalidSphere("supplied spelling does not evaluate to x")
    elif r is None or r <= 6:
        word = spelling(model, x)
    else:
        word = geodesic_word(model, x, cache=cache or guide_ball(model))
    if r is None:
        r = len(word)
    if len(word) != r:
        raise InvalidSphere(f"|x| = {len(word)}, expected {r}")
    half = -(-r // 2)
    led = ConstantLedger.for_model(model)
    bound = led.comb_bound(model.m, r, model.h.f)
    on_axis = next((s for s in (1, -1) if x == model.power("a0", s * r)), None)
    if r == 0 or on_axis is not None:
        path = WordPath(x, ())
        report = validate(path, model.identity(), half, bound, exact=exact, expected_end=x)
        return CombResult(path, on_axis or 1, report, word)
    sigma = _choose_direction(model, x, r, half, exact)
    letters = _a(0, 3 * sigma * r)
    for s in word:
        letters.extend(tooth_letters(model, s, r, sigma))
    letters.extend(_a(0, -4 * sigma * r))
    forward = WordPath(model.power("a0", sigma * r), tuple(letters))
    path = forward.reversed()
    report = validate(path, model.identity(), half, bound, exact=exact, expected_end=model.power("a0", sigma * r))
    return CombResult(path, sigma, report, word)


def _choose_direction(model: GroupModel, x: GroupElement, r: int, half: int, exact: bool) -> int:
    """An a0-direction whose first 4r steps from x stay outside B(e, half)."""
    inner = _inside_test(model, half) if exact else None
    for sigma in (1, -1):
        ok = True
        p = x.payload
        letter = "a0" if sigma == 1 else "A0"
        for _ in range(4 * r + 1):
            if payload_lower_bound(model, p) < half and (inner is None or inner(p)):
                ok = False
                break
            p = model.step(p, letter)
        if ok:
            return sigma
    raise InvalidSphere("neither a0-ray from x avoids the half-radius ball")  # pragma: no cover


# ---------------------------------------------------------------------------
# the b-commuting detour


def a0_detour(model: GroupModel, alpha: WordPath, z: GroupElement, r: int | None = None) -> WordPath:
    """Replace an a0-segment by an a0/b path avoiding B(z, ceil(r/2)) of length <= 11 len(alpha)."""
    if alpha.length == 0:
        return alpha
    sign = 1 if alpha.letters[0] == "a0" else -1
    if any(s != alpha.letters[0] for s in alpha.letters) or alpha.letters[0] not in ("a0", "A0"):
        raise ValueError("alpha must be a segment labelled by a0 in one direction")
    if r is None:
        r = min(_dist(model, z, alpha.base), _dist(model, z, alpha.end))
    if r <= 0:
        raise ValueError("a0_detour needs r > 0")
    half = -(-r // 2)
    if validate(alpha, z, half).avoids:
        return alpha
    L = alpha.length
    letters = _a(0, -2 * sign * r) + ["b"] * r + _a(0, sign * (L + 4 * r)) + ["B"] * r + _a(0, -2 * sign * r)
    return WordPath(alpha.base, tuple(letters))


def _dist(model, a: GroupElement, b: GroupElement) -> int:
    return _length(model, a.inverse() * b)
