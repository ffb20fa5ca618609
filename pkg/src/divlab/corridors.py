"""a_k-hyperplanes (corridors) of the tower complexes and crossing-count certificates
for avoidant paths over corners."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .errors import MalformedEndpoints, NotAvoidant, UnsupportedLevel
from .groups import GroupElement, GroupModel, apply_word, left_coset_rep, power_exponent
from .paths import WordPath, validate


@dataclass(frozen=True, order=True)
class HyperplaneId:
    """Hyperplane dual to a_k-edges; ``anchor`` keys the coset g<a0> of the edge's a0-side vertex."""

    k: int
    anchor: str


def hyperplane_of_edge(model: GroupModel, g: GroupElement, k: int, sign: int = 1) -> HyperplaneId:
    """Id of the hyperplane dual to the edge (g, g a_k) (sign +1) or (g a_k^-1, g) (sign -1).

    Edges (g1, g1 a_k), (g2, g2 a_k) lie in one strip exactly when g2 is in g1<a0>,
    since a0^j a_k = a_k a_{k-1}^j.
    """
    if k < 2 or k > model.m:
        raise UnsupportedLevel(f"a{k}-hyperplanes need 2 <= k <= {model.m}")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if sign == -1:
        g = g * model.power(f"a{k}", -1)
    rep, _ = left_coset_rep(g, "A0")
    return HyperplaneId(k, rep.key)


@dataclass(frozen=True)
class Crossing:
    position: int  # index of the edge in the path
    letter: str
    hyperplane: HyperplaneId
    prefix_key: str


def crossings(path: WordPath, k: int) -> list[Crossing]:
    """One record per a_k^{+-1} letter of the path, in path order."""
    model = path.model
    up, down = f"a{k}", f"A{k}"
    out = []
    for i, (v, s) in enumerate(zip(path.vertices(), path.letters)):
        if s == up:
            out.append(Crossing(i, s, hyperplane_of_edge(model, v, k, 1), v.key))
        elif s == down:
            out.append(Crossing(i, s, hyperplane_of_edge(model, v, k, -1), v.key))
    return out


# ---------------------------------------------------------------------------
# corners


@dataclass(frozen=True)
class Ray:
    """A 0-ray (``prefix`` = 0, ``direction`` along a0) or a (0,k)-ray a0^prefix then a_k^direction.

    A k-ray is described with ``prefix`` = 0 and ``along_k`` set.
    """

    direction: int
    prefix: int = 0
    along_k: bool = False

    def __post_init__(self):
        if self.direction not in (1, -1):
            raise ValueError("ray direction must be +1 or -1")
        if self.prefix and not self.along_k:
            raise ValueError("a 0-ray has no a0-prefix")

    def word(self, k: int, t: int) -> list[str]:
        """Letters of the first t edges from the apex."""
        a0 = "a0" if self.prefix >= 0 else "A0"
        head = [a0] * min(t, abs(self.prefix))
        rest = t - len(head)
        if not self.along_k:
            return [("a0" if self.direction == 1 else "A0")] * t
        ak = f"a{k}" if self.direction == 1 else f"A{k}"
        return head + [ak] * rest

    def to_json(self) -> dict:
        return {"direction": self.direction, "prefix": self.prefix, "along_k": self.along_k}


@dataclass(frozen=True)
class Corner:
    apex: GroupElement
    alpha: Ray
    beta: Ray  # a k-ray: along_k with no prefix
    k: int

    def __post_init__(self):
        model = self.apex.model
        if self.k < 1 or self.k > model.m:
            raise UnsupportedLevel(f"a {self.k}-corner needs 1 <= k <= {model.m}")
        if not self.beta.along_k or self.beta.prefix:
            raise ValueError("beta must be a k-ray")
        if self.k == 1 and self.alpha.along_k:
            raise ValueError("a 1-corner pairs a 0-ray with a 1-ray")

    def alpha_point(self, t: int) -> GroupElement:
        return apply_word(self.apex, self.alpha.word(self.k, t))

    def beta_point(self, t: int) -> GroupElement:
        return self.apex * self.apex.model.power(f"a{self.k}", self.beta.direction * t)

    def beta_edge_hyperplane(self, j: int) -> HyperplaneId:
        """Hyperplane dual to the j-th edge of beta (j >= 1)."""
        model = self.apex.model
        if self.beta.direction == 1:
            return hyperplane_of_edge(model, self.beta_point(j - 1), self.k, 1)
        return hyperplane_of_edge(model, self.beta_point(j), self.k, 1)

    def locate_alpha(self, g: GroupElement, limit: int) -> int | None:
        for t in range(limit + 1):
            if self.alpha_point(t) == g:
                return t
        return None

    def locate_beta(self, g: GroupElement) -> int | None:
        e = power_exponent(self.apex.inverse() * g, f"a{self.k}")
        if e is None or (e and (e > 0) != (self.beta.direction > 0)):
            return None
        return abs(e)

    def to_json(self) -> dict:
        return {"apex": self.apex.key, "alpha": self.alpha.to_json(), "beta": self.beta.to_json(), "k": self.k}


@dataclass
class CornerCertificate:
    corner: Corner
    r: int
    length: int
    alpha_parameter: int
    beta_parameter: int
    length_lower_bound: float
    required: list[HyperplaneId]
    counts: dict = field(default_factory=dict)

    @property
    def all_crossed(self) -> bool:
        return all(self.counts.get(h, 0) >= 1 for h in self.required)

    @property
    def length_ok(self) -> bool:
        return self.length >= self.length_lower_bound

    @property
    def holds(self) -> bool:
        return self.all_crossed and self.length_ok

    def to_json(self) -> dict:
        return {
            "corner": self.corner.to_json(),
            "r": self.r,
            "length": self.length,
            "alpha_parameter": self.alpha_parameter,
            "beta_parameter": self.beta_parameter,
            "length_lower_bound": self.length_lower_bound,
            "required_hyperplanes": len(self.required),
            "crossing_counts": [self.counts.get(h, 0) for h in self.required],
            "all_crossed": self.all_crossed,
            "length_ok": self.length_ok,
            "holds": self.holds,
        }


def corner_certificate(corner: Corner, path: WordPath, r: int, exact: bool = True) -> CornerCertificate:
    """Check an r-avoidant path over a corner against the crossing and length lower bounds."""
    model = corner.apex.model
    report = validate(path, corner.apex, r, exact=exact)
    if not report.avoids:
        raise NotAvoidant(f"path enters B(apex, {r}) at vertex {report.first_inside}")
    start, end = path.base, path.end
    limit = path.length + r + abs(corner.alpha.prefix) + 2
    ta, tb = corner.locate_alpha(start, limit), corner.locate_beta(end)
    if ta is None or tb is None:
        # accept either orientation
        ta, tb = corner.locate_alpha(end, limit), corner.locate_beta(start)
    if ta is None or tb is None:
        raise MalformedEndpoints("path must join a vertex of alpha to a vertex of beta")
    f = model.h.f
    bound = max(r - 1, f(r) - 1, 0) if r >= 1 else 0
    required = [corner.beta_edge_hyperplane(j) for j in range(2, tb + 1)] if corner.k >= 2 else []
    counts: Counter = Counter()
    if corner.k >= 2:
        wanted = set(required)
        for c in crossings(path, corner.k):
            if c.hyperplane in wanted:
                counts[c.hyperplane] += 1
    return CornerCertificate(corner, r, path.length, ta, tb, bound, required, dict(counts))


# ---------------------------------------------------------------------------
# the quadratic lower bound in G_2


@dataclass
class SegmentBound:
    n: int
    bound: int
    length: int
    exponents: list[int]  # m_i with v_i = (a2 s)^i a0^{m_i}, i = 0..n//8
    positions: list[tuple[int, int]]  # path indices of (v_i, w_i)
    vacuous: bool

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "bound": self.bound,
            "length": self.length,
            "exponents": self.exponents,
            "positions": self.positions,
            "vacuous": self.vacuous,
        }


def g2_segment_report(path: WordPath, n: int, exact: bool = True) -> SegmentBound:
    """Sum of amalgam lower bounds over the segments cut out by the hyperplanes of (a2 s)^i a2."""
    model = path.model
    if model.m != 2:
        raise UnsupportedLevel("the segment bound is stated in G_2")
    s = model.second
    step = model.element(["a2", s])
    if path.base != step ** (-n) or path.end != step ** n:
        raise MalformedEndpoints(f"path must run from (a2 {s})^-{n} to (a2 {s})^{n}")
    report = validate(path, model.identity(), n, exact=exact)
    if not report.avoids:
        raise NotAvoidant(f"path enters B(e, {n}) at vertex {report.first_inside}")
    top = n // 8
    if n < 8:
        return SegmentBound(n, 0, path.length, [], [], True)
    vertices = path.vertices()
    last: dict = {}
    for c in crossings(path, 2):
        last[c.hyperplane] = c
    exponents, positions = [], []
    for i in range(top + 1):
        corner = step ** i
        hid = hyperplane_of_edge(model, corner, 2, 1)
        c = last.get(hid)
        if c is None:  # pragma: no cover - the hyperplane separates the endpoints
            raise MalformedEndpoints(f"path never crosses the hyperplane of (a2 {s})^{i} a2")
        # v_i is the a0-side endpoint of the crossing edge, w_i = v_i a2 the other one
        pv, pw = (c.position, c.position + 1) if c.letter == "a2" else (c.position + 1, c.position)
        exponents.append(power_exponent(corner.inverse() * vertices[pv], "a0"))
        positions.append((pv, pw))
    bound = 0
    used = 0
    for i in range(1, top + 1):
        # d(w_{i-1}, v_i) = |a1^-n_{i-1} s a0^m_i| >= |n_{i-1}| + |m_i| + 1; only
        # segments of the path that do not overlap earlier ones are counted
        lo, hi = sorted((positions[i - 1][1], positions[i][0]))
        if lo >= used:
            bound += abs(exponents[i - 1]) + abs(exponents[i]) + 1
            used = hi
    return SegmentBound(n, bound, path.length, exponents, positions, False)


def g2_segment_lower_bound(path: WordPath, n: int, exact: bool = True) -> int:
    return g2_segment_report(path, n, exact).bound
