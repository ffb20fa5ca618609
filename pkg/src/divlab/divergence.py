"""Experiment drivers: extrinsic profiles, divergence curves, growth comparison and fitting,
and the contraction profile of a cyclic axis."""

from __future__ import annotations

import csv
import io
import math
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cayley import (
    CAP_EXCEEDED,
    DEFAULT_CAP,
    EXACT,
    AvoidantQuery,
    _astar,
    _Capped,
    _target_heuristic,
    avoidant_distance,
    ball,
    bidirectional_distance,
    guide_ball,
    membership,
    strip_distance,
)
from .errors import BudgetExceeded, ConfigError, InsufficientData, InvalidQuery, UnsupportedLevel
from .groups import H_MODELS, GroupModel, HModel
from .paths import ConstantLedger, WordPath, q_path, validate

LOWER_ESTIMATE = "LowerEstimate"
CSV_COLUMNS = ("experiment", "model", "rho", "r", "value", "status", "seed")


@dataclass
class Sample:
    r: int
    value: int | float | None  # None stands for an infinite or unknown value
    status: str
    extra: dict = field(default_factory=dict)


@dataclass
class GrowthCurve:
    experiment: str
    model: str
    samples: list[Sample] = field(default_factory=list)
    rho: Fraction | None = None
    policy: str = ""
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def add(self, sample: Sample):
        if self.samples and sample.r <= self.samples[-1].r:
            raise ValueError("samples must have strictly increasing r")
        self.samples.append(sample)

    @property
    def rs(self) -> list[int]:
        return [s.r for s in self.samples]

    def values(self) -> dict[int, float]:
        return {s.r: s.value for s in self.samples if s.value is not None}

    def exact(self) -> list[Sample]:
        return [s for s in self.samples if s.status == EXACT and s.value is not None]

    def rows(self) -> list[dict]:
        rho = "" if self.rho is None else str(self.rho)
        seed = "" if self.seed is None else self.seed
        return [
            {
                "experiment": self.experiment,
                "model": self.model,
                "rho": rho,
                "r": s.r,
                "value": "inf" if s.value is None else s.value,
                "status": s.status,
                "seed": seed,
            }
            for s in self.samples
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.rows())
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "experiment": self.experiment,
            "model": self.model,
            "rho": None if self.rho is None else str(self.rho),
            "policy": self.policy,
            "seed": self.seed,
            "meta": self.meta,
            "samples": [
                {"r": s.r, "value": s.value, "status": s.status, **({"extra": s.extra} if s.extra else {})}
                for s in self.samples
            ],
        }

    @classmethod
    def synthetic(cls, name: str, fn, rs) -> "GrowthCurve":
        curve = cls("synthetic", name)
        for r in rs:
            curve.add(Sample(r, fn(r), EXACT))
        return curve


# ---------------------------------------------------------------------------
# extrinsic profile of <c> in H


@dataclass
class ExtrinsicProfile:
    curve: GrowthCurve
    lengths: dict[int, int]
    c1: Fraction  # smallest C with |c^n| <= C (f(n) + 1) on the range
    lower_ok: bool  # f(n) <= |c^n| throughout
    h: HModel

    def sandwich_ok(self, c1: Fraction | None = None) -> bool:
        c1 = self.h.extrinsic_profile_constant if c1 is None else c1
        return self.lower_ok and all(d <= c1 * self.h.f(n) + c1 for n, d in self.lengths.items())


def extrinsic_profile(h: HModel, n_max: int, cap: int = DEFAULT_CAP) -> ExtrinsicProfile:
    """Exact |c^n|_T for 1 <= n <= n_max by bidirectional search inside H."""
    ops = H_MODELS[h.kind]
    gens = [ops.generator("c"), ops.generator(ops.second)]
    gens += [ops.inv(g) for g in gens]

    def forward(v):
        return [ops.mul(v, g) for g in gens]

    curve = GrowthCurve("extrinsic", f"H[{h.kind}]", policy="exact")
    lengths = {}
    c1 = Fraction(0)
    lower_ok = True
    for n in range(1, n_max + 1):
        d = bidirectional_distance(ops.identity, ops.cpow(n), forward, cap=cap)
        lengths[n] = d
        fn = h.f(n)
        lower_ok = lower_ok and fn <= d
        c1 = max(c1, Fraction(d) / (Fraction(fn) + 1))
        curve.add(Sample(n, d, EXACT))
    curve.meta.update({"c1": str(c1), "recorded_c1": str(h.extrinsic_profile_constant)})
    return ExtrinsicProfile(curve, lengths, c1, lower_ok, h)


# ---------------------------------------------------------------------------
# group divergence on sphere pairs


@dataclass(frozen=True)
class AllPairs:
    name = "AllPairs"


@dataclass(frozen=True)
class Sampled:
    k: int
    seed: int
    name = "Sampled"


def forbidden_radius(rho, r: int) -> int:
    """Integer R with B(e, rho r) = {|v| < R}."""
    return math.ceil(Fraction(rho) * r)


def g1_pair_upper_bound(k1: int, b1: int, k2: int, b2: int, R: int) -> int:
    """Length of the explicit detour between (k1, b1) and (k2, b2) in K x <b> outside B(e, R).

    Arguments are |K-part| and b-exponent of each endpoint; the path is the one
    built by ``paths.g1_pair_path``.
    """
    if b1 * b2 >= 0:
        top = max(R, abs(b1), abs(b2))
        return k1 + k2 + 2 * top - abs(b1) - abs(b2)

    def via(ka, ba, kb, bb):
        grow = max(0, R - ka)
        height = max(R, abs(bb))
        return grow + abs(ba) + height + max(ka, R) + kb + height - abs(bb)

    return min(via(k1, b1, k2, b2), via(k2, b2, k1, b1))


def _g1_classes(model: GroupModel, sphere, cache):
    """Group sphere payloads of G_1 by (|K-part|, b)."""
    classes: dict = {}
    for p in sphere:
        kappa, beta = p
        klen = cache.dist[(kappa, 0)] if (kappa, 0) in cache.dist else None
        if klen is None:  # pragma: no cover - |k| <= |x| keeps it in the ball
            raise RuntimeError("K-part outside the cache")
        classes.setdefault((klen, beta), []).append(p)
    return classes


def k_extendable(model: GroupModel, radius: int, cache=None) -> bool:
    """Every element of K shorter than ``radius`` has a K-letter lengthening it by one."""
    cache = cache if cache is not None and cache.radius >= radius else ball(model, radius)
    dist = cache.dist
    k_letters = [s for s in model.letters if s.lower() != "b"]
    for p, d in dist.items():
        if d >= radius or p[1] != 0:
            continue
        if not any(dist.get(model.step(p, s)) == d + 1 for s in k_letters):
            return False
    return True


@dataclass
class PairResult:
    value: int | None
    status: str
    pairs: int
    exact_searches: int
    witness: tuple | None


def _exact_pair(model, src, dst, inside, cap, guide):
    h = _target_heuristic(model, dst, guide)
    d, _ = _astar(model, src, dst, h, cap, allowed=lambda p: not inside(p))
    return d


def _eccentricity(model, src, targets, inside, cap):
    """Restricted BFS from src until every target is settled; returns {target: d}."""
    remaining = set(targets)
    found = {}
    dist = {src: 0}
    queue = deque([src])
    if src in remaining:
        remaining.discard(src)
        found[src] = 0
    while queue and remaining:
        v = queue.popleft()
        dv = dist[v] + 1
        for s in model.letters:
            w = model.step(v, s)
            if w in dist or inside(w):
                continue
            dist[w] = dv
            if w in remaining:
                remaining.discard(w)
                found[w] = dv
            queue.append(w)
        if len(dist) > cap:
            raise BudgetExceeded(f"restricted BFS exceeded {cap} states")
    return found


def pair_divergence(model: GroupModel, rho, r: int, policy=AllPairs(), cap: int = DEFAULT_CAP) -> PairResult:
    """sup of the ball-avoiding distance d_{rho r}(x1, x2) over x1, x2 on S(e, r).

    AllPairs is exact.  Sampled(k, seed) takes the max over k random sources and
    all targets, a lower estimate.  Pairs are treated branch-and-bound style:
    when an explicit construction bounds a pair below the best exact value so
    far the pair is skipped, so only promising pairs are searched.
    """
    rho = Fraction(rho)
    if not 0 < rho <= 1:
        raise InvalidQuery("rho must lie in (0, 1]")
    R = forbidden_radius(rho, r)
    if r == 0:
        return PairResult(0, EXACT, 1, 0, None)
    cache = guide_ball(model) if guide_ball(model).radius >= r else ball(model, r, cap=cap)
    sphere = sorted(cache.sphere(r), key=lambda p: model.wrap(p).key)
    inside = membership(model, R, cache).inside if R > 0 else (lambda p: False)
    if isinstance(policy, Sampled):
        rng = random.Random(policy.seed)
        sources = rng.sample(sphere, min(policy.k, len(sphere)))
        status = LOWER_ESTIMATE
    else:
        sources = sphere
        status = EXACT
    best = 0
    witness = None
    searches = 0
    pairs = 0
    index = {p: i for i, p in enumerate(sphere)}
    try:
        if model.m == 1 and k_extendable(model, R, cache):
            classes = _g1_classes(model, sphere, cache)
            source_set = set(sources)
            order = []
            for ca in classes:
                for cb in classes:
                    u = g1_pair_upper_bound(ca[0], ca[1], cb[0], cb[1], R)
                    order.append((-u, -(abs(ca[1]) + abs(cb[1])), ca, cb))
            order.sort()
            guide = guide_ball(model)
            for neg_u, _, ca, cb in order:
                bound = -neg_u
                if bound <= best:
                    break
                for x in classes[ca]:
                    if x not in source_set:
                        continue
                    for y in classes[cb]:
                        if y == x or (status == EXACT and index[y] < index[x]):
                            continue
                        pairs += 1
                        searches += 1
                        d = _exact_pair(model, x, y, inside, cap, guide)
                        if d is not None and d > best:
                            best, witness = d, (x, y)
                        if best >= bound:
                            break
                    if best >= bound:
                        break
        else:
            for x in sources:
                found = _eccentricity(model, x, sphere, inside, cap)
                searches += 1
                pairs += len(found)
                for y, d in sorted(found.items(), key=lambda t: index[t[0]]):
                    if d > best:
                        best, witness = d, (x, y)
    except (_Capped, BudgetExceeded):
        return PairResult(None, CAP_EXCEEDED, pairs, searches, None)
    wit = None if witness is None else (model.wrap(witness[0]).key, model.wrap(witness[1]).key)
    return PairResult(best, status, pairs, searches, wit)


def pair_divergence_curve(model, rho, rs, policy=AllPairs(), cap: int = DEFAULT_CAP) -> GrowthCurve:
    seed = policy.seed if isinstance(policy, Sampled) else None
    curve = GrowthCurve("divergence", model.descriptor, rho=Fraction(rho), policy=policy.name, seed=seed)
    for r in rs:
        res = pair_divergence(model, rho, r, policy, cap)
        curve.add(Sample(r, res.value, res.status, {"pairs": res.pairs, "searches": res.exact_searches}))
    return curve


# ---------------------------------------------------------------------------
# divergence of the cyclic subgroup <a_j>


@dataclass
class CyclicResult:
    r: int
    value: int | None
    status: str
    lower_bound: int
    upper_bound: int | None
    ledger_bound: float | None
    witness: list[str] | None

    @property
    def sandwiched(self) -> bool:
        if self.value is None:
            return False
        upper = self.upper_bound if self.upper_bound is not None else math.inf
        return self.lower_bound <= self.value <= upper

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "value": self.value,
            "status": self.status,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "ledger_bound": self.ledger_bound,
            "sandwiched": self.sandwiched,
        }


def glued_q_path(model: GroupModel, j: int, r: int) -> WordPath:
    """a_j^-r -> a0^r -> a_j^r from two Q-paths, outside B(e, r)."""
    first = q_path(model, j, r, -r).reversed()
    second = q_path(model, j, r, r)
    return first.then(second.letters)


def cyclic_divergence(model: GroupModel, letter: str, r: int, cap: int = DEFAULT_CAP) -> CyclicResult:
    """Shortest path from a_j^-r to a_j^r outside B(e, r)."""
    if not letter.startswith("a") or not letter[1:].isdigit():
        raise InvalidQuery(f"cyclic divergence is measured along a_j, got {letter!r}")
    j = int(letter[1:])
    if j > model.m:
        raise UnsupportedLevel(f"{letter} does not exist in G_{model.m}")
    e = model.identity()
    src, dst = model.power(letter, -r), model.power(letter, r)
    if j == model.m and j >= 2:
        res = strip_distance(model, e, r, src, dst, cap=cap)
    else:
        res = avoidant_distance(AvoidantQuery(e, r, src, dst, cap), want_path=True)
    f = model.h.f
    lower = max(r - 1, f(r) - 1, 0)
    upper = ledger = None
    if j >= 2:
        glued = glued_q_path(model, j, r)
        if validate(glued, e, r, exact=r <= 6).avoids:
            upper = glued.length
        led = ConstantLedger.for_model(model)
        ledger = float(2 * led.q_bound(j, r, f))
    return CyclicResult(r, res.length, res.status, lower, upper, ledger, res.letters)


def cyclic_curve(model: GroupModel, letter: str, rs, cap: int = DEFAULT_CAP) -> GrowthCurve:
    curve = GrowthCurve("cyclic", model.descriptor, policy=letter)
    for r in rs:
        res = cyclic_divergence(model, letter, r, cap)
        curve.add(Sample(r, res.value, res.status, {"lower": res.lower_bound, "upper": res.upper_bound}))
    return curve


# ---------------------------------------------------------------------------
# the domination order on finite data

WITNESSED = "Witnessed"
NOT_WITNESSED = "NotWitnessedInBox"


@dataclass
class Domination:
    verdict: str
    A: int | None = None
    B: int | None = None
    C: int | None = None

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "A": self.A, "B": self.B, "C": self.C}


def dominates(f_curve: GrowthCurve, g_curve: GrowthCurve, a_max: int = 8, b_max: int = 8, c_max: int = 8) -> Domination:
    """Search integer A in [1, a_max], B in [0, b_max], C in [0, c_max] with f(r) <= g(Ar) + Br for sampled r > C.

    g(Ar) is read at the largest grid point <= Ar, which bounds it from below
    for non-decreasing g, so a witness found here is a genuine witness on the grid.
    """
    fv = f_curve.values()
    gv = g_curve.values()
    grid = sorted(gv)
    if not fv or not grid:
        return Domination(NOT_WITNESSED)

    def g_at(x):
        lo = None
        for t in grid:
            if t <= x:
                lo = t
            else:
                break
        return None if lo is None else gv[lo]

    for C in range(0, c_max + 1):
        rs = [r for r in sorted(fv) if r > C]
        for A in range(1, a_max + 1):
            gs = [g_at(A * r) for r in rs]
            if any(g is None for g in gs):
                continue
            for B in range(0, b_max + 1):
                if all(fv[r] <= g + B * r for r, g in zip(rs, gs)):
                    return Domination(WITNESSED, A, B, C)
    return Domination(NOT_WITNESSED)


# ---------------------------------------------------------------------------
# growth fits

POWER = "power"  # r^alpha
POWER_LOG = "power_log"  # r^n log r


@dataclass
class GrowthFit:
    family: str
    exponent: float
    intercept: float
    residual: float
    samples: int
    degenerate: bool
    caveat: str = "finite ranges of r cannot separate nearby exponents"

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "exponent": self.exponent,
            "intercept": self.intercept,
            "residual": self.residual,
            "samples": self.samples,
            "degenerate": bool(self.degenerate),
            "caveat": self.caveat,
        }


def fit_growth(curve: GrowthCurve, family: str = POWER) -> GrowthFit:
    """Least-squares exponent in log-log coordinates (log factor divided out for POWER_LOG)."""
    if family not in (POWER, POWER_LOG):
        raise ConfigError(f"unknown fit family {family!r}")
    pts = [(s.r, s.value) for s in curve.exact() if s.value > 0 and s.r > (1 if family == POWER_LOG else 0)]
    if len(pts) < 4:
        raise InsufficientData(f"need at least 4 exact samples, have {len(pts)}")
    r = np.array([p[0] for p in pts], dtype=float)
    v = np.array([p[1] for p in pts], dtype=float)
    x = np.log(r)
    y = np.log(v)
    if family == POWER_LOG:
        y = y - np.log(np.log2(r))
    if np.ptp(v) == 0:
        return GrowthFit(family, 0.0, float(y.mean()), 0.0, len(pts), True)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.linalg.norm(y - (slope * x + intercept)))
    return GrowthFit(family, float(slope), float(intercept), resid, len(pts), bool(abs(slope) < 0.05))


# ---------------------------------------------------------------------------
# contraction profile


@dataclass
class ContractionProfile:
    axis: str
    model: str
    samples: list[dict] = field(default_factory=list)
    notes: str = "projection = nearest axis points, ties to the smallest exponent"

    @property
    def monotone(self) -> dict:
        """Per ratio A: whether the recorded diameters are non-decreasing in d."""
        out: dict = {}
        by_ratio: dict = {}
        for s in self.samples:
            by_ratio.setdefault(s["ratio"], []).append((s["d"], s["diameter"]))
        for a, pts in by_ratio.items():
            pts.sort()
            best_per_d: dict = {}
            for d, diam in pts:
                best_per_d[d] = max(best_per_d.get(d, 0), diam)
            vals = [best_per_d[d] for d in sorted(best_per_d)]
            out[str(a)] = all(x <= y for x, y in zip(vals, vals[1:]))
        return out

    def to_json(self) -> dict:
        return {"axis": self.axis, "model": self.model, "notes": self.notes, "samples": self.samples,
                "monotone": self.monotone}


def _axis_labels(model: GroupModel, axis: str, half_len: int, depth: int, cap: int):
    """Multi-source BFS from a^j, |j| <= half_len: distance to the axis and smallest nearest exponent."""
    dist: dict = {}
    label: dict = {}
    frontier = []
    for j in range(-half_len, half_len + 1):
        p = model.power(axis, j).payload
        if p not in dist:
            dist[p] = 0
            label[p] = j
            frontier.append(p)
    for d in range(1, depth + 1):
        nxt: dict = {}
        for v in frontier:
            lv = label[v]
            for s in model.letters:
                w = model.step(v, s)
                if w in dist:
                    continue
                if w not in nxt or lv < nxt[w]:
                    nxt[w] = lv
        for w, lw in nxt.items():
            dist[w] = d
            label[w] = lw
        frontier = list(nxt)
        if len(dist) > cap:
            raise BudgetExceeded(f"axis neighbourhood exceeded {cap} states")
    return dist, label


AXIS_TABLE_DEPTH = 4  # default depth of the tabulated axis neighbourhood


def _projection(model: GroupModel, y, dist: dict, label: dict, depth: int, memo: dict):
    """(distance to the axis, smallest nearest exponent) for y, meeting the axis table halfway.

    A geodesic from y to the axis of length D > depth passes, at distance D - depth
    from y, through a vertex exactly ``depth`` from the axis, and every nearest
    axis point of y is nearest for such a vertex. So searching outward from y
    until that layer and minimising over table hits is exact.
    """
    if y in dist:
        return dist[y], label[y]
    if y in memo:
        return memo[y]
    best, lab = None, None
    seen = {y}
    layer = [y]
    a = 0
    while layer:
        a += 1
        nxt = []
        for v in layer:
            for s in model.letters:
                w = model.step(v, s)
                if w in seen:
                    continue
                seen.add(w)
                nxt.append(w)
                if w in dist:
                    c = a + dist[w]
                    if best is None or c < best or (c == best and label[w] < lab):
                        best, lab = c, label[w]
        if best is not None and a >= best - depth:
            break
        layer = nxt
    memo[y] = (best, lab)
    return best, lab


def contraction_profile(model: GroupModel, axis: str, d_max: int, samples: int, seed: int,
                        ratios=(Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)), cap: int = DEFAULT_CAP) -> ContractionProfile:
    """Diameters of nearest-point projections of balls B_R(x), R = floor(A d), onto <axis>."""
    prof = ContractionProfile(axis, model.descriptor)
    if samples <= 0 or d_max <= 0:
        return prof
    r_max = max(math.floor(a * d_max) for a in ratios)
    reach = d_max + r_max
    half_len = 2 * reach + 2
    depth = min(reach, max(d_max, AXIS_TABLE_DEPTH))
    dist, label = _axis_labels(model, axis, half_len, depth, cap)
    memo: dict = {}
    rng = random.Random(seed)
    by_d: dict = {}
    for p, d in dist.items():
        # only points whose nearest axis points sit near the middle, so truncation cannot matter
        if 1 <= d <= d_max and abs(label[p]) <= 1:
            by_d.setdefault(d, []).append(p)
    for d in sorted(by_d):
        pool = sorted(by_d[d], key=lambda p: model.wrap(p).key)
        for x in rng.sample(pool, min(samples, len(pool))):
            for a in ratios:
                R = math.floor(a * d)
                labels = [label[x]]
                seen = {x}
                layer = [x]
                for _ in range(R):
                    nxt = []
                    for v in layer:
                        for s in model.letters:
                            w = model.step(v, s)
                            if w not in seen:
                                seen.add(w)
                                nxt.append(w)
                                labels.append(_projection(model, w, dist, label, depth, memo)[1])
                    layer = nxt
                prof.samples.append({
                    "x": model.wrap(x).key,
                    "d": d,
                    "ratio": str(a),
                    "R": R,
                    "diameter": max(labels) - min(labels),
                })
    return prof
