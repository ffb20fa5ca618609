"""Word metric, balls and the ball-complement metric on Cayley graphs of the tower."""

from __future__ import annotations

import heapq
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

from .errors import BudgetExceeded, InvalidQuery
from .groups import GroupElement, GroupModel, make_model
from .morphisms import payload_lower_bound

DEFAULT_CAP = 5_000_000
PIECE_PROBE = 100_000  # A* states tried on a strip piece before switching strategy
BIDIRECTIONAL_BUDGET = 1_500_000  # states tried by two-sided BFS before falling back to A*

EXACT = "Exact"
DISCONNECTED = "Disconnected"
CAP_EXCEEDED = "CapExceeded"


@dataclass
class BallCache:
    """All elements of length <= radius, keyed by payload, with exact lengths."""

    model: GroupModel
    radius: int
    dist: dict = field(repr=False)

    @property
    def descriptor(self) -> str:
        return self.model.descriptor

    @property
    def entries(self) -> dict[str, int]:
        """Canonical key -> distance (built on demand; payloads are the fast path)."""
        return {self.model.wrap(p).key: d for p, d in self.dist.items()}

    def __len__(self):
        return len(self.dist)

    def __contains__(self, g: GroupElement) -> bool:
        return g.payload in self.dist

    def length(self, g: GroupElement) -> int | None:
        return self.dist.get(g.payload)

    def sphere(self, r: int) -> list:
        return [p for p, d in self.dist.items() if d == r]

    def sphere_sizes(self) -> list[int]:
        sizes = [0] * (self.radius + 1)
        for d in self.dist.values():
            sizes[d] += 1
        return sizes


def _expand_chunk(args):
    h_kind, m, chunk = args
    model = make_model(h_kind, m)
    letters = model.letters
    return [[model.step(p, s) for s in letters] for p in chunk]


def ball(model: GroupModel, R: int, cap: int = DEFAULT_CAP, workers: int = 1) -> BallCache:
    """Breadth-first ball of radius R around the identity."""
    if R < 0:
        raise ValueError("radius must be non-negative")
    ident = model.top.identity
    dist = {ident: 0}
    frontier = [ident]
    letters = model.letters
    step = model.step
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for d in range(1, R + 1):
            if pool is not None and len(frontier) > 256:
                size = -(-len(frontier) // workers)
                chunks = [frontier[i : i + size] for i in range(0, len(frontier), size)]
                images = itertools.chain.from_iterable(
                    pool.map(_expand_chunk, [(model.h.kind, model.m, c) for c in chunks])
                )
            else:
                images = ([step(p, s) for s in letters] for p in frontier)
            nxt = []
            for row in images:
                for q in row:
                    if q not in dist:
                        dist[q] = d
                        nxt.append(q)
            if len(dist) > cap:
                raise BudgetExceeded(f"ball of radius {d} in {model.descriptor} exceeds {cap} entries")
            frontier = nxt
    finally:
        if pool is not None:
            pool.shutdown()
    return BallCache(model, R, dist)


# ---------------------------------------------------------------------------
# generic searches over implicit graphs


def bidirectional_distance(
    start: Hashable,
    goal: Hashable,
    forward: Callable[[Hashable], Iterable[Hashable]],
    backward: Callable[[Hashable], Iterable[Hashable]] | None = None,
    cap: int = DEFAULT_CAP,
    allowed: Callable[[Hashable], bool] | None = None,
) -> int | None:
    """Exact graph distance by alternating BFS layers; None when the goal is unreachable."""
    if start == goal:
        return 0
    backward = backward or forward
    seen = [{start: 0}, {goal: 0}]
    fronts = [[start], [goal]]
    expand = [forward, backward]
    total = 2
    while fronts[0] and fronts[1]:
        side = 0 if len(fronts[0]) <= len(fronts[1]) else 1
        mine, other = seen[side], seen[1 - side]
        nxt = []
        best = None
        for v in fronts[side]:
            dv = mine[v] + 1
            for w in expand[side](v):
                if w in mine:
                    continue
                if allowed is not None and not allowed(w):
                    continue
                if w in other:
                    cand = dv + other[w]
                    if best is None or cand < best:
                        best = cand
                mine[w] = dv
                nxt.append(w)
        if best is not None:
            return best
        total += len(nxt)
        if total > cap:
            raise BudgetExceeded(f"bidirectional search exceeded {cap} states")
        fronts[side] = nxt
    return None


class _Capped(Exception):
    pass


def _astar(model: GroupModel, source, target, heuristic, cap, allowed=None, want_path=False):
    """A* over payloads; the heuristic may be inconsistent, so closed nodes reopen."""
    step = model.step
    letters = model.letters
    best = {source: 0}
    parent = {source: None} if want_path else None
    counter = itertools.count()
    heap = [(heuristic(source), 0, next(counter), source)]
    while heap:
        f, g, _, v = heapq.heappop(heap)
        g = -g
        if g != best.get(v):
            continue
        if v == target:
            if not want_path:
                return g, None
            word = []
            while parent[v] is not None:
                v, s = parent[v]
                word.append(s)
            return g, word[::-1]
        g2 = g + 1
        for s in letters:
            w = step(v, s)
            old = best.get(w)
            if old is not None and old <= g2:
                continue
            if allowed is not None and not allowed(w):
                continue
            best[w] = g2
            if want_path:
                parent[w] = (v, s)
            heapq.heappush(heap, (g2 + heuristic(w), -g2, next(counter), w))
        if len(best) > cap:
            raise _Capped(len(best))
    return None, None


_GUIDES: dict = {}


def guide_ball(model: GroupModel, radius: int | None = None) -> BallCache:
    """Shared small ball whose exact lengths sharpen search heuristics."""
    if radius is None:
        radius = 5 if model.m <= 2 else 4
    key = (model.h.kind, model.m)
    hit = _GUIDES.get(key)
    if hit is None or hit.radius < radius:
        hit = ball(model, radius)
        _GUIDES[key] = hit
    return hit


def _target_heuristic(model: GroupModel, target, guide: BallCache | None = None):
    """h(v) = exact |v^-1 target| when it lies in the guide ball, else the retraction bound."""
    top = model.top
    if guide is None:

        def h(v):
            return payload_lower_bound(model, top.mul(top.inv(v), target))

        return h
    dist = guide.dist
    floor = guide.radius + 1

    def h(v):
        w = top.mul(top.inv(v), target)
        d = dist.get(w)
        if d is not None:
            return d
        lb = payload_lower_bound(model, w)
        return lb if lb > floor else floor

    return h


def word_length(model: GroupModel, g: GroupElement, cap: int = DEFAULT_CAP, cache: BallCache | None = None) -> int:
    """Exact |g|_{S_m}: cache lookup, then A*, then bidirectional BFS."""
    if g.model != model:
        g = model.embed(g)
    if cache is not None and cache.model == model:
        d = cache.dist.get(g.payload)
        if d is not None:
            return d
    ident = model.top.identity
    target = g.payload
    h = lambda v: payload_lower_bound(model, model.top.mul(model.top.inv(v), target))  # noqa: E731
    try:
        d, _ = _astar(model, ident, target, h, cap // 2)
        return d
    except _Capped:
        pass
    letters = model.letters
    d = bidirectional_distance(ident, target, lambda v: (model.step(v, s) for s in letters), cap=cap)
    return d


def geodesic_word(model: GroupModel, g: GroupElement, cap: int = DEFAULT_CAP, cache: BallCache | None = None) -> list[str]:
    """A geodesic spelling of g; with a covering ball it is the walk-back spelling that
    prefers the earliest letter of S_m at each step, so it is deterministic."""
    if g.model != model:
        g = model.embed(g)
    if cache is not None and g.payload in cache.dist:
        return _walk_back(model, g.payload, cache.dist)
    d, word = _astar(model, model.top.identity, g.payload, _target_heuristic(model, g.payload), cap, want_path=True)
    if word is None:
        raise BudgetExceeded("no geodesic found")
    return word


def _walk_back(model, payload, dist):
    word = []
    d = dist[payload]
    while d:
        for s in model.letters:
            w = model.step(payload, s)
            if dist.get(w) == d - 1:
                word.append(s.swapcase())
                payload = w
                d -= 1
                break
        else:  # pragma: no cover - a ball is closed under geodesic prefixes
            raise RuntimeError("ball cache is inconsistent")
    return word[::-1]


# ---------------------------------------------------------------------------
# ball-complement metric


@dataclass(frozen=True)
class AvoidantQuery:
    center: GroupElement
    r: int
    source: GroupElement
    target: GroupElement
    cap: int = DEFAULT_CAP


@dataclass
class AvoidantResult:
    status: str
    length: int | None
    letters: list[str] | None
    visited: int

    @property
    def finite(self) -> bool:
        return self.status == EXACT


class Membership:
    """Decides |v| < r for payloads, from a ball cache when possible, else by search."""

    def __init__(self, model: GroupModel, r: int, cache: BallCache | None = None, cap: int = DEFAULT_CAP):
        self.model = model
        self.r = r
        self.cap = cap
        if cache is not None and cache.model == model and cache.radius >= r - 1:
            self.inner = {p for p, d in cache.dist.items() if d < r}
        elif r <= 0:
            self.inner = set()
        else:
            self.inner = set(ball(model, r - 1, cap=cap).dist)

    def inside(self, payload) -> bool:
        return payload in self.inner


_MEMBERSHIP: dict = {}


def membership(model: GroupModel, r: int, cache: BallCache | None = None) -> Membership:
    key = (model.h.kind, model.m, r)
    hit = _MEMBERSHIP.get(key)
    if hit is None:
        hit = Membership(model, r, cache)
        if len(_MEMBERSHIP) > 32:
            _MEMBERSHIP.clear()
        _MEMBERSHIP[key] = hit
    return hit


def avoidant_distance(q: AvoidantQuery, cache: BallCache | None = None, want_path: bool = False) -> AvoidantResult:
    """Shortest path from source to target staying outside the open ball B(center, r)."""
    model = q.source.model
    top = model.top
    shift = top.inv(q.center.payload)
    src = top.mul(shift, q.source.payload)
    dst = top.mul(shift, q.target.payload)
    inside = membership(model, q.r, cache).inside if q.r > 0 else (lambda p: False)
    for name, p in (("source", src), ("target", dst)):
        if inside(p):
            raise InvalidQuery(f"{name} lies inside the open ball of radius {q.r}")
    outside = lambda p: not inside(p)  # noqa: E731
    # two-sided BFS wins on short, bushy searches; A* on long ones its heuristic can steer
    steps = [(s, lambda v, s=s: model.step(v, s)) for s in model.letters]
    try:
        word = bidirectional_path(src, dst, steps, cap=min(q.cap, BIDIRECTIONAL_BUDGET), allowed=outside)
    except BudgetExceeded:
        pass
    else:
        if word is None:
            return AvoidantResult(DISCONNECTED, None, None, 0)
        return AvoidantResult(EXACT, len(word), word if want_path else None, 0)
    h = _target_heuristic(model, dst)
    try:
        d, word = _astar(model, src, dst, h, q.cap, allowed=outside, want_path=want_path)
    except _Capped as exc:
        return AvoidantResult(CAP_EXCEEDED, None, None, exc.args[0])
    if d is None:
        return AvoidantResult(DISCONNECTED, None, None, 0)
    return AvoidantResult(EXACT, d, word, 0)


def sphere_components(model: GroupModel, r: int, probe_radius: int | None = None, cap: int = DEFAULT_CAP,
                      cache: BallCache | None = None) -> list[list]:
    """Partition S(e, r) by connectivity in the annulus r/2 <= |v| <= probe_radius."""
    if r == 0:
        return [[model.top.identity]]
    probe = probe_radius if probe_radius is not None else r + 2
    if probe < r:
        raise ValueError("probe radius must be at least r")
    if cache is None or cache.radius < probe or cache.model != model:
        cache = ball(model, probe, cap=cap)
    dist = cache.dist
    low = r / 2
    parent: dict = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p, d in dist.items():
        if low <= d <= probe:
            parent[p] = p
    for p in list(parent):
        for s in model.letters:
            q = model.step(p, s)
            if q in parent:
                a, b = find(p), find(q)
                if a != b:
                    parent[a] = b
    groups: dict = {}
    for p in cache.sphere(r):
        groups.setdefault(find(p), []).append(p)
    return sorted(groups.values(), key=len, reverse=True)


# ---------------------------------------------------------------------------
# exact avoidant distance through separating a_m-strips


def lower_abelian(model: GroupModel, payload) -> int:
    """Image under a_0..a_{m-1} -> 1, everything else (a_m included) -> 0."""
    a = model.top.abelian(payload)[0]
    return a - sum(payload[1]) if model.m > 1 else a


class PieceSolver:
    """Memoised exact avoidant distances (with witnesses) for one ball B(center, r)."""

    def __init__(self, model: GroupModel, center, r: int, cap: int = DEFAULT_CAP, cache: BallCache | None = None,
                 budget: int | None = None):
        self.model = model
        self.r = r
        self.cap = cap  # states per piece
        self.budget = budget  # states over all pieces, unlimited when None
        self.shift = model.top.inv(center)
        inside = membership(model, r, cache).inside if r > 0 else (lambda p: False)
        self._inside = inside
        self.memo: dict = {}
        self.states = 0
        self.guide = guide_ball(model)

    def outside(self, payload) -> bool:
        return not self._inside(self.model.top.mul(self.shift, payload))

    def _remaining(self) -> int:
        if self.budget is None:
            return self.cap
        left = self.budget - self.states
        if left <= 0:
            raise _Capped(self.states)
        return min(left, self.cap)

    def solve(self, a, b):
        """(length, word) of a shortest avoidant path a -> b; length None if disconnected."""
        key = (a, b)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        top = self.model.top
        shift = self.shift
        inside = self._inside
        allowed = (lambda p: not inside(top.mul(shift, p))) if shift != top.identity else (lambda p: not inside(p))
        model = self.model
        h = _target_heuristic(model, b, self.guide)
        # A* settles most pieces quickly; the ones it cannot steer go two-sided
        try:
            d, word = _astar(model, a, b, h, min(self._remaining(), PIECE_PROBE), allowed=allowed, want_path=True)
        except _Capped as exc:
            self.states += exc.args[0]
        else:
            hit = (d, word)
            self.memo[key] = hit
            return hit
        steps = [(s, lambda v, s=s: model.step(v, s)) for s in model.letters]
        stats: dict = {}
        try:
            word = bidirectional_path(a, b, steps, cap=min(self._remaining(), BIDIRECTIONAL_BUDGET),
                                      allowed=allowed, stats=stats)
        except BudgetExceeded:
            self.states += stats.get("states", 0)
        else:
            self.states += stats.get("states", 0)
            hit = (None if word is None else len(word), word)
            self.memo[key] = hit
            return hit
        try:
            d, word = _astar(self.model, a, b, h, self._remaining(), allowed=allowed, want_path=True)
        except _Capped as exc:
            self.states += exc.args[0]
            raise _Capped(self.states) from None
        hit = (d, word)
        self.memo[key] = hit
        return hit


@dataclass
class StripCrossing:
    sign: int
    prefix: object  # payload P_i; crossing i leaves P_i * s_i^k through the stable letter
    after: object  # payload P_i * t^sign


def separating_strips(model: GroupModel, x, y) -> tuple[list[StripCrossing], list]:
    """Top-level strips separating x from y, read off the reduced form of x^-1 y."""
    top = model.top
    w = top.mul(top.inv(x), y)
    pieces, signs = w
    strips = []
    cur = top.mul(x, ((pieces[0],), ()))
    for i, s in enumerate(signs):
        after = top.mul_stable(cur, s)
        strips.append(StripCrossing(s, cur, after))
        cur = top.mul(after, ((pieces[i + 1],), ()))
    return strips, pieces


def strip_distance(model: GroupModel, center: GroupElement, r: int, source: GroupElement, target: GroupElement,
                   cap: int = DEFAULT_CAP, cache: BallCache | None = None, solver: PieceSolver | None = None,
                   budget: int | None = None):
    """Exact avoidant distance by optimising over the crossing points of every separating strip.

    Any avoidant path from source to target crosses each separating strip,
    crossing i happening along an edge (P_i s^k, P_i s^k t^e); cutting the path
    at those edges shows the distance is the minimum over (k_1..k_n) of the
    avoidant pieces between consecutive crossings plus one per crossing.
    Returns an AvoidantResult with the concatenated witness path. ``cap`` bounds
    each piece search; ``budget``, when given, bounds their total.
    """
    top = model.top
    x, y = source.payload, target.payload
    if model.m < 2 or not top.mul(top.inv(x), y)[1]:
        return avoidant_distance(AvoidantQuery(center, r, source, target, cap), cache, want_path=True)
    solver = solver or PieceSolver(model, center.payload, r, cap, cache, budget)
    for p in (x, y):
        if not solver.outside(p):
            raise InvalidQuery("endpoint lies inside the open ball")
    strips, _ = separating_strips(model, x, y)
    n = len(strips)
    m = model.m
    low = m - 1

    def gens(sign):
        return (0, low) if sign == 1 else (low, 0)

    def p_of(i, k):
        st = strips[i]
        j, _ = gens(st.sign)
        return top.mul(st.prefix, model._power_payload(m, j, k))

    def q_of(i, k):
        st = strips[i]
        _, j = gens(st.sign)
        return top.mul(st.after, model._power_payload(m, j, k))

    lb = lambda a, b: payload_lower_bound(model, top.mul(top.inv(a), b))  # noqa: E731

    def candidates(i, ub):
        c1 = lower_abelian(model, top.mul(top.inv(x), strips[i].prefix))
        c2 = lower_abelian(model, top.mul(top.inv(strips[i].after), y))
        out = []
        # |c1 + k| + 1 + |c2 - k| < ub bounds k to a finite window
        lo_k, hi_k = -c1 - ub, c2 + ub
        for k in range(lo_k, hi_k + 1):
            if abs(c1 + k) + 1 + abs(c2 - k) + (n - 1) >= ub:
                continue
            p, q = p_of(i, k), q_of(i, k)
            if not (solver.outside(p) and solver.outside(q)):
                continue
            if lb(x, p) + 1 + lb(q, y) >= ub:
                continue
            out.append(k)
        return out

    def layered(ub):
        cand = [candidates(i, ub) for i in range(n)]
        if any(not c for c in cand):
            return None
        counter = itertools.count()
        # node: (i, k) = standing at p_i(k); i == n is the target
        heap = []
        best: dict = {}
        parent: dict = {}
        for k in cand[0]:
            p = p_of(0, k)
            heapq.heappush(heap, (lb(x, p) + lb(p, y), 0, next(counter), False, ("s",), (0, k), lb(x, p)))
        while heap:
            f, _, _, exact, frm, node, g_guess = heapq.heappop(heap)
            if f >= ub:
                return None
            if not exact:
                a = x if frm == ("s",) else (q_of(*frm) if node != ("t",) else q_of(*frm))
                b = y if node == ("t",) else p_of(*node)
                d, _ = solver.solve(a, b)
                if d is None:
                    continue
                base_g = 0 if frm == ("s",) else best[frm] + 1
                g = base_g + d
                if node in best and best[node] <= g:
                    continue
                hval = 0 if node == ("t",) else lb(b, y)
                heapq.heappush(heap, (g + hval, -g, next(counter), True, frm, node, g))
                continue
            g = g_guess
            if node in best and best[node] <= g:
                continue
            best[node] = g
            parent[node] = frm
            if node == ("t",):
                return g, parent
            i, k = node
            q = q_of(i, k)
            if i + 1 == n:
                heapq.heappush(heap, (g + 1 + lb(q, y), -g, next(counter), False, node, ("t",), None))
                continue
            for k2 in cand[i + 1]:
                p2 = p_of(i + 1, k2)
                est = g + 1 + lb(q, p2) + lb(p2, y)
                if est < ub:
                    heapq.heappush(heap, (est, -g, next(counter), False, node, (i + 1, k2), None))
        return None

    ub = 1
    found = None
    # grow the budget geometrically; each round is exact below its budget
    while found is None:
        ub = ub * 2 + 8
        if ub > cap:
            return AvoidantResult(CAP_EXCEEDED, None, None, solver.states)
        try:
            found = layered(ub)
        except _Capped as exc:
            return AvoidantResult(CAP_EXCEEDED, None, None, exc.args[0])
        if found is None and ub > 64 * (n + 1) * (r + 2) ** 2:
            return AvoidantResult(DISCONNECTED, None, None, 0)
    g, parent = found
    # rebuild the witness word
    chain = []
    node = ("t",)
    while node != ("s",):
        chain.append(node)
        node = parent[node]
    chain.reverse()
    word: list[str] = []
    prev = x
    t_name = f"a{m}"
    for node in chain:
        b = y if node == ("t",) else p_of(*node)
        _, piece = solver.solve(prev, b)
        word.extend(piece)
        if node != ("t",):
            i, k = node
            word.append(t_name if strips[i].sign == 1 else t_name.upper())
            prev = q_of(i, k)
    return AvoidantResult(EXACT, g, word, len(solver.memo))


def bidirectional_path(start, goal, steps: Sequence[tuple[str, Callable]], cap: int = DEFAULT_CAP,
                       allowed: Callable | None = None, stats: dict | None = None) -> list[str] | None:
    """Shortest word from start to goal; ``steps`` pairs each letter with its right action.

    Letters are expected to come in mutually inverse pairs (swapcase), which is
    what lets the backward search reuse the same moves. Vertices failing
    ``allowed`` are never entered. ``stats["states"]`` receives the number of states stored.
    """
    if start == goal:
        return []
    if stats is not None:
        stats["states"] = 2
    seen = [{start: None}, {goal: None}]
    depth = [{start: 0}, {goal: 0}]
    fronts = [[start], [goal]]
    total = 2
    while fronts[0] and fronts[1]:
        side = 0 if len(fronts[0]) <= len(fronts[1]) else 1
        mine, other = seen[side], seen[1 - side]
        mdepth, odepth = depth[side], depth[1 - side]
        nxt = []
        meet = None
        for v in fronts[side]:
            dv = mdepth[v] + 1
            for letter, act in steps:
                w = act(v)
                if w in mine:
                    continue
                if allowed is not None and not allowed(w):
                    continue
                mine[w] = (v, letter)
                mdepth[w] = dv
                nxt.append(w)
                if w in other and (meet is None or dv + odepth[w] < meet[0]):
                    meet = (dv + odepth[w], w)
            if meet is None and total + len(nxt) > cap:
                if stats is not None:
                    stats["states"] = total + len(nxt)
                raise BudgetExceeded(f"bidirectional search exceeded {cap} states")
        total += len(nxt)
        if stats is not None:
            stats["states"] = total
        if meet is not None:
            return _join(seen, meet[1])
        fronts[side] = nxt
    return None


def _join(seen, meet):
    left = []
    v = meet
    while seen[0][v] is not None:
        v, letter = seen[0][v]
        left.append(letter)
    right = []
    v = meet
    while seen[1][v] is not None:
        v, letter = seen[1][v]
        right.append(letter.swapcase())
    return left[::-1] + right
