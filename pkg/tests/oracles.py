"""Independent reference implementations used to check the library.

Nothing here imports divlab: each oracle is a slow, direct computation.
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction

# ---------------------------------------------------------------------------
# BS(1,2) = <c, t | t c t^-1 = c^2> by naive string rewriting


def _free_reduce(word):
    out = []
    for x in word:
        if out and out[-1] != x and out[-1].lower() == x.lower():
            out.pop()
        else:
            out.append(x)
    return out


# t c = c c t, t C = C C t push t to the right; c T = T c c, C T = T C C push T to the left
_RULES = {
    ("t", "c"): ["c", "c", "t"],
    ("t", "C"): ["C", "C", "t"],
    ("c", "T"): ["T", "c", "c"],
    ("C", "T"): ["T", "C", "C"],
}


def bs12_normal_form(word) -> tuple[int, int, int]:
    """(i, k, j) with word = t^-i c^k t^j, i, j >= 0 and k odd whenever i and j are both positive."""
    w = _free_reduce(list(word))
    changed = True
    while changed:
        changed = False
        for pos in range(len(w) - 1):
            rep = _RULES.get((w[pos], w[pos + 1]))
            if rep is not None:
                w = _free_reduce(w[:pos] + rep + w[pos + 2:])
                changed = True
                break
    i = 0
    while i < len(w) and w[i] == "T":
        i += 1
    j = 0
    while j < len(w) - i and w[len(w) - 1 - j] == "t":
        j += 1
    middle = w[i:len(w) - j]
    assert all(x in "cC" for x in middle), w
    k = sum(1 if x == "c" else -1 for x in middle)
    # pinch T c^(2l) t = c^l
    while i and j and k % 2 == 0:
        i, j, k = i - 1, j - 1, k // 2
    return i, k, j


def bs12_affine(word) -> tuple[Fraction, int]:
    """The element as the map y -> 2^e y + s, returned as (s, e)."""
    s, e = Fraction(0), 0
    for x in word:
        # compose on the right: (s, e) * g = y -> 2^e g(y) + s
        if x == "c":
            s += Fraction(2) ** e
        elif x == "C":
            s -= Fraction(2) ** e
        elif x == "t":
            e += 1
        elif x == "T":
            e -= 1
        else:
            raise ValueError(x)
    return s, e


def bs12_ball(radius: int) -> dict:
    """Normal form -> (distance, a geodesic word) over the ball of the given radius in {c, t}."""
    start = bs12_normal_form([])
    seen = {start: (0, [])}
    frontier = deque([start])
    while frontier:
        nf = frontier.popleft()
        d, w = seen[nf]
        if d == radius:
            continue
        for x in "cCtT":
            w2 = w + [x]
            nf2 = bs12_normal_form(w2)
            if nf2 not in seen:
                seen[nf2] = (d + 1, w2)
                frontier.append(nf2)
    return seen


# ---------------------------------------------------------------------------
# breadth-first search on an arbitrary implicit graph


def bfs_distance(start, goal, neighbours, limit: int) -> int | None:
    if start == goal:
        return 0
    seen = {start}
    layer = [start]
    for d in range(1, limit + 1):
        nxt = []
        for v in layer:
            for w in neighbours(v):
                if w == goal:
                    return d
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        layer = nxt
    return None


def bfs_distance_two_sided(start, goal, neighbours, limit: int) -> int | None:
    """Same answer as bfs_distance for undirected graphs, growing whole layers from both ends."""
    if start == goal:
        return 0
    dist = [{start: 0}, {goal: 0}]
    layers = [[start], [goal]]
    depth = 0
    while depth < limit and layers[0] and layers[1]:
        side = 0 if len(layers[0]) <= len(layers[1]) else 1
        mine, other = dist[side], dist[1 - side]
        nxt = []
        best = None
        for v in layers[side]:
            for w in neighbours(v):
                if w in mine:
                    continue
                mine[w] = mine[v] + 1
                nxt.append(w)
                if w in other:
                    cand = mine[w] + other[w]
                    best = cand if best is None else min(best, cand)
        if best is not None:
            return best if best <= limit else None
        layers[side] = nxt
        depth += 1
    return None


# ---------------------------------------------------------------------------
# defining relators of G_m, as letter lists


def relators(h_kind: str, m: int) -> list[list[str]]:
    second = "d" if h_kind == "FreeAbelian2" else "t"
    rels = []
    if h_kind == "FreeAbelian2":
        rels.append(["c", "d", "C", "D"])
    else:
        rels.append(["t", "c", "T", "C", "C"])
    rels.append(["a0", "a1", "A0", "A1"])
    rels.append(["c", "a1", "A0"])  # c = a0 a1^-1
    for x in ("c", second, "a0", "a1"):
        rels.append(["b", x, "B", x.upper() if len(x) == 1 else "A" + x[1:]])
    for j in range(2, m + 1):
        rels.append([f"A{j}", "a0", f"a{j}", f"A{j - 1}"])
    return rels


def inverse_word(word):
    out = []
    for x in reversed(word):
        out.append(x.swapcase() if len(x) == 1 else (x[0].swapcase() + x[1:]))
    return out
