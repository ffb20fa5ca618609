"""Exact arithmetic in the tower G_1 < G_2 < ... < G_m.

G_1 = (H *_{c = a0 a1^-1} Z^2) x Z<b> and G_m is the HNN extension of G_{m-1}
with stable letter a_m conjugating <a0> onto <a_{m-1}>.  H is either Z^2 on
{c, d} or BS(1,2) on {c, t} realised as dyadic affine maps x -> 2^e x + d.

Every element is stored as a canonical payload (nested tuples of ints), so
payload equality is group equality.  Normal forms keep the "subgroup part"
at the right end, which makes right multiplication by a generator local:

* amalgam K:  x_1 ... x_n c^k, the x_i alternate between the two factors and
  are left-coset representatives modulo <c>;
* HNN level L:  g_0 t^e1 g_1 ... t^en g_n with g_{i-1} a left-coset
  representative modulo <a0> (if e_i = +1) or <a_{L-1}> (if e_i = -1), and no
  pinch, i.e. no g_i = 1 sitting between opposite stable letters.

Letters are strings: lowercase generator names (``c``, ``d``/``t``, ``a0``,
``a1``, ``b``, ``a2`` ...), uppercase for inverses (``A2`` is a2^-1).
"""

from __future__ import annotations

import re
from fractions import Fraction
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .errors import InvalidWord, ModelMismatch, UnsupportedBase, UnsupportedLevel

KEY_VERSION = "v1"

FREE_ABELIAN = "FreeAbelian2"
BS12 = "BS12"
H_KINDS = (FREE_ABELIAN, BS12)

_TOKEN = re.compile(r"[A-Za-z]\d*")


def invert_letter(letter: str) -> str:
    return letter.swapcase()


def letter_base(letter: str) -> tuple[str, int]:
    """Split a letter into (generator name, +1/-1)."""
    return letter.lower(), (1 if letter[0].islower() else -1)


def tokenize(word: str | Sequence[str]) -> list[str]:
    if isinstance(word, str):
        stripped = word.replace(" ", "").replace("*", "")
        tokens = _TOKEN.findall(stripped)
        if "".join(tokens) != stripped:
            raise InvalidWord(f"cannot tokenize {word!r}")
        return tokens
    return list(word)


def invert_word(word: Sequence[str]) -> list[str]:
    return [invert_letter(x) for x in reversed(word)]


# ---------------------------------------------------------------------------
# dyadic rationals as (numerator, exponent): value = n / 2**x, n odd when x > 0


def _dy_norm(n: int, x: int) -> tuple[int, int]:
    if n == 0:
        return 0, 0
    if x <= 0:
        return n << -x, 0
    tz = (n & -n).bit_length() - 1
    s = tz if tz < x else x
    return n >> s, x - s


def _dy_add(n1: int, x1: int, n2: int, x2: int) -> tuple[int, int]:
    x = x1 if x1 > x2 else x2
    return _dy_norm((n1 << (x - x1)) + (n2 << (x - x2)), x)


def _dy_scale(n: int, x: int, e: int) -> tuple[int, int]:
    """Multiply n/2^x by 2^e."""
    return _dy_norm(n, x - e)


# ---------------------------------------------------------------------------
# factor groups of the amalgam; each knows how to split off its <c> part


class _FreeAbelianH:
    """H = Z^2 = <c, d>; element (p, q) = c^p d^q."""

    kind = FREE_ABELIAN
    second = "d"
    identity = (0, 0)

    @staticmethod
    def mul(x, y):
        return (x[0] + y[0], x[1] + y[1])

    @staticmethod
    def inv(x):
        return (-x[0], -x[1])

    @staticmethod
    def cpow(k):
        return (k, 0)

    @staticmethod
    def split(z):
        # z = d^q c^p, representative d^q
        return (0, z[1]), z[0]

    @staticmethod
    def generator(name):
        return {"c": (1, 0), "d": (0, 1)}[name]

    @staticmethod
    def key(x):
        return f"(d {x[1]})" if x[0] == 0 else f"(cd {x[0]} {x[1]})"

    @staticmethod
    def second_exponent(x):
        return x[1]

    @staticmethod
    def c_exponent(x):
        """Exponent n with x = c^n, or None."""
        return x[0] if x[1] == 0 else None

    @staticmethod
    def length_lower_bound(x, f):
        return abs(x[0]) + abs(x[1])


class _BS12H:
    """H = BS(1,2) = <c, t | t c t^-1 = c^2>; element (n, x, e) is y -> 2^e y + n/2^x."""

    kind = BS12
    second = "t"
    identity = (0, 0, 0)

    @staticmethod
    def mul(a, b):
        n2, x2 = _dy_scale(b[0], b[1], a[2])
        n, x = _dy_add(a[0], a[1], n2, x2)
        return (n, x, a[2] + b[2])

    @staticmethod
    def inv(a):
        n, x = _dy_scale(-a[0], a[1], -a[2])
        return (n, x, -a[2])

    @staticmethod
    def cpow(k):
        return (k, 0, 0)

    @staticmethod
    def split(z):
        # z = rep * c^k with rep translation in [0, 2^e)
        n, x, e = z
        big = max(x, 0, -e)
        v = n << (big - x)
        modulus = 1 << (big + e)
        r = v % modulus
        k = (v - r) // modulus
        rn, rx = _dy_norm(r, big)
        return (rn, rx, e), k

    @staticmethod
    def generator(name):
        return {"c": (1, 0, 0), "t": (0, 0, 1)}[name]

    @staticmethod
    def key(a):
        return f"(aff {a[0]} {a[1]} {a[2]})"

    @staticmethod
    def second_exponent(a):
        return a[2]

    @staticmethod
    def c_exponent(a):
        return a[0] if a[1] == 0 and a[2] == 0 else None

    @staticmethod
    def length_lower_bound(a, f):
        if a[2] == 0 and a[1] == 0:
            return f(abs(a[0])) if a[0] else 0
        return max(abs(a[2]), 1)


class _PlaneA:
    """The Z^2 = <a0, a1> factor; (p, q) = a0^p a1^q, c = a0 a1^-1."""

    identity = (0, 0)
    mul = staticmethod(_FreeAbelianH.mul)
    inv = staticmethod(_FreeAbelianH.inv)

    @staticmethod
    def cpow(k):
        return (k, -k)

    @staticmethod
    def split(z):
        # a0^p a1^q = a0^(p+q) c^(-q)
        return (z[0] + z[1], 0), -z[1]

    @staticmethod
    def key(x):
        return f"(A {x[0]})"


H_MODELS = {FREE_ABELIAN: _FreeAbelianH, BS12: _BS12H}


# ---------------------------------------------------------------------------
# level objects: payload arithmetic for G_1 and each HNN level


class _Level1:
    """G_1 = K x <b>; payload ((syllables, k), beta)."""

    level = 1

    def __init__(self, h):
        self.h = h
        self.factors = (h, _PlaneA)
        self.identity = (((), 0), 0)
        self._gen = {
            "c": (0, h.cpow(1)),
            h.second: (0, h.generator(h.second)),
            "a0": (1, (1, 0)),
            "a1": (1, (0, 1)),
        }
        self._gen_inv = {name: (tag, self.factors[tag].inv(v)) for name, (tag, v) in self._gen.items()}
        self.names = ("c", h.second, "a0", "a1", "b")
        self._pow_cache: dict = {}

    # -- amalgam K -----------------------------------------------------------
    def k_mul_factor(self, kx, tag, y):
        syls, k = kx
        f = self.factors[tag]
        if syls and syls[-1][0] == tag:
            z = f.mul(f.mul(syls[-1][1], f.cpow(k)), y)
            syls = syls[:-1]
        else:
            z = f.mul(f.cpow(k), y)
        rep, k2 = f.split(z)
        if rep != f.identity:
            syls = syls + ((tag, rep),)
        return (syls, k2)

    def k_mul(self, kx, ky):
        for tag, rep in ky[0]:
            kx = self.k_mul_factor(kx, tag, rep)
        if ky[1]:
            kx = self.k_mul_factor(kx, 0, self.h.cpow(ky[1]))
        return kx

    def k_inv(self, kx):
        syls, k = kx
        out = ((), 0)
        if k:
            out = self.k_mul_factor(out, 0, self.h.cpow(-k))
        for tag, rep in reversed(syls):
            out = self.k_mul_factor(out, tag, self.factors[tag].inv(rep))
        return out

    def k_decompose(self, kx, j):
        """kx = rep * a_j^e for j in {0, 1}; rep canonical for the coset."""
        syls, k = kx
        if syls and syls[-1][0] == 1:
            prefix = syls[:-1]
            p, q = syls[-1][1][0] + k, -k
        else:
            prefix = syls
            p, q = k, -k
        if j == 0:
            return self.k_mul_factor((prefix, 0), 1, (0, q)), p
        return self.k_mul_factor((prefix, 0), 1, (p, 0)), q

    # -- level interface -----------------------------------------------------
    def mul_letter(self, x, name, sign):
        if name == "b":
            return (x[0], x[1] + sign)
        try:
            tag, v = (self._gen if sign > 0 else self._gen_inv)[name]
        except KeyError:
            raise InvalidWord(f"unknown letter {name!r} at level 1") from None
        return (self.k_mul_factor(x[0], tag, v), x[1])

    def mul(self, x, y):
        return (self.k_mul(x[0], y[0]), x[1] + y[1])

    def inv(self, x):
        return (self.k_inv(x[0]), -x[1])

    def decompose(self, x, j):
        if j not in (0, 1):
            raise UnsupportedLevel(f"no coset decomposition for a{j} at level 1")
        rep, e = self.k_decompose(x[0], j)
        return (rep, x[1]), e

    def power(self, j, k):
        key = (j, k)
        hit = self._pow_cache.get(key)
        if hit is None:
            v = (k, 0) if j == 0 else (0, k)
            hit = (self.k_mul_factor(((), 0), 1, v), 0)
            if len(self._pow_cache) < 4096:
                self._pow_cache[key] = hit
        return hit

    def key(self, x):
        syls, k = x[0]
        parts = " ".join(self.factors[tag].key(rep) for tag, rep in syls)
        inner = f"(K {k}{' ' + parts if parts else ''})"
        return f"(G1 {inner} {x[1]})"

    # abelian data: (all a_j exponent sum, second-letter exponent, b exponent)
    def abelian(self, x):
        a = 0
        s = 0
        for tag, rep in x[0][0]:
            if tag == 1:
                a += rep[0]
            else:
                s += self.h.second_exponent(rep)
        return a, s, x[1]

    def h_images(self, x):
        """Images of the K-part under the retractions a0->c, a1->1 and a0->1, a1->c^-1."""
        h = self.h
        psi = h.identity
        psi_prime = h.identity
        for tag, rep in x[0][0]:
            if tag == 1:
                psi = h.mul(psi, h.cpow(rep[0]))
            else:
                psi = h.mul(psi, rep)
                psi_prime = h.mul(psi_prime, rep)
        ck = h.cpow(x[0][1])
        return h.mul(psi, ck), h.mul(psi_prime, ck)


class _HnnLevel:
    """G_L = <G_{L-1}, t | t^-1 a0 t = a_{L-1}>; payload (pieces, signs)."""

    def __init__(self, level, base):
        self.level = level
        self.base = base
        self.name = f"a{level}"
        self.top_b = level - 1
        self.identity = ((base.identity,), ())
        self.names = base.names + (self.name,)
        self._pow_cache: dict = {}

    def mul_stable(self, x, eps):
        pieces, signs = x
        base = self.base
        if eps == 1:
            rep, k = base.decompose(pieces[-1], 0)
            conj = base.power(self.top_b, k)
        else:
            rep, k = base.decompose(pieces[-1], self.top_b)
            conj = base.power(0, k)
        if signs and signs[-1] == -eps and rep == base.identity:
            merged = base.mul(pieces[-2], conj) if k else pieces[-2]
            return (pieces[:-2] + (merged,), signs[:-1])
        return (pieces[:-1] + (rep, conj), signs + (eps,))

    def mul_letter(self, x, name, sign):
        if name == self.name:
            return self.mul_stable(x, sign)
        pieces = x[0]
        return (pieces[:-1] + (self.base.mul_letter(pieces[-1], name, sign),), x[1])

    def _mul_base(self, x, g):
        pieces = x[0]
        return (pieces[:-1] + (self.base.mul(pieces[-1], g),), x[1])

    def mul(self, x, y):
        pieces, signs = y
        for i, g in enumerate(pieces):
            if g != self.base.identity:
                x = self._mul_base(x, g)
            if i < len(signs):
                x = self.mul_stable(x, signs[i])
        return x

    def inv(self, x):
        pieces, signs = x
        base = self.base
        out = ((base.inv(pieces[-1]),), ())
        for i in range(len(signs) - 1, -1, -1):
            out = self.mul_stable(out, -signs[i])
            if pieces[i] != base.identity:
                out = self._mul_base(out, base.inv(pieces[i]))
        return out

    def can_pinch(self, x, eps):
        pieces, signs = x
        if not signs or signs[-1] != -eps:
            return False
        rep, _ = self.base.decompose(pieces[-1], 0 if eps == 1 else self.top_b)
        return rep == self.base.identity

    def decompose(self, x, j):
        if j == 0:
            rep, k = self.base.decompose(x[0][-1], 0)
            return (x[0][:-1] + (rep,), x[1]), k
        if j != self.level:
            raise UnsupportedLevel(f"no coset decomposition for a{j} at level {self.level}")
        shift = 0
        while x[1]:
            eps = -x[1][-1]
            if not self.can_pinch(x, eps):
                break
            x = self.mul_stable(x, eps)
            shift += eps
        return x, -shift

    def power(self, j, k):
        key = (j, k)
        hit = self._pow_cache.get(key)
        if hit is None:
            if j == self.level:
                sign = 1 if k > 0 else -1
                hit = ((self.base.identity,) * (abs(k) + 1), (sign,) * abs(k))
            else:
                hit = ((self.base.power(j, k),), ())
            if len(self._pow_cache) < 4096:
                self._pow_cache[key] = hit
        return hit

    def key(self, x):
        pieces, signs = x
        parts = [self.base.key(pieces[0])]
        for s, g in zip(signs, pieces[1:]):
            parts.append("+" if s > 0 else "-")
            parts.append(self.base.key(g))
        return f"(G{self.level} {' '.join(parts)})"

    def abelian(self, x):
        """(exponent sum of a_0..a_L, second-letter sum, b sum)."""
        a = s = b = 0
        for g in x[0]:
            da, ds, db = self.base.abelian(g)
            a += da
            s += ds
            b += db
        return a + sum(x[1]), s, b


# ---------------------------------------------------------------------------
# public model / element layer


@dataclass(frozen=True)
class HModel:
    kind: str
    extrinsic_profile_constant: Fraction  # the calibrated C1

    def f(self, x: float) -> int | float:
        """Non-decreasing representative of the extrinsic length of <c> in H."""
        if self.kind == FREE_ABELIAN:
            return x
        if x < 2:
            return 1
        return max(1, int(x).bit_length() - 1)


# Calibrated C1 for BS(1,2): the maximum over 1 <= n <= 512 of |c^n|_T / (f(n) + 1),
# so that f(n) <= |c^n|_T <= C1 f(n) + C1 on that range.  Recomputed in the tests.
BS12_C1 = Fraction(19, 8)


def _calibrated_c1(kind):
    return Fraction(1) if kind == FREE_ABELIAN else BS12_C1


def make_h(kind: str) -> HModel:
    if kind not in H_MODELS:
        raise UnsupportedBase(f"unknown base group {kind!r}; expected one of {H_KINDS}")
    return HModel(kind, _calibrated_c1(kind))


class GroupModel:
    """One group G_m of the tower over a chosen H, with generating set S_m."""

    def __init__(self, h_kind: str, m: int):
        if h_kind not in H_MODELS:
            raise UnsupportedBase(f"unknown base group {h_kind!r}; expected one of {H_KINDS}")
        if not isinstance(m, int) or m < 1:
            raise UnsupportedLevel(f"level must be >= 1, got {m!r}")
        self.h = make_h(h_kind)
        self.m = m
        hops = H_MODELS[h_kind]
        levels = [None, _Level1(hops)]
        for level in range(2, m + 1):
            levels.append(_HnnLevel(level, levels[-1]))
        self._levels = levels
        self.top = levels[m]
        self.generators: tuple[str, ...] = self.top.names
        self.letters: tuple[str, ...] = tuple(
            x for g in self.generators for x in (g, invert_letter(g))
        )
        self._letter_args = {x: letter_base(x) for x in self.letters}
        self.descriptor = f"G{m}[{h_kind}]"

    def __repr__(self):
        return f"GroupModel({self.h.kind!r}, {self.m})"

    def __eq__(self, other):
        return isinstance(other, GroupModel) and (self.h.kind, self.m) == (other.h.kind, other.m)

    def __hash__(self):
        return hash((self.h.kind, self.m))

    @property
    def second(self) -> str:
        return H_MODELS[self.h.kind].second

    def level_ops(self, level: int):
        return self._levels[level]

    # payload-level fast paths used by the search code
    def step(self, payload, letter: str):
        try:
            name, sign = self._letter_args[letter]
        except KeyError:
            raise InvalidWord(f"letter {letter!r} not in S_{self.m}") from None
        return self.top.mul_letter(payload, name, sign)

    def wrap(self, payload) -> "GroupElement":
        return GroupElement(self, payload)

    def identity(self) -> "GroupElement":
        return GroupElement(self, self.top.identity)

    def element(self, word: str | Sequence[str] = ()) -> "GroupElement":
        return eval_word(self, word)

    def gen(self, letter: str) -> "GroupElement":
        return eval_word(self, [letter])

    def power(self, letter: str, k: int) -> "GroupElement":
        name, sign = letter_base(letter)
        if name == "c" or name == "b" or name == self.second:
            return eval_word(self, [letter] * abs(k) if k >= 0 else [invert_letter(letter)] * -k)
        j = int(name[1:])
        if j > self.m:
            raise UnsupportedLevel(f"a{j} does not exist in G_{self.m}")
        return GroupElement(self, self._power_payload(self.m, j, sign * k))

    def _power_payload(self, level, j, k):
        if level == 1:
            return self._levels[1].power(j, k)
        ops = self._levels[level]
        if j == level:
            return ops.power(j, k)
        return ((self._power_payload(level - 1, j, k),), ())

    def embed(self, g: "GroupElement") -> "GroupElement":
        """Image of an element of a lower level G_j under G_j -> G_m."""
        if g.model.h.kind != self.h.kind or g.model.m > self.m:
            raise ModelMismatch(f"cannot embed {g.model!r} into {self!r}")
        payload = g.payload
        for _ in range(self.m - g.model.m):
            payload = ((payload,), ())
        return GroupElement(self, payload)

    def restrict(self, g: "GroupElement", level: int) -> "GroupElement | None":
        """The same element viewed in G_level, or None if it is not in that subgroup."""
        payload = descend(g.model, g.payload, level)
        if payload is None:
            return None
        return GroupElement(make_model(self.h.kind, level), payload)


def descend(model: GroupModel, payload, level: int):
    """Payload of the element in G_level, or None when it needs higher stable letters."""
    for _ in range(model.m - level):
        if payload[1]:
            return None
        payload = payload[0][0]
    return payload


def lowest_level(model: GroupModel, payload) -> tuple[int, object]:
    level = model.m
    while level > 1 and not payload[1]:
        payload = payload[0][0]
        level -= 1
    return level, payload


_MODEL_CACHE: dict = {}


def make_model(h_kind: str, m: int) -> GroupModel:
    key = (h_kind, m)
    model = _MODEL_CACHE.get(key)
    if model is None:
        model = GroupModel(h_kind, m)
        _MODEL_CACHE[key] = model
    return model


@dataclass(frozen=True, eq=False)
class GroupElement:
    model: GroupModel
    payload: object

    def _check(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        if other.model != self.model:
            raise ModelMismatch(f"{self.model!r} vs {other.model!r}")
        return None

    def __eq__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        return self.model == other.model and self.payload == other.payload

    def __hash__(self):
        return hash(self.payload)

    def __mul__(self, other):
        return multiply(self, other)

    def __invert__(self):
        return invert(self)

    def inverse(self):
        return invert(self)

    def __pow__(self, k: int):
        out = self.model.identity()
        base = self if k >= 0 else invert(self)
        for _ in range(abs(k)):
            out = multiply(out, base)
        return out

    def is_identity(self) -> bool:
        return self.payload == self.model.top.identity

    @cached_property
    def key(self) -> str:
        return f"{KEY_VERSION}:{self.model.top.key(self.payload)}"

    def stable_count(self) -> int:
        """Number of top-level stable letters in the reduced form (0 at level 1)."""
        return len(self.payload[1]) if self.model.m > 1 else 0

    def __repr__(self):
        return f"<{self.model.descriptor} {self.key}>"


def multiply(g: GroupElement, h: GroupElement) -> GroupElement:
    if g.model != h.model:
        raise ModelMismatch(f"{g.model!r} vs {h.model!r}")
    return GroupElement(g.model, g.model.top.mul(g.payload, h.payload))


def invert(g: GroupElement) -> GroupElement:
    return GroupElement(g.model, g.model.top.inv(g.payload))


def eval_word(model: GroupModel, word: str | Sequence[str]) -> GroupElement:
    payload = model.top.identity
    for letter in tokenize(word):
        payload = model.step(payload, letter)
    return GroupElement(model, payload)


def apply_word(g: GroupElement, word: Iterable[str]) -> GroupElement:
    payload = g.payload
    for letter in word:
        payload = g.model.step(payload, letter)
    return GroupElement(g.model, payload)


def _c_candidate(model, payload):
    payload = descend(model, payload, 1)
    if payload is None or payload[1] != 0:
        return None
    syls, k = payload[0]
    return k if not syls else None


def power_exponent(g: GroupElement, base: str) -> int | None:
    """k with g = base^k, or None when g is not a power of ``base``."""
    model = g.model
    if base == "c":
        k = _c_candidate(model, g.payload)
    else:
        if not re.fullmatch(r"a\d+", base):
            raise InvalidWord(f"power_exponent base must be c or a_j, got {base!r}")
        j = int(base[1:])
        if j > model.m:
            raise UnsupportedLevel(f"{base} does not exist in G_{model.m}")
        k = model.top.abelian(g.payload)[0]
    if k is None:
        return None
    return k if model.power(base, k) == g else None


def coset_rep(g: GroupElement, subgroup: str = "A0") -> tuple[GroupElement, int]:
    """Right-coset normal form g = base^exp * rep for base a0 ("A0") or a_m ("stable")."""
    model = g.model
    if subgroup == "A0":
        j = 0
    elif subgroup == "stable":
        if model.m < 2:
            raise UnsupportedLevel("G_1 has no stable letter")
        j = model.m
    else:
        raise ValueError(f"unknown subgroup {subgroup!r}")
    ginv = model.top.inv(g.payload)
    rep_inv, k = model.top.decompose(ginv, j)
    return GroupElement(model, model.top.inv(rep_inv)), -k


def left_coset_rep(g: GroupElement, subgroup: str = "A0") -> tuple[GroupElement, int]:
    """Left-coset normal form g = rep * base^exp (the form the hyperplane ids use)."""
    model = g.model
    j = 0 if subgroup == "A0" else model.m
    if j and model.m < 2:
        raise UnsupportedLevel("G_1 has no stable letter")
    rep, k = model.top.decompose(g.payload, j)
    return GroupElement(model, rep), k


def check_reduced(model: GroupModel, payload) -> None:
    """Assert the Britton and amalgam invariants of a payload (recursively)."""
    level = model.m
    _check_level(model, level, payload)


def _check_level(model, level, payload):
    ops = model.level_ops(level)
    if level == 1:
        (syls, _k), _b = payload
        for i, (tag, rep) in enumerate(syls):
            f = ops.factors[tag]
            assert rep != f.identity, "trivial syllable"
            assert f.split(rep) == (rep, 0), "syllable is not a transversal element"
            if i:
                assert syls[i - 1][0] != tag, "adjacent syllables share a factor"
        return
    pieces, signs = payload
    assert len(pieces) == len(signs) + 1
    base = ops.base
    for i, s in enumerate(signs):
        j = 0 if s == 1 else ops.top_b
        rep, k = base.decompose(pieces[i], j)
        assert k == 0 and rep == pieces[i], "piece is not a coset representative"
        if i and pieces[i] == base.identity:
            assert signs[i - 1] == s, "pinch subword"
    for g in pieces:
        _check_level(model, level - 1, g)


# ---------------------------------------------------------------------------
# parsing canonical keys back into elements

_SEXP_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def _parse_sexp(text: str):
    stack: list = [[]]
    for tok in _SEXP_TOKEN.findall(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) < 2:
                raise InvalidWord(f"unbalanced key {text!r}")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1 or len(stack[0]) != 1:
        raise InvalidWord(f"malformed key {text!r}")
    return stack[0][0]


def _syllable(node):
    head, *args = node
    nums = tuple(int(a) for a in args)
    if head == "d":
        return 0, (0, nums[0])
    if head == "cd":
        return 0, nums
    if head == "aff":
        return 0, nums
    if head == "A":
        return 1, (nums[0], 0)
    raise InvalidWord(f"unknown syllable {head!r}")


def _payload_from_sexp(node, level):
    head = node[0]
    if head != f"G{level}":
        raise InvalidWord(f"expected a G{level} key, found {head!r}")
    if level == 1:
        _, kpart, beta = node
        if kpart[0] != "K":
            raise InvalidWord("G1 key lacks its K part")
        syls = tuple(_syllable(s) for s in kpart[2:])
        return ((syls, int(kpart[1])), int(beta))
    rest = node[1:]
    pieces = [_payload_from_sexp(rest[0], level - 1)]
    signs = []
    for sign, piece in zip(rest[1::2], rest[2::2]):
        signs.append(1 if sign == "+" else -1)
        pieces.append(_payload_from_sexp(piece, level - 1))
    return (tuple(pieces), tuple(signs))


def element_from_key(model: GroupModel, key: str) -> GroupElement:
    """Inverse of GroupElement.key for elements of ``model``."""
    version, sep, body = key.partition(":")
    if not sep or version != KEY_VERSION:
        raise InvalidWord(f"key {key!r} is not a {KEY_VERSION} key")
    payload = _payload_from_sexp(_parse_sexp(body), model.m)
    try:
        check_reduced(model, payload)
    except AssertionError as exc:
        raise InvalidWord(f"key {key!r} is not in normal form: {exc}") from exc
    return GroupElement(model, payload)
