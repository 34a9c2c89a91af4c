"""Finite Grassmann algebra with left and right derivatives.

An element is a sparse map from generator-subset bitmasks to coefficients.
Bit ``i`` of a mask stands for generator ``xi_{i+1}``; monomials are always
stored in increasing generator order. Coefficients may be any commuting
number type (int, Fraction, complex, GaussianRational).
"""
from __future__ import annotations

import random
import re
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping

from .exact import GaussianRational

MAX_GENERATORS = 16


class Parity(str, Enum):
    EVEN = "even"
    ODD = "odd"
    MIXED = "mixed"

    @property
    def bit(self) -> int:
        if self is Parity.MIXED:
            raise ValueError("mixed-parity element has no grading")
        return 0 if self is Parity.EVEN else 1


class IncompatibleAlgebras(ValueError):
    pass


def _popcount(x: int) -> int:
    return bin(x).count("1")


def merge_sign(a: int, b: int) -> int:
    """Sign of reordering the concatenation (monomial a)(monomial b)."""
    swaps = 0
    rest = b
    while rest:
        low = rest & -rest
        swaps += _popcount(a & ~((low << 1) - 1))
        rest ^= low
    return -1 if swaps & 1 else 1


class GrassmannElement:
    __slots__ = ("n", "terms", "_parity")

    def __init__(self, n: int, terms: Mapping[int, object] | None = None):
        if not 0 < n <= MAX_GENERATORS:
            raise ValueError(f"generator count must be in 1..{MAX_GENERATORS}")
        self.n = n
        full = (1 << n) - 1
        clean = {}
        for mask, c in (terms or {}).items():
            if mask & ~full or mask < 0:
                raise ValueError(f"bitmask {mask:#b} outside {n} generators")
            if c != 0:
                clean[mask] = c
        self.terms = clean
        self._parity = None

    @classmethod
    def scalar(cls, n: int, c=1) -> "GrassmannElement":
        return cls(n, {0: c})

    @classmethod
    def generator(cls, n: int, i: int, c=1) -> "GrassmannElement":
        _check_index(n, i)
        return cls(n, {1 << i: c})

    @classmethod
    def monomial(cls, n: int, indices: Iterable[int], c=1) -> "GrassmannElement":
        out = cls.scalar(n, c)
        for i in indices:
            out = out * cls.generator(n, i)
        return out

    @property
    def parity(self) -> Parity:
        if self._parity is None:
            grades = {_popcount(m) & 1 for m in self.terms}
            if grades == {1}:
                self._parity = Parity.ODD
            elif grades <= {0}:
                self._parity = Parity.EVEN
            else:
                self._parity = Parity.MIXED
        return self._parity

    def is_zero(self) -> bool:
        return not self.terms

    def _compatible(self, other: "GrassmannElement") -> None:
        if not isinstance(other, GrassmannElement):
            raise TypeError("expected a GrassmannElement")
        if other.n != self.n:
            raise IncompatibleAlgebras(f"{self.n} vs {other.n} generators")

    def __add__(self, other):
        if not isinstance(other, GrassmannElement):
            return self + GrassmannElement.scalar(self.n, other)
        self._compatible(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return GrassmannElement(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return GrassmannElement(self.n, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, GrassmannElement):
            return gproduct(self, other)
        return GrassmannElement(self.n, {m: c * other for m, c in self.terms.items()})

    def __rmul__(self, other):
        return GrassmannElement(self.n, {m: other * c for m, c in self.terms.items()})

    def __eq__(self, other):
        if isinstance(other, GrassmannElement):
            return self.n == other.n and self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def __repr__(self):
        return f"GrassmannElement({self.n}, {self.terms!r})"

    def to_text(self) -> str:
        return format_element(self)


def _check_index(n: int, i: int) -> None:
    if not 0 <= i < n:
        raise IndexError(f"generator index {i} out of range for {n} generators")


def gproduct(a: GrassmannElement, b: GrassmannElement) -> GrassmannElement:
    a._compatible(b)
    out: dict[int, object] = {}
    for ma, ca in a.terms.items():
        for mb, cb in b.terms.items():
            if ma & mb:
                continue
            c = ca * cb
            if merge_sign(ma, mb) < 0:
                c = -c
            key = ma | mb
            out[key] = out.get(key, 0) + c
    return GrassmannElement(a.n, out)


def left_derivative(f: GrassmannElement, i: int) -> GrassmannElement:
    _check_index(f.n, i)
    bit = 1 << i
    out = {}
    for m, c in f.terms.items():
        if m & bit:
            before = _popcount(m & (bit - 1))
            out[m ^ bit] = -c if before & 1 else c
    return GrassmannElement(f.n, out)


def right_derivative(f: GrassmannElement, i: int) -> GrassmannElement:
    _check_index(f.n, i)
    bit = 1 << i
    out = {}
    for m, c in f.terms.items():
        if m & bit:
            after = _popcount(m >> (i + 1))
            out[m ^ bit] = -c if after & 1 else c
    return GrassmannElement(f.n, out)


def parity(f: GrassmannElement) -> Parity:
    return f.parity


def graded_commutator(f: GrassmannElement, g: GrassmannElement) -> GrassmannElement:
    """FG - (-1)^{e_F e_G} GF; vanishes for homogeneous inputs."""
    sign = -1 if f.parity.bit and g.parity.bit else 1
    return f * g - (g * f) * sign


_GEN = "ξ"


def _format_coefficient(c) -> str:
    if isinstance(c, GaussianRational):
        return f"[{c.re}, {c.im}]"
    if isinstance(c, (int, Fraction)):
        return f"[{c}, 0]"
    c = complex(c)
    return f"[{c.real!r}, {c.imag!r}]"


def format_element(f: GrassmannElement) -> str:
    """One term per line: ``[re, im] * xi1^xi3``; the scalar term uses ``1``."""
    lines = [f"# generators {f.n}"]
    for m in sorted(f.terms, key=lambda x: (_popcount(x), x)):
        gens = [f"{_GEN}{i + 1}" for i in range(f.n) if m >> i & 1]
        mono = "^".join(gens) if gens else "1"
        lines.append(f"{_format_coefficient(f.terms[m])} * {mono}")
    return "\n".join(lines) + "\n"


_LINE = re.compile(r"^\[\s*([^,\]]+)\s*,\s*([^\]]+)\s*\]\s*\*\s*(\S+)$")


def _parse_number(s: str):
    s = s.strip()
    if any(ch in s.lower() for ch in ".ein"):
        return float(s)
    return Fraction(s)


def parse_element(text: str) -> GrassmannElement:
    n = None
    terms: dict[int, object] = {}
    exact = True
    raw = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "generators":
                n = int(parts[1])
            continue
        m = _LINE.match(line)
        if not m:
            raise ValueError(f"unparseable term: {line!r}")
        re_s, im_s, mono = m.groups()
        re_v, im_v = _parse_number(re_s), _parse_number(im_s)
        if isinstance(re_v, float) or isinstance(im_v, float):
            exact = False
        mask = 0
        if mono != "1":
            for g in mono.split("^"):
                if not g.startswith(_GEN):
                    raise ValueError(f"bad generator {g!r}")
                idx = int(g[len(_GEN):]) - 1
                if mask >> idx & 1:
                    raise ValueError(f"repeated generator in {mono!r}")
                if idx < 0:
                    raise ValueError(f"bad generator {g!r}")
                mask |= 1 << idx
        raw.append((mask, re_v, im_v))
    if n is None:
        n = max((m.bit_length() for m, _, _ in raw), default=1) or 1
    for mask, re_v, im_v in raw:
        if exact:
            if im_v:
                c = GaussianRational(re_v, im_v)
            else:
                c = int(re_v) if re_v.denominator == 1 else re_v
        else:
            c = complex(float(re_v), float(im_v))
        terms[mask] = terms.get(mask, 0) + c
    return GrassmannElement(n, terms)


def random_homogeneous(rng: random.Random, n: int, odd: bool, n_terms: int = 5,
                       max_degree: int = 4) -> GrassmannElement:
    """Random element of definite parity with small Gaussian-integer coefficients."""
    terms: dict[int, object] = {}
    degrees = [d for d in range(0, min(n, max_degree) + 1) if d % 2 == int(odd)]
    for _ in range(n_terms):
        d = rng.choice(degrees)
        mask = sum(1 << i for i in rng.sample(range(n), d))
        c = GaussianRational(rng.randint(-4, 4), rng.randint(-4, 4))
        terms[mask] = terms.get(mask, 0) + c
    return GrassmannElement(n, terms)


def _sign_of(bit: int) -> int:
    return -1 if bit else 1


def derivative_examples() -> list[tuple[str, bool]]:
    x12 = GrassmannElement.monomial(3, [0, 1])
    x1 = GrassmannElement.generator(3, 0)
    x2 = GrassmannElement.generator(3, 1)
    return [
        ("left_d1(x1x2) = x2", left_derivative(x12, 0) == x2),
        ("left_d2(x1x2) = -x1", left_derivative(x12, 1) == -x1),
        ("right_d1(x1x2) = -x2", right_derivative(x12, 0) == -x2),
        ("right_d2(x1x2) = x1", right_derivative(x12, 1) == x1),
    ]


def identity_suite(n_elements: int = 500, seed: int = 0, max_generators: int = 12) -> list[tuple[str, bool]]:
    """Left/right relation, both Leibniz rules, graded commutativity and associativity.

    Returns (identity name, ok) pairs; names carry the first failing sample index.
    """
    rng = random.Random(seed)
    bad: dict[str, int] = {}

    def fail(name: str, k: int) -> None:
        bad.setdefault(name, k)

    for k in range(n_elements):
        n = rng.randint(2, max_generators)
        f = random_homogeneous(rng, n, rng.random() < 0.5)
        g = random_homogeneous(rng, n, rng.random() < 0.5)
        h = random_homogeneous(rng, n, rng.random() < 0.5, n_terms=2)
        ef, eg = f.parity.bit, g.parity.bit
        fg = f * g
        if fg != (g * f) * _sign_of(ef & eg):
            fail("graded_commutativity", k)
        if (fg * h) != f * (g * h):
            fail("associativity", k)
        i = rng.randrange(n)
        if left_derivative(f, i) != right_derivative(f, i) * _sign_of((1 + ef) & 1):
            fail("left_right_relation", k)
        lhs = left_derivative(fg, i)
        if lhs != left_derivative(f, i) * g + (f * left_derivative(g, i)) * _sign_of(ef):
            fail("left_leibniz", k)
        rhs = right_derivative(fg, i)
        if rhs != f * right_derivative(g, i) + (right_derivative(f, i) * g) * _sign_of(eg):
            fail("right_leibniz", k)
    names = ["graded_commutativity", "associativity", "left_right_relation",
             "left_leibniz", "right_leibniz"]
    out = [(name if name not in bad else f"{name}[sample {bad[name]}]", name not in bad)
           for name in names]
    return out + derivative_examples()


__all__ = [
    "GrassmannElement", "IncompatibleAlgebras", "MAX_GENERATORS", "Parity",
    "derivative_examples", "format_element", "identity_suite", "random_homogeneous", "gproduct", "graded_commutator", "left_derivative",
    "merge_sign", "parity", "parse_element", "right_derivative",
]
