"""Catalog of base Cayley graphs.

Elements are plain tuples of ints.  Abelian kinds use coordinate tuples
(cycle coordinates reduced into ``[0, L)``); free-group elements are reduced
words whose letters are ``+i`` for the i-th generator and ``-i`` for its
inverse, so the identity is the empty tuple.
"""

from __future__ import annotations

import math
import struct
from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .errors import BudgetExceededError, ConfigError, InvalidElementError

Element = tuple[int, ...]

INTEGER_LATTICE = "integer-lattice"
CYCLE = "cycle"
TORUS = "torus"
FREE_GROUP = "free-group"
KINDS = (INTEGER_LATTICE, CYCLE, TORUS, FREE_GROUP)

DEFAULT_BALL_BUDGET = 10**6


@dataclass(frozen=True)
class GroupSpec:
    kind: str
    rank: int
    sides: tuple[int, ...] = ()
    max_word_length: int = 64

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown group kind {self.kind!r}")
        if self.kind == INTEGER_LATTICE and self.rank < 1:
            raise ConfigError("integer-lattice(d) requires d >= 1")
        if self.kind == FREE_GROUP and self.rank < 1:
            raise ConfigError("free-group(k) requires k >= 1")
        if self.kind in (CYCLE, TORUS):
            if len(self.sides) != self.rank or self.rank < 1:
                raise ConfigError("cycle/torus needs one side length per axis")
            if any(s < 3 for s in self.sides):
                raise ConfigError("cycle(L) requires L >= 3 on every axis")

    # -- constructors -------------------------------------------------------
    @classmethod
    def integer_lattice(cls, d: int = 1) -> GroupSpec:
        return cls(INTEGER_LATTICE, d)

    @classmethod
    def cycle(cls, L: int) -> GroupSpec:
        return cls(CYCLE, 1, (L,))

    @classmethod
    def torus(cls, *sides: int) -> GroupSpec:
        return cls(TORUS, len(sides), tuple(sides))

    @classmethod
    def free_group(cls, k: int = 2, max_word_length: int = 64) -> GroupSpec:
        return cls(FREE_GROUP, k, (), max_word_length)

    # -- descriptive properties ----------------------------------------------
    @property
    def is_abelian(self) -> bool:
        return self.kind != FREE_GROUP

    @property
    def is_periodic(self) -> bool:
        return self.kind in (CYCLE, TORUS)

    @property
    def is_finite(self) -> bool:
        return self.is_periodic

    @property
    def degree(self) -> int:
        return 2 * self.rank

    @property
    def identity(self) -> Element:
        return () if self.kind == FREE_GROUP else (0,) * self.rank

    def order(self) -> int:
        if not self.is_finite:
            raise ValueError(f"{self.kind} is infinite")
        return math.prod(self.sides)

    def generators(self) -> list[Element]:
        """Generators in canonical order: +e1, -e1, +e2, ... (a, a^-1, b, ...)."""
        if self.kind == FREE_GROUP:
            return [(s * i,) for i in range(1, self.rank + 1) for s in (1, -1)]
        gens = []
        for i in range(self.rank):
            for s in (1, -1):
                g = [0] * self.rank
                g[i] = s
                gens.append(tuple(g))
        return gens

    def __str__(self) -> str:
        if self.kind == INTEGER_LATTICE:
            return f"Z^{self.rank}" if self.rank > 1 else "Z"
        if self.kind == CYCLE:
            return f"cycle({self.sides[0]})"
        if self.kind == TORUS:
            return "torus(" + "x".join(map(str, self.sides)) + ")"
        return f"F_{self.rank}"

    # -- JSON ------------------------------------------------------------------
    def to_json(self) -> dict:
        if self.kind == INTEGER_LATTICE:
            params: dict = {"d": self.rank}
        elif self.kind == CYCLE:
            params = {"L": self.sides[0]}
        elif self.kind == TORUS:
            params = {"L": list(self.sides)}
        else:
            params = {"k": self.rank, "max_word_length": self.max_word_length}
        return {"kind": self.kind, "params": params}

    @classmethod
    def from_json(cls, obj: dict) -> GroupSpec:
        try:
            kind = obj["kind"]
            params = obj.get("params", {})
            if kind == INTEGER_LATTICE:
                return cls.integer_lattice(int(params.get("d", 1)))
            if kind == CYCLE:
                return cls.cycle(int(params["L"]))
            if kind == TORUS:
                return cls.torus(*(int(s) for s in params["L"]))
            if kind == FREE_GROUP:
                return cls.free_group(int(params.get("k", 2)),
                                      int(params.get("max_word_length", 64)))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed group spec {obj!r}") from exc
        raise ConfigError(f"unknown group kind {obj.get('kind')!r}")


# ---------------------------------------------------------------------------
# element handling


def validate(spec: GroupSpec, x) -> Element:
    """Return the canonical tuple for ``x`` or raise InvalidElementError.

    Integers are accepted as shorthand for one-coordinate abelian elements.
    """
    if isinstance(x, int) and not isinstance(x, bool) and spec.is_abelian and spec.rank == 1:
        x = (x,)
    if not isinstance(x, tuple) or not all(isinstance(c, int) and not isinstance(c, bool) for c in x):
        raise InvalidElementError(f"element must be a tuple of ints, got {x!r}")
    if spec.kind == FREE_GROUP:
        if len(x) > spec.max_word_length:
            raise InvalidElementError(f"word longer than cap {spec.max_word_length}")
        for i, letter in enumerate(x):
            if letter == 0 or abs(letter) > spec.rank:
                raise InvalidElementError(f"bad letter {letter} in {x!r}")
            if i and x[i - 1] == -letter:
                raise InvalidElementError(f"word {x!r} is not reduced")
        return x
    if len(x) != spec.rank:
        raise InvalidElementError(f"expected {spec.rank} coordinates, got {x!r}")
    if spec.is_periodic and any(not 0 <= c < s for c, s in zip(x, spec.sides)):
        raise InvalidElementError(f"coordinates of {x!r} must lie in [0, L)")
    return x


def multiply(spec: GroupSpec, x: Element, g: Element) -> Element:
    """Right multiplication ``x * g`` (no validation)."""
    if spec.kind == FREE_GROUP:
        out = list(x)
        for letter in g:
            if out and out[-1] == -letter:
                out.pop()
            else:
                out.append(letter)
        if len(out) > spec.max_word_length:
            raise BudgetExceededError(
                f"word length {len(out)} exceeds cap {spec.max_word_length}")
        return tuple(out)
    if spec.is_periodic:
        return tuple((a + b) % s for a, b, s in zip(x, g, spec.sides))
    return tuple(a + b for a, b in zip(x, g))


def inverse(spec: GroupSpec, x: Element) -> Element:
    if spec.kind == FREE_GROUP:
        return tuple(-c for c in reversed(x))
    if spec.is_periodic:
        return tuple((-c) % s for c, s in zip(x, spec.sides))
    return tuple(-c for c in x)


def neighbors(spec: GroupSpec, x) -> list[Element]:
    """All elements at graph distance 1, in generator order."""
    x = validate(spec, x)
    return [multiply(spec, x, g) for g in spec.generators()]


def distance(spec: GroupSpec, x: Element, y: Element) -> int:
    """Word-metric distance, computed in closed form for every catalog kind."""
    if spec.kind == FREE_GROUP:
        return len(multiply(spec, inverse(spec, x), y))
    if spec.is_periodic:
        total = 0
        for a, b, s in zip(x, y, spec.sides):
            diff = abs(a - b) % s
            total += min(diff, s - diff)
        return total
    return sum(abs(a - b) for a, b in zip(x, y))


def order_key(x: Element) -> tuple:
    """Sort key of the canonical element order (shortlex; plain tuple order
    for the fixed-length abelian encodings)."""
    return (len(x), x)


def ball(spec: GroupSpec, x, R: int, budget: int = DEFAULT_BALL_BUDGET) -> frozenset[Element]:
    return frozenset(ball_layers(spec, x, R, budget).keys())


def ball_layers(spec: GroupSpec, x, R: int, budget: int = DEFAULT_BALL_BUDGET) -> dict[Element, int]:
    """BFS from ``x`` to depth ``R``; maps each reached element to its distance."""
    if R < 0:
        raise ValueError("radius must be non-negative")
    x = validate(spec, x)
    seen = {x: 0}
    queue = deque([x])
    while queue:
        u = queue.popleft()
        du = seen[u]
        if du == R:
            continue
        for v in neighbors(spec, u):
            if v not in seen:
                seen[v] = du + 1
                if len(seen) > budget:
                    raise BudgetExceededError(f"ball of radius {R} exceeds {budget} elements")
                queue.append(v)
    return seen


def ball_size(spec: GroupSpec, R: int) -> int:
    """phi_G(R), closed form where one exists, BFS otherwise."""
    if spec.kind == INTEGER_LATTICE:
        d = spec.rank
        return sum(2**k * math.comb(d, k) * math.comb(R, k) for k in range(min(d, R) + 1))
    if spec.kind == FREE_GROUP:
        k = spec.rank
        if k == 1:
            return 2 * R + 1
        return 1 + 2 * k * ((2 * k - 1) ** R - 1) // (2 * k - 2)
    return len(ball(spec, spec.identity, R))


# ---------------------------------------------------------------------------
# parity


@dataclass(frozen=True)
class ParityInfo:
    bipartite: bool
    odd_girth: int | None = None
    mu_G: int | None = None

    def __post_init__(self) -> None:
        if self.bipartite and self.odd_girth is not None:
            raise ValueError("a bipartite graph has no odd closed path")
        if self.odd_girth is not None and (self.odd_girth < 3 or self.odd_girth % 2 == 0):
            raise ValueError("odd girth must be odd and >= 3")


def parity_info(spec: GroupSpec, search_cap: int = 64) -> ParityInfo:
    """Bipartiteness, odd girth and the closed-walk threshold mu_G.

    Closed walks of every even length exist (back-and-forth), and of every odd
    length from the odd girth m on, so every length k >= m - 1 is realised:
    mu_G = m - 1.
    """
    if spec.kind in (INTEGER_LATTICE, FREE_GROUP):
        return ParityInfo(True)
    odd_sides = [s for s in spec.sides if s % 2]
    if not odd_sides:
        return ParityInfo(True)
    m = min(odd_sides)
    if m > search_cap:
        return ParityInfo(False)
    return ParityInfo(False, m, m - 1)


def shortest_odd_closed_walk(spec: GroupSpec, cap: int) -> int | None:
    """Generic BFS on the parity double cover; None when bipartite within cap.

    Vertex-transitivity makes the walk through the identity globally shortest.
    """
    start = (spec.identity, 0)
    seen = {start: 0}
    queue = deque([start])
    while queue:
        u, p = queue.popleft()
        du = seen[(u, p)]
        if du >= cap:
            continue
        for v in neighbors(spec, u):
            node = (v, 1 - p)
            if node not in seen:
                seen[node] = du + 1
                if node == (spec.identity, 1):
                    return du + 1
                queue.append(node)
    return None


# ---------------------------------------------------------------------------
# canonical encodings


def element_words(x: Element) -> tuple[int, ...]:
    """Length-prefixed integer encoding; injective over all tuples."""
    return (len(x), *x)


def canonical_key(spec: GroupSpec, x) -> bytes:
    x = validate(spec, x)
    words = element_words(x)
    return struct.pack(f">{len(words)}q", *words)


_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def element_key(spec: GroupSpec, x: Element) -> str:
    """Human-readable text key used in CSV snapshots and SVG legends."""
    if spec.kind == FREE_GROUP:
        if not x:
            return "e"
        return "".join(_LETTERS[c - 1] if c > 0 else _LETTERS[-c - 1].upper() for c in x)
    return ";".join(str(c) for c in x)


def parse_element_key(spec: GroupSpec, key: str) -> Element:
    if spec.kind == FREE_GROUP:
        if key == "e":
            return ()
        letters = []
        for ch in key:
            i = _LETTERS.index(ch.lower()) + 1
            letters.append(i if ch.islower() else -i)
        return validate(spec, tuple(letters))
    return validate(spec, tuple(int(c) for c in key.split(";")))


def sort_elements(xs: Iterable[Element]) -> list[Element]:
    return sorted(xs, key=order_key)
