"""Exact arithmetic in finite Coxeter groups.

A CoxeterSystem is built by coset enumeration over the trivial subgroup,
which yields the full right-multiplication table of the group.  Elements are
plain integer ids; shortlex normal forms are recovered by a breadth-first
walk from the identity.  Everything downstream (buildings, flips, cosets)
works with these ids and never touches words unless it has to.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import MalformedMatrix, MixedSystems, NonSphericalOrTooLarge, NotTwisted

DEFAULT_MAX_ORDER = 40320


def _check_matrix(matrix):
    n = len(matrix)
    if n == 0:
        raise MalformedMatrix("empty Coxeter matrix")
    for row in matrix:
        if len(row) != n:
            raise MalformedMatrix("Coxeter matrix is not square")
    for i in range(n):
        if matrix[i][i] != 1:
            raise MalformedMatrix(f"m({i},{i}) must be 1")
        for j in range(n):
            m = matrix[i][j]
            if m != matrix[j][i]:
                raise MalformedMatrix(f"matrix not symmetric at ({i},{j})")
            if i != j and m != 0 and m < 2:
                raise MalformedMatrix(f"off-diagonal m({i},{j}) must be >= 2 or 0 (= infinity)")


def _coset_enumeration(rank, relators, max_cosets):
    """Todd-Coxeter over the trivial subgroup with involutive generators.

    Returns the completed coset table as a list of per-generator image lists,
    cosets renumbered 0..N-1 with 0 the identity.  Raises
    NonSphericalOrTooLarge if more than max_cosets live cosets are needed.
    """
    table = [[None] * rank]
    parent = [0]

    def rep(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    pending = []

    def merge(a, b):
        a, b = rep(a), rep(b)
        if a == b:
            return
        if a > b:
            a, b = b, a
        parent[b] = a
        pending.append(b)

    def process_coincidences():
        while pending:
            dead = pending.pop()
            row = table[dead]
            for x in range(rank):
                delta = row[x]
                if delta is None:
                    continue
                row[x] = None
                if table[delta][x] == dead:
                    table[delta][x] = None
                mu, nu = rep(dead), rep(delta)
                if table[mu][x] is not None:
                    merge(nu, table[mu][x])
                elif table[nu][x] is not None:
                    merge(mu, table[nu][x])
                else:
                    table[mu][x] = nu
                    table[nu][x] = mu

    def define(alpha, x):
        if len(table) - len(pending) > max_cosets:
            raise NonSphericalOrTooLarge(
                f"group is not spherical within the bound of {max_cosets} elements")
        table.append([None] * rank)
        parent.append(len(table) - 1)
        beta = len(table) - 1
        table[alpha][x] = beta
        table[beta][x] = alpha
        return beta

    def scan_and_fill(alpha, word):
        f, i = alpha, 0
        b, j = alpha, len(word) - 1
        while True:
            while i <= j and table[f][word[i]] is not None:
                f = table[f][word[i]]
                i += 1
            if i > j:
                if f != b:
                    merge(f, b)
                    process_coincidences()
                return
            while j >= i and table[b][word[j]] is not None:
                b = table[b][word[j]]
                j -= 1
            if j < i:
                merge(f, b)
                process_coincidences()
                return
            if j == i:
                table[f][word[i]] = b
                table[b][word[i]] = f
                return
            f = define(f, word[i])
            i += 1

    alpha = 0
    while alpha < len(table):
        if rep(alpha) != alpha:
            alpha += 1
            continue
        for word in relators:
            scan_and_fill(alpha, word)
            if rep(alpha) != alpha:
                break
        if rep(alpha) == alpha:
            for x in range(rank):
                if table[alpha][x] is None:
                    define(alpha, x)
        alpha += 1

    live = sorted(a for a in range(len(table)) if rep(a) == a)
    renum = {a: i for i, a in enumerate(live)}
    out = [[renum[rep(table[a][x])] for x in range(rank)] for a in live]
    return out


@dataclass(frozen=True)
class CoxeterElement:
    """A group element: an id into its system's tables."""

    system: "CoxeterSystem"
    index: int

    @property
    def word(self):
        return self.system.words[self.index]

    @property
    def length(self):
        return self.system.lengths[self.index]

    def __mul__(self, other):
        if not isinstance(other, CoxeterElement):
            return NotImplemented
        return self.system.multiply(self, other)

    def inverse(self):
        return CoxeterElement(self.system, self.system.inv[self.index])

    def is_identity(self):
        return self.index == 0

    def __repr__(self):
        if self.index == 0:
            return "e"
        return "*".join(self.system.labels[s] for s in self.word)

    def __eq__(self, other):
        return (isinstance(other, CoxeterElement)
                and self.system is other.system and self.index == other.index)

    def __hash__(self):
        return hash((id(self.system), self.index))


class DiagramInvolution:
    """A Coxeter-matrix preserving permutation of the generators of order <= 2."""

    def __init__(self, system, perm):
        perm = tuple(perm)
        if sorted(perm) != list(range(system.rank)):
            raise MalformedMatrix(f"not a permutation of 0..{system.rank - 1}: {perm}")
        for s in range(system.rank):
            if perm[perm[s]] != s:
                raise MalformedMatrix("diagram automorphism must have order <= 2")
            for t in range(system.rank):
                if system.matrix[perm[s]][perm[t]] != system.matrix[s][t]:
                    raise MalformedMatrix("permutation does not preserve the Coxeter matrix")
        self.system = system
        self.perm = perm
        # element-level action, computed once
        self._table = system._automorphism_table(perm)

    def apply(self, g: CoxeterElement) -> CoxeterElement:
        return CoxeterElement(self.system, self._table[g.index])

    def apply_index(self, i: int) -> int:
        return self._table[i]

    def is_identity(self):
        return all(self.perm[s] == s for s in range(self.system.rank))

    def __repr__(self):
        moved = [f"{self.system.labels[s]}<->{self.system.labels[t]}"
                 for s, t in enumerate(self.perm) if s < t]
        return "id" if not moved else ",".join(moved)

    def __eq__(self, other):
        return (isinstance(other, DiagramInvolution)
                and self.system is other.system and self.perm == other.perm)

    def __hash__(self):
        return hash((id(self.system), self.perm))


@dataclass(frozen=True)
class TwistedInvolution:
    element: CoxeterElement
    twist: DiagramInvolution

    def __post_init__(self):
        if self.twist.apply(self.element) != self.element.inverse():
            raise NotTwisted(f"{self.element!r} is not twisted by {self.twist!r}")


class CoxeterSystem:
    """A finite Coxeter group with cached element tables.

    rmul[g][s] is the id of g*s; shortlex normal forms are in `words`.
    Immutable after construction; all queries are read-only.
    """

    def __init__(self, matrix, labels=None, max_order=DEFAULT_MAX_ORDER):
        matrix = tuple(tuple(int(x) for x in row) for row in matrix)
        _check_matrix(matrix)
        self.matrix = matrix
        self.rank = len(matrix)
        self.labels = tuple(labels) if labels else tuple(f"s{i + 1}" for i in range(self.rank))
        if len(self.labels) != self.rank:
            raise MalformedMatrix("wrong number of generator labels")

        relators = [(s, s) for s in range(self.rank)]
        for s in range(self.rank):
            for t in range(s + 1, self.rank):
                m = matrix[s][t]
                if m:
                    relators.append((s, t) * m)
        # TC may transiently need more cosets than |W|
        self.rmul = _coset_enumeration(self.rank, relators, max_cosets=8 * max_order + 64)
        self.order = len(self.rmul)
        if self.order > max_order:
            raise NonSphericalOrTooLarge(
                f"|W| = {self.order} exceeds the configured bound {max_order}")

        # shortlex normal forms by first-discovery BFS from the identity
        words = [None] * self.order
        words[0] = ()
        queue = [0]
        while queue:
            nxt = []
            for g in queue:
                for s in range(self.rank):
                    h = self.rmul[g][s]
                    if words[h] is None:
                        words[h] = words[g] + (s,)
                        nxt.append(h)
            queue = nxt
        self.words = words
        self.lengths = [len(w) for w in words]
        # inverse of g: feed the reversed word of g to the identity
        inv = [0] * self.order
        for g in range(self.order):
            h = 0
            for s in reversed(words[g]):
                h = self.rmul[h][s]
            inv[g] = h
        self.inv = inv
        self._longest_cache = {}

    # -- low-level id arithmetic ------------------------------------------

    def right(self, g: int, s: int) -> int:
        return self.rmul[g][s]

    def left(self, s: int, g: int) -> int:
        return self.inv[self.rmul[self.inv[g]][s]]

    def mult_index(self, g: int, h: int) -> int:
        for s in self.words[h]:
            g = self.rmul[g][s]
        return g

    def element_from_word(self, word) -> CoxeterElement:
        g = 0
        for s in word:
            if not 0 <= s < self.rank:
                raise MalformedMatrix(f"generator index {s} out of range")
            g = self.rmul[g][s]
        return CoxeterElement(self, g)

    def _automorphism_table(self, perm):
        table = [0] * self.order
        for g in range(self.order):
            h = 0
            for s in self.words[g]:
                h = self.rmul[h][perm[s]]
            table[g] = h
        return table

    # -- public api -------------------------------------------------------

    @property
    def identity(self) -> CoxeterElement:
        return CoxeterElement(self, 0)

    def generator(self, s: int) -> CoxeterElement:
        return self.element_from_word((s,))

    def elements(self):
        return [CoxeterElement(self, g) for g in range(self.order)]

    def multiply(self, u: CoxeterElement, v: CoxeterElement) -> CoxeterElement:
        if u.system is not self or v.system is not self:
            raise MixedSystems("elements belong to different Coxeter systems")
        return CoxeterElement(self, self.mult_index(u.index, v.index))

    def longest_element(self, gens=None) -> CoxeterElement:
        """The longest element w_I of the standard parabolic W_I."""
        if gens is None:
            gens = range(self.rank)
        key = frozenset(gens)
        if key not in self._longest_cache:
            g = 0
            while True:
                for s in sorted(key):
                    h = self.rmul[g][s]
                    if self.lengths[h] > self.lengths[g]:
                        g = h
                        break
                else:
                    break
            self._longest_cache[key] = g
        return CoxeterElement(self, self._longest_cache[key])

    def parabolic_indices(self, gens) -> list[int]:
        """All ids of W_I, by closure under right multiplication."""
        gens = sorted(set(gens))
        seen = {0}
        queue = [0]
        while queue:
            g = queue.pop()
            for s in gens:
                h = self.rmul[g][s]
                if h not in seen:
                    seen.add(h)
                    queue.append(h)
        return sorted(seen)

    def left_descents(self, g: int) -> set[int]:
        return {s for s in range(self.rank) if self.lengths[self.left(s, g)] < self.lengths[g]}

    def right_descents(self, g: int) -> set[int]:
        return {s for s in range(self.rank) if self.lengths[self.rmul[g][s]] < self.lengths[g]}

    def bruhat_leq(self, u: CoxeterElement, w: CoxeterElement) -> bool:
        """Subword-property Bruhat order, via the standard lifting recursion."""
        if u.system is not self or w.system is not self:
            raise MixedSystems("elements belong to different Coxeter systems")
        return self._bruhat_leq_index(u.index, w.index)

    def _bruhat_leq_index(self, u: int, w: int) -> bool:
        while True:
            if u == w or u == 0:
                return True
            if self.lengths[u] >= self.lengths[w]:
                return False
            s = min(self.right_descents(w))
            ws = self.rmul[w][s]
            us = self.rmul[u][s]
            if self.lengths[us] < self.lengths[u]:
                u = us
            w = ws

    def diagram_involutions(self) -> list[DiagramInvolution]:
        """All matrix-preserving generator permutations of order <= 2."""
        out = []
        for perm in itertools.permutations(range(self.rank)):
            if any(perm[perm[s]] != s for s in range(self.rank)):
                continue
            ok = all(self.matrix[perm[s]][perm[t]] == self.matrix[s][t]
                     for s in range(self.rank) for t in range(self.rank))
            if ok:
                out.append(DiagramInvolution(self, perm))
        return out

    def twisted_involutions(self, twist: DiagramInvolution) -> list[TwistedInvolution]:
        """All w with twist(w) = w^-1, by filtering the whole group."""
        if twist.system is not self:
            raise MixedSystems("twist belongs to a different system")
        out = []
        for g in range(self.order):
            if twist.apply_index(g) == self.inv[g]:
                out.append(TwistedInvolution(CoxeterElement(self, g), twist))
        return out

    def twisted_decomposition(self, w: TwistedInvolution):
        """Greedy descent w = s_1...s_h * w_I * twist(s_h)...twist(s_1).

        Strips the lowest-index generator with l(s w twist(s)) = l(w) - 2
        until none exists; the terminal element is w_I for I = its left
        descent set.  Returns (prefix word, I as sorted tuple).
        """
        sys_ = self
        twist = w.twist
        g = w.element.index
        prefix = []
        while True:
            lg = sys_.lengths[g]
            for s in range(sys_.rank):
                h = sys_.rmul[sys_.left(s, g)][twist.perm[s]]
                if sys_.lengths[h] == lg - 2:
                    prefix.append(s)
                    g = h
                    break
            else:
                break
        descents = sorted(self.left_descents(g))
        if g != self.longest_element(descents).index:
            raise NotTwisted("descent did not terminate at a parabolic longest element")
        if sorted(twist.perm[s] for s in descents) != descents:
            raise NotTwisted("terminal descent set is not twist-stable")
        return tuple(prefix), tuple(descents)


# -- construction helpers ---------------------------------------------------

_TYPE_ERR = "unknown Coxeter type {0!r}; use e.g. A2, B3, D4, F4, G2, H3, I5(2) or products like A1xA1"


def matrix_for_type(name: str):
    """Coxeter matrix for a standard type string, products joined with 'x'."""
    parts = name.strip().split("x")
    blocks = [_matrix_for_simple_type(p.strip()) for p in parts]
    n = sum(len(b) for b in blocks)
    out = [[2] * n for _ in range(n)]
    off = 0
    for b in blocks:
        k = len(b)
        for i in range(k):
            for j in range(k):
                out[off + i][off + j] = b[i][j]
        off += k
    return out


def _matrix_for_simple_type(name):
    if not name or not name[0].isalpha():
        raise MalformedMatrix(_TYPE_ERR.format(name))
    kind = name[0].upper()
    try:
        n = int(name[1:])
    except ValueError:
        raise MalformedMatrix(_TYPE_ERR.format(name)) from None
    if n < 1:
        raise MalformedMatrix(_TYPE_ERR.format(name))
    m = [[2] * n for _ in range(n)]
    for i in range(n):
        m[i][i] = 1
    def chain(bonds):
        for i, v in enumerate(bonds):
            m[i][i + 1] = m[i + 1][i] = v
    if kind == "A":
        chain([3] * (n - 1))
    elif kind in ("B", "C"):
        if n < 2:
            raise MalformedMatrix(_TYPE_ERR.format(name))
        chain([3] * (n - 2) + [4])
    elif kind == "D":
        if n < 3:
            raise MalformedMatrix(_TYPE_ERR.format(name))
        chain([3] * (n - 2))
        m[n - 3][n - 1] = m[n - 1][n - 3] = 3
        m[n - 2][n - 1] = m[n - 1][n - 2] = 2
    elif kind == "F" and n == 4:
        chain([3, 4, 3])
    elif kind == "G" and n == 2:
        chain([6])
    elif kind == "H" and n in (2, 3, 4):
        chain([5] + [3] * (n - 2))
    elif kind == "I":
        # I<m>(2): dihedral of order 2m written as Im
        if n < 3:
            raise MalformedMatrix(_TYPE_ERR.format(name))
        m = [[1, n], [n, 1]]
    else:
        raise MalformedMatrix(_TYPE_ERR.format(name))
    return m


def read_matrix_file(path):
    """Plain-text Coxeter matrix: line 1 the rank, then rank lines of rank
    integers with 0 encoding infinity."""
    with open(path, "r", encoding="ascii") as fh:
        tokens = fh.read().split()
    if not tokens:
        raise MalformedMatrix(f"{path}: empty matrix file")
    try:
        n = int(tokens[0])
        vals = [int(t) for t in tokens[1:]]
    except ValueError as exc:
        raise MalformedMatrix(f"{path}: non-integer entry") from exc
    if n < 1 or len(vals) != n * n:
        raise MalformedMatrix(f"{path}: expected {n}x{n} entries after the rank line")
    return [vals[i * n:(i + 1) * n] for i in range(n)]


def build_system(matrix, labels=None, max_order=DEFAULT_MAX_ORDER) -> CoxeterSystem:
    return CoxeterSystem(matrix, labels=labels, max_order=max_order)


def system_for_type(name: str, max_order=DEFAULT_MAX_ORDER) -> CoxeterSystem:
    return CoxeterSystem(matrix_for_type(name), max_order=max_order)


def parse_twist(system: CoxeterSystem, spec: str) -> DiagramInvolution:
    """Parse a twist spec: 'id', or digit pairs like '13' / '12,34' (1-based)."""
    spec = spec.strip().lower()
    perm = list(range(system.rank))
    if spec not in ("", "id"):
        for pair in spec.split(","):
            pair = pair.strip().replace("-", "")
            if len(pair) != 2 or not pair.isdigit():
                raise MalformedMatrix(f"bad twist spec {spec!r}")
            a, b = int(pair[0]) - 1, int(pair[1]) - 1
            if not (0 <= a < system.rank and 0 <= b < system.rank):
                raise MalformedMatrix(f"twist indices out of range in {spec!r}")
            perm[a], perm[b] = b, a
    return DiagramInvolution(system, perm)
