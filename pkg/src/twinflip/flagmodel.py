"""Concrete type-A buildings: flags of subspaces of GF(q)^n, q = p or p^2.

Field elements are integers 0..q-1 in the fixed polynomial basis (a + b*x
encodes to a + b*p); all arithmetic is table-driven.  Subspaces are stored as
reduced-row-echelon tuples so equality is literal equality.  Vectors are
row tuples; a matrix g acts on a row r as r*g^T, i.e. as the column map
v -> g v.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce

from .errors import (DependentFrame, MalformedMatrix, MixedAmbient, TooLarge,
                     TwinflipError)

FLAG_GUARD = 10 ** 6
GROUP_GUARD = 10 ** 7


def _is_prime(p):
    return p >= 2 and all(p % d for d in range(2, int(p ** 0.5) + 1))


class Field:
    """GF(p) or GF(p^2) with full operation tables and the involution sigma
    (identity for degree 1, Frobenius x -> x^p for degree 2)."""

    def __init__(self, p, degree=1):
        if not _is_prime(p):
            raise MalformedMatrix(f"{p} is not prime")
        if degree not in (1, 2):
            raise MalformedMatrix("only degrees 1 and 2 are supported")
        self.p = p
        self.degree = degree
        self.q = p ** degree
        if degree == 1:
            self.modulus = None
            self.add = [[(a + b) % p for b in range(p)] for a in range(p)]
            self.mul = [[(a * b) % p for b in range(p)] for a in range(p)]
            self.sigma = list(range(p))
        else:
            c0, c1 = self._lowest_irreducible(p)
            self.modulus = (c0, c1)
            q = self.q
            self.add = [[self._enc((a % p + b % p) % p, (a // p + b // p) % p)
                         for b in range(q)] for a in range(q)]
            self.mul = [[0] * q for _ in range(q)]
            for a in range(q):
                a0, a1 = a % p, a // p
                for b in range(q):
                    b0, b1 = b % p, b // p
                    # (a0 + a1 x)(b0 + b1 x) with x^2 = -c0 - c1 x
                    z0 = a0 * b0
                    z1 = a0 * b1 + a1 * b0
                    z2 = a1 * b1
                    self.mul[a][b] = self._enc((z0 - z2 * c0) % p, (z1 - z2 * c1) % p)
            self.sigma = [self.power(a, p) for a in range(q)]
        self.neg = [self._neg(a) for a in range(self.q)]
        self.inverse = [None] * self.q
        for a in range(1, self.q):
            for b in range(1, self.q):
                if self.mul[a][b] == 1:
                    self.inverse[a] = b
                    break
        if self.q <= 16:
            self._verify_axioms()

    @staticmethod
    def _lowest_irreducible(p):
        # monic x^2 + c1 x + c0, first irreducible in lex order of (c0, c1)
        squares = {(x * x) % p for x in range(p)}
        for c0 in range(p):
            for c1 in range(p):
                disc = (c1 * c1 - 4 * c0) % p
                if c1 == 0 and p == 2:
                    # char 2: x^2 + c0 is (x + sqrt(c0))^2, never irreducible
                    continue
                if p == 2:
                    # x^2 + x + c0 irreducible iff c0 = 1
                    if c0 == 1 and c1 == 1:
                        return c0, c1
                    continue
                if disc not in squares:
                    return c0, c1
        raise MalformedMatrix(f"no irreducible quadratic over GF({p})")

    def _enc(self, a0, a1):
        return a0 + a1 * self.p

    def _neg(self, a):
        if self.degree == 1:
            return (-a) % self.p
        return self._enc((-(a % self.p)) % self.p, (-(a // self.p)) % self.p)

    def sub(self, a, b):
        return self.add[a][self.neg[b]]

    def power(self, a, k):
        r = 1
        for _ in range(k):
            r = self.mul[r][a]
        return r

    def _verify_axioms(self):
        q = self.q
        rng = range(q)
        for a in rng:
            assert self.add[a][0] == a and self.mul[a][1] == a
            assert self.add[a][self.neg[a]] == 0
            if a:
                assert self.mul[a][self.inverse[a]] == 1
            assert self.sigma[self.sigma[a]] == a
            for b in rng:
                assert self.add[a][b] == self.add[b][a]
                assert self.mul[a][b] == self.mul[b][a]
                for c in rng:
                    assert self.mul[a][self.add[b][c]] == \
                        self.add[self.mul[a][b]][self.mul[a][c]]
        # sigma is a field automorphism
        for a in rng:
            for b in rng:
                assert self.sigma[self.mul[a][b]] == self.mul[self.sigma[a]][self.sigma[b]]
                assert self.sigma[self.add[a][b]] == self.add[self.sigma[a]][self.sigma[b]]

    def __repr__(self):
        return f"GF({self.q})"

    def __eq__(self, other):
        return isinstance(other, Field) and self.p == other.p and self.degree == other.degree

    def __hash__(self):
        return hash((self.p, self.degree))


# -- linear algebra over a Field (rows are vectors) -------------------------

def vec_add(F, u, v):
    return tuple(F.add[a][b] for a, b in zip(u, v))

def vec_scale(F, c, u):
    return tuple(F.mul[c][a] for a in u)

def dot(F, u, v):
    s = 0
    for a, b in zip(u, v):
        s = F.add[s][F.mul[a][b]]
    return s

def mat_mul(F, A, B):
    Bt = list(zip(*B))
    return tuple(tuple(dot(F, row, col) for col in Bt) for row in A)

def mat_vec(F, A, v):
    return tuple(dot(F, row, v) for row in A)

def mat_sigma(F, A):
    return tuple(tuple(F.sigma[a] for a in row) for row in A)

def transpose(A):
    return tuple(zip(*A))

def identity_matrix(n):
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))

def rref(F, rows):
    """Reduced row echelon form; returns tuple of nonzero rows."""
    rows = [list(r) for r in rows]
    ncols = len(rows[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = F.inverse[rows[r][c]]
        rows[r] = [F.mul[inv][x] for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [F.sub(x, F.mul[f][y]) for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return tuple(tuple(row) for row in rows[:r])

def rank(F, rows):
    return len(rref(F, rows))

def mat_inverse(F, A):
    n = len(A)
    aug = [list(A[i]) + [1 if j == i else 0 for j in range(n)] for i in range(n)]
    red = rref(F, aug)
    if len(red) < n or any(red[i][i] != 1 for i in range(n)):
        raise MalformedMatrix("matrix is singular")
    return tuple(tuple(row[n:]) for row in red)

def kernel(F, rows, ncols):
    """Basis (rref) of the right kernel {v : rows . v = 0}, v a column."""
    red = rref(F, rows) if rows else ()
    pivots = []
    for row in red:
        pivots.append(next(c for c in range(ncols) if row[c] != 0))
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [0] * ncols
        v[fc] = 1
        for i, pc in enumerate(pivots):
            v[pc] = F.neg[red[i][fc]]
        basis.append(tuple(v))
    return rref(F, basis) if basis else ()


@dataclass(frozen=True)
class Subspace:
    """A subspace of GF(q)^n in canonical reduced-row-echelon form."""

    field: Field
    ambient: int
    basis: tuple  # tuple of row tuples, rref

    @classmethod
    def from_rows(cls, field, ambient, rows):
        return cls(field, ambient, rref(field, rows))

    @property
    def dim(self):
        return len(self.basis)

    def contains_vector(self, v):
        rows = list(self.basis)
        return rank(self.field, rows + [v]) == self.dim

    def contains(self, other):
        rows = list(self.basis) + list(other.basis)
        return rank(self.field, rows) == self.dim

    def sum(self, other):
        return Subspace.from_rows(self.field, self.ambient,
                                  list(self.basis) + list(other.basis))

    def intersection(self, other):
        # ker of the joint condition: v in self and v in other
        F = self.field
        rows_a = _annihilator_rows(self)
        rows_b = _annihilator_rows(other)
        basis = kernel(F, list(rows_a) + list(rows_b), self.ambient)
        return Subspace(F, self.ambient, basis)

    def vectors(self):
        """All member vectors (including zero)."""
        F = self.field
        out = [tuple([0] * self.ambient)]
        for row in self.basis:
            out = [vec_add(F, v, vec_scale(F, c, row)) for v in out for c in range(F.q)]
        return out

    def __repr__(self):
        return f"Subspace(dim={self.dim} of {self.ambient})"


def _annihilator_rows(space):
    """Rows a with a . v = 0 for all v in the space."""
    return kernel(space.field, list(space.basis), space.ambient)


@dataclass(frozen=True)
class Flag:
    """A maximal flag V_1 < ... < V_{n-1}, dim V_i = i."""

    subspaces: tuple  # tuple of Subspace, dims 1..n-1

    def __post_init__(self):
        n = self.subspaces[0].ambient
        if len(self.subspaces) != n - 1:
            raise MixedAmbient("a maximal flag needs n-1 subspaces")
        for i, s in enumerate(self.subspaces):
            if s.dim != i + 1:
                raise MixedAmbient(f"dimension {s.dim} at position {i}")
            if i and not s.contains(self.subspaces[i - 1]):
                raise MixedAmbient("flag subspaces must be nested")

    @property
    def field(self):
        return self.subspaces[0].field

    @property
    def ambient(self):
        return self.subspaces[0].ambient

    def key(self):
        return tuple(s.basis for s in self.subspaces)

    def adapted_basis(self):
        """Rows b_1..b_n with V_i = <b_1..b_i>, completed to a full basis."""
        F = self.field
        n = self.ambient
        rows = []
        for s in self.subspaces:
            for cand in s.basis:
                if rank(F, rows + [cand]) > len(rows):
                    rows.append(cand)
        for j in range(n):
            e = tuple(1 if k == j else 0 for k in range(n))
            if rank(F, rows + [e]) > len(rows):
                rows.append(e)
        return tuple(rows)

    def __repr__(self):
        return f"Flag{self.key()}"


def standard_flag(field, n):
    subs = []
    for i in range(1, n):
        rows = [tuple(1 if k == j else 0 for k in range(n)) for j in range(i)]
        subs.append(Subspace.from_rows(field, n, rows))
    return Flag(tuple(subs))


def reversed_flag(field, n):
    subs = []
    for i in range(1, n):
        rows = [tuple(1 if k == n - 1 - j else 0 for k in range(n)) for j in range(i)]
        subs.append(Subspace.from_rows(field, n, rows))
    return Flag(tuple(subs))


def flag_count(n, q):
    """Gaussian-product number of maximal flags of GF(q)^n."""
    return reduce(lambda acc, i: acc * (q ** i - 1) // (q - 1), range(2, n + 1), 1)


def enumerate_lines(field, n):
    """All 1-spaces, one canonical (rref) representative each, sorted."""
    seen = set()
    out = []
    for v in itertools.product(range(field.q), repeat=n):
        if all(x == 0 for x in v):
            continue
        s = Subspace.from_rows(field, n, [v])
        if s.basis not in seen:
            seen.add(s.basis)
            out.append(s)
    out.sort(key=lambda s: s.basis)
    return out


def enumerate_flags(n, field):
    """All maximal flags in canonical order; count checked against the
    Gaussian product."""
    expected = flag_count(n, field.q)
    if expected > FLAG_GUARD:
        raise TooLarge(f"{expected} flags exceeds the guard of {FLAG_GUARD}")
    partial = [()]
    for d in range(1, n):
        nxt = []
        for chain in partial:
            cur = chain[-1] if chain else None
            seen = set()
            for v in itertools.product(range(field.q), repeat=n):
                if all(x == 0 for x in v):
                    continue
                rows = list(cur.basis) if cur else []
                if cur is not None and cur.contains_vector(v):
                    continue
                s = Subspace.from_rows(field, n, rows + [v])
                if s.basis in seen:
                    continue
                seen.add(s.basis)
                nxt.append(chain + (s,))
        partial = nxt
    flags = [Flag(chain) for chain in partial]
    flags.sort(key=lambda f: f.key())
    if len(flags) != expected:
        raise TwinflipError(f"flag enumeration bug: {len(flags)} != {expected}")
    return flags


def flags_to_text(flags):
    lines = []
    for f in flags:
        flat = []
        for s in f.subspaces:
            for row in s.basis:
                flat.extend(row)
        lines.append(" ".join(str(x) for x in flat))
    return "\n".join(lines) + "\n"


# -- relative position ------------------------------------------------------

def relative_position_perm(F1: Flag, F2: Flag):
    """The permutation w (1-based images tuple) with delta(F1, F2) = w,
    recovered from the intersection-dimension table."""
    if F1.field != F2.field or F1.ambient != F2.ambient:
        raise MixedAmbient("flags live in different spaces")
    n = F1.ambient
    d = [[0] * (n + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == n:
                d[i][j] = j
            elif j == n:
                d[i][j] = i
            else:
                d[i][j] = F1.subspaces[i - 1].intersection(F2.subspaces[j - 1]).dim
    w = [0] * (n + 1)
    for j in range(1, n + 1):
        for i in range(1, n + 1):
            if d[i][j] - d[i - 1][j] - d[i][j - 1] + d[i - 1][j - 1] == 1:
                w[j] = i
                break
    return tuple(w[1:])


def perm_to_word(perm):
    """A reduced word (0-based generator indices) for a permutation given as a
    1-based image tuple, by stripping right descents."""
    p = list(perm)
    n = len(p)
    strips = []
    while True:
        for i in range(n - 1):
            if p[i] > p[i + 1]:
                strips.append(i)
                p[i], p[i + 1] = p[i + 1], p[i]
                break
        else:
            break
    return tuple(reversed(strips))


def word_to_perm(word, n):
    p = list(range(1, n + 1))
    for s in word:
        p[s], p[s + 1] = p[s + 1], p[s]
    return tuple(p)


def perm_compose(u, v):
    """(u o v)(x) = u(v(x)), 1-based image tuples."""
    return tuple(u[v[x] - 1] for x in range(len(u)))


def act(g, flag: Flag) -> Flag:
    """Image of a flag under the column map v -> g v."""
    F = flag.field
    gt = transpose(g)
    subs = []
    for s in flag.subspaces:
        rows = [tuple(dot(F, r, col) for col in zip(*gt)) for r in s.basis]
        subs.append(Subspace.from_rows(F, flag.ambient, rows))
    return Flag(tuple(subs))


def apartment_from_frame(lines):
    """The n! flags with coordinate subspaces spanned by subsets of the frame."""
    F = lines[0].field
    n = lines[0].ambient
    if len(lines) != n:
        raise DependentFrame(f"a frame of GF(q)^{n} needs {n} lines")
    rows = [ln.basis[0] for ln in lines]
    if rank(F, rows) != n:
        raise DependentFrame("frame lines are dependent")
    flags = []
    for order in itertools.permutations(range(n)):
        subs = []
        for i in range(1, n):
            subs.append(Subspace.from_rows(F, n, [rows[k] for k in order[:i]]))
        flags.append(Flag(tuple(subs)))
    uniq = {}
    for f in flags:
        uniq[f.key()] = f
    return sorted(uniq.values(), key=lambda f: f.key())


# -- forms ------------------------------------------------------------------

@dataclass(frozen=True)
class Form:
    """A non-degenerate sesquilinear form (u, v) = sigma(u)^T . gram . v.

    hermitian: sigma = Frobenius (degree-2 field), gram = sigma-conjugate
    transpose of itself.  alternating: sigma = id, gram skew with zero
    diagonal, even ambient dimension.
    """

    kind: str
    field: Field
    ambient: int
    gram: tuple

    def __post_init__(self):
        F = self.field
        G = self.gram
        if len(G) != self.ambient or any(len(r) != self.ambient for r in G):
            raise MalformedMatrix("gram matrix has wrong shape")
        if rank(F, list(G)) != self.ambient:
            raise MalformedMatrix("gram matrix is degenerate")
        if self.kind == "hermitian":
            if F.degree != 2:
                raise MalformedMatrix("hermitian forms need a degree-2 field")
            if mat_sigma(F, transpose(G)) != tuple(tuple(r) for r in G):
                raise MalformedMatrix("gram is not sigma-hermitian")
        elif self.kind == "alternating":
            if self.ambient % 2:
                raise MalformedMatrix("alternating flips need even dimension")
            for i in range(self.ambient):
                if G[i][i] != 0:
                    raise MalformedMatrix("alternating gram needs zero diagonal")
                for j in range(self.ambient):
                    if F.add[G[i][j]][G[j][i]] != 0:
                        raise MalformedMatrix("alternating gram must be skew")
        else:
            raise MalformedMatrix(f"unknown form kind {self.kind!r}")

    def evaluate(self, u, v):
        F = self.field
        su = tuple(F.sigma[a] for a in u)
        return dot(F, su, mat_vec(F, self.gram, v))

    def is_isotropic_vector(self, v):
        return self.evaluate(v, v) == 0

    def perp(self, space: Subspace) -> Subspace:
        """The orthogonal complement {v : (u, v) = 0 for all u in space}."""
        F = self.field
        rows = [mat_vec(F, transpose(self.gram), tuple(F.sigma[a] for a in u))
                for u in space.basis]
        return Subspace(F, self.ambient, kernel(F, rows, self.ambient))

    def restricted_gram_rank(self, space: Subspace):
        F = self.field
        rows = []
        for u in space.basis:
            rows.append(tuple(self.evaluate(u, v) for v in space.basis))
        return rank(F, rows) if rows else 0

    def is_nondegenerate_on(self, space: Subspace):
        return self.restricted_gram_rank(space) == space.dim


def hermitian_form(field, n, gram=None):
    if gram is None:
        gram = identity_matrix(n)
    return Form("hermitian", field, n, tuple(tuple(r) for r in gram))


def alternating_form(field, n, gram=None):
    if gram is None:
        m = n // 2
        F = field
        g = [[0] * n for _ in range(n)]
        for i in range(m):
            g[i][m + i] = 1
            g[m + i][i] = F.neg[1]
        gram = g
    return Form("alternating", field, n, tuple(tuple(r) for r in gram))


def orthogonal_flag(flag: Flag, form: Form) -> Flag:
    """(V_{n-1}^perp, ..., V_1^perp); an involution by biduality."""
    subs = tuple(form.perp(s) for s in reversed(flag.subspaces))
    return Flag(subs)


# -- matrix groups -----------------------------------------------------------

def gl_order(n, q):
    return reduce(lambda acc, i: acc * (q ** n - q ** i), range(n), 1)

def unitary_order(n, q0):
    """|GU_n(q0)| over GF(q0^2)."""
    out = q0 ** (n * (n - 1) // 2)
    for i in range(1, n + 1):
        out *= q0 ** i - (-1) ** i
    return out

def symplectic_order(n, q):
    m = n // 2
    out = q ** (m * m)
    for i in range(1, m + 1):
        out *= q ** (2 * i) - 1
    return out


def _all_vectors(field, n):
    return list(itertools.product(range(field.q), repeat=n))


def group_elements(kind, n, field, form=None):
    """Exhaustive invertible-matrix list for GL / unitary(form) /
    symplectic(form).  Unitary and symplectic are enumerated directly by
    extending form bases (orthonormal resp. hyperbolic), so they stay
    feasible when the ambient GL does not."""
    q = field.q
    if kind == "GL":
        order = gl_order(n, q)
        if order > GROUP_GUARD:
            raise TooLarge(f"|GL_{n}(F_{q})| = {order} exceeds the guard")
        return _enumerate_gl(field, n)
    if kind == "unitary":
        if form is None or form.kind != "hermitian":
            raise MalformedMatrix("unitary needs a hermitian form")
        if form.gram == identity_matrix(n):
            return _enumerate_isometries_orthonormal(field, n, form)
        return _filter_isometries(field, n, form)
    if kind == "symplectic":
        if form is None or form.kind != "alternating":
            raise MalformedMatrix("symplectic needs an alternating form")
        if form.gram == alternating_form(field, n).gram:
            return _enumerate_isometries_hyperbolic(field, n, form)
        return _filter_isometries(field, n, form)
    raise MalformedMatrix(f"unknown group kind {kind!r}")


def _enumerate_gl(field, n):
    F = field
    vectors = _all_vectors(F, n)
    out = []
    def extend(cols, span):
        spanset = set(span)
        last = len(cols) == n - 1
        for v in vectors:
            if v in spanset:
                continue
            if last:
                out.append(transpose(tuple(cols) + (v,)))
                continue
            newspan = set()
            for w in span:
                for c in range(F.q):
                    newspan.add(vec_add(F, w, vec_scale(F, c, v)))
            extend(cols + [v], sorted(newspan))
    extend([], [tuple([0] * n)])
    return out


def is_isometry(field, form, g):
    """sigma(g)^T . gram . g == gram."""
    F = field
    lhs = mat_mul(F, mat_mul(F, transpose(mat_sigma(F, g)), form.gram), g)
    return lhs == tuple(tuple(r) for r in form.gram)


def _filter_isometries(field, n, form):
    order = gl_order(n, field.q)
    if order > GROUP_GUARD:
        raise TooLarge(f"isometry filter over |GL| = {order} exceeds the guard")
    return [g for g in _enumerate_gl(field, n) if is_isometry(field, form, g)]


def _enumerate_isometries_orthonormal(field, n, form):
    """Unitary group for gram = I: images of the orthonormal standard basis,
    built inside iterated perps."""
    F = field
    out = []
    def extend(cols, perp_basis):
        if len(cols) == n:
            out.append(transpose(tuple(cols)))
            return
        # vectors of the perp with norm 1
        space = [tuple([0] * n)]
        for row in perp_basis:
            space = [vec_add(F, v, vec_scale(F, c, row)) for v in space for c in range(F.q)]
        for v in space:
            if form.evaluate(v, v) != 1:
                continue
            rows = [mat_vec(F, transpose(form.gram), tuple(F.sigma[a] for a in u))
                    for u in cols + [v]]
            newperp = kernel(F, rows, n)
            extend(cols + [v], newperp)
    extend([], identity_matrix(n))
    return out


def _enumerate_isometries_hyperbolic(field, n, form):
    """Symplectic group for the standard gram: images of the hyperbolic basis
    (e_1..e_m, f_1..f_m), extended pair by pair inside iterated perps."""
    F = field
    m = n // 2
    out = []
    def perp_space(cols):
        rows = [mat_vec(F, transpose(form.gram), u) for u in cols]
        basis = kernel(F, rows, n)
        space = [tuple([0] * n)]
        for row in basis:
            space = [vec_add(F, v, vec_scale(F, c, row)) for v in space for c in range(F.q)]
        return space
    def extend(es, fs):
        if len(es) == m:
            cols = list(es) + list(fs)
            out.append(transpose(tuple(cols)))
            return
        space = perp_space(list(es) + list(fs))
        for u in space:
            if all(x == 0 for x in u):
                continue
            for v in space:
                if form.evaluate(u, v) == 1:
                    extend(es + [u], fs + [v])
    extend([], [])
    return out


def theta_group(field, form, g):
    """The group-level flip gram^-1 . sigma(g)^-T . gram."""
    F = field
    ginv = mat_inverse(F, g)
    middle = transpose(mat_sigma(F, ginv))
    return mat_mul(F, mat_mul(F, mat_inverse(F, form.gram), middle), form.gram)
