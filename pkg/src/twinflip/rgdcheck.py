"""Executable verification of RGD, BN and twin-BN axioms on explicit
matrix data for GL_n over a small field (spherical type A only).

Everything here is set-theoretic on exhaustive element lists: the Bruhat and
Birkhoff partitions are built from |B|^2 products per cell, never through the
flag shortcut, so the cell-id functions computed from flags can be checked
against an independent route.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import coxeter, flagmodel
from .errors import TooLarge
from .flagmodel import mat_inverse, mat_mul

# -- data ---------------------------------------------------------------------


def _unit_matrix(field, n, i, j, lam):
    rows = [[1 if a == b else 0 for b in range(n)] for a in range(n)]
    rows[i][j] = lam
    return tuple(tuple(r) for r in rows)


def _diag(field, n, lams):
    return tuple(tuple(lams[a] if a == b else 0 for b in range(n)) for a in range(n))


def type_a_roots(n):
    """Roots alpha_(i,j) of A_{n-1} as ordered pairs, 0-based."""
    return [(i, j) for i in range(n) for j in range(n) if i != j]


def root_group(field, n, root):
    i, j = root
    return [_unit_matrix(field, n, i, j, lam) for lam in range(field.q)]


def torus(field, n):
    units = [x for x in range(1, field.q)]
    return [_diag(field, n, lams) for lams in itertools.product(units, repeat=n)]


def simple_reflection_matrix(field, n, s):
    """Permutation matrix of the adjacent transposition (s, s+1)."""
    perm = list(range(n))
    perm[s], perm[s + 1] = perm[s + 1], perm[s]
    return tuple(tuple(1 if a == perm[b] else 0 for b in range(n)) for a in range(n))


def weyl_matrix(field, n, system, g):
    """Permutation matrix representing the Weyl element g."""
    out = flagmodel.identity_matrix(n)
    for s in system.words[g]:
        out = mat_mul(field, out, simple_reflection_matrix(field, n, s))
    return out


@dataclass
class RGDData:
    field: object
    n: int
    group: list
    roots: list
    root_groups: dict
    torus: list


@dataclass
class BNData:
    field: object
    n: int
    group: list
    b: list
    n_grp: list
    system: object


def _upper_triangular(field, n, strict=False):
    out = []
    units = range(1, field.q)
    uppers = [(i, j) for i in range(n) for j in range(i + 1, n)]
    diag_iter = [(1,) * n] if strict else itertools.product(units, repeat=n)
    for lams in diag_iter:
        for vals in itertools.product(range(field.q), repeat=len(uppers)):
            rows = [[0] * n for _ in range(n)]
            for a in range(n):
                rows[a][a] = lams[a]
            for (i, j), v in zip(uppers, vals):
                rows[i][j] = v
            out.append(tuple(tuple(r) for r in rows))
    return out


def _lower_triangular(field, n):
    return [tuple(zip(*g)) for g in _upper_triangular(field, n)]


def _monomial(field, n):
    out = []
    units = range(1, field.q)
    for perm in itertools.permutations(range(n)):
        for lams in itertools.product(units, repeat=n):
            out.append(tuple(tuple(lams[b] if a == perm[b] else 0 for b in range(n))
                             for a in range(n)))
    return out


def gl_rgd_data(n, field) -> RGDData:
    order = flagmodel.gl_order(n, field.q)
    if order > flagmodel.GROUP_GUARD:
        raise TooLarge(f"|GL_{n}(F_{field.q})| = {order} exceeds the guard")
    group = flagmodel.group_elements("GL", n, field)
    roots = type_a_roots(n)
    groups = {r: root_group(field, n, r) for r in roots}
    return RGDData(field, n, group, roots, groups, torus(field, n))


def gl_bn_data(n, field, negative=False) -> BNData:
    order = flagmodel.gl_order(n, field.q)
    if order > flagmodel.GROUP_GUARD:
        raise TooLarge(f"|GL_{n}(F_{field.q})| = {order} exceeds the guard")
    group = flagmodel.group_elements("GL", n, field)
    b = _lower_triangular(field, n) if negative else _upper_triangular(field, n)
    system = coxeter.system_for_type(f"A{n - 1}")
    return BNData(field, n, group, b, _monomial(field, n), system)


# -- closures -----------------------------------------------------------------

def closure(field, generators, bound=None):
    """Subgroup generated by the generators, by BFS over right products."""
    gens = [tuple(tuple(r) for r in g) for g in generators]
    seen = set(gens) | {flagmodel.identity_matrix(len(gens[0]))}
    queue = list(seen)
    while queue:
        x = queue.pop()
        for g in gens:
            y = mat_mul(field, x, g)
            if y not in seen:
                if bound and len(seen) >= bound:
                    raise TooLarge("closure exceeded its bound")
                seen.add(y)
                queue.append(y)
    return seen


# -- RGD axioms ---------------------------------------------------------------

def _interval(alpha, beta):
    """]alpha,beta[ in type A: the at-most-one root that is a positive
    combination of the (prenilpotent) pair."""
    (i, j), (k, l) = alpha, beta
    out = []
    if j == k and i != l:
        out.append((i, l))
    if l == i and k != j:
        out.append((k, j))
    return out


def _reflect_root(root, s):
    def sw(x):
        if x == s:
            return s + 1
        if x == s + 1:
            return s
        return x
    return (sw(root[0]), sw(root[1]))


def check_rgd(data: RGDData):
    F, n = data.field, data.n
    ident = flagmodel.identity_matrix(n)
    records = []

    def record(name, ok, witness=None):
        records.append({"name": name, "ok": bool(ok), "witness": witness})

    # RGD0: non-trivial root groups
    bad = [r for r in data.roots if set(data.root_groups[r]) == {ident}]
    record("RGD0", not bad, {"root": bad[0]} if bad else None)

    # RGD1: commutators of prenilpotent pairs land in the interval group
    ok1, wit1 = True, None
    for a in data.roots:
        for b in data.roots:
            if a >= b or b == (a[1], a[0]):
                continue
            gamma = _interval(a, b)
            gens = [g for r in gamma for g in data.root_groups[r]]
            target = closure(F, gens) if gens else {ident}
            for u in data.root_groups[a]:
                ui = mat_inverse(F, u)
                for v in data.root_groups[b]:
                    comm = mat_mul(F, mat_mul(F, ui, mat_inverse(F, v)),
                                   mat_mul(F, u, v))
                    if comm not in target:
                        ok1, wit1 = False, {"pair": [a, b]}
                        break
                if not ok1:
                    break
            if not ok1:
                break
        if not ok1:
            break
    record("RGD1", ok1, wit1)

    # RGD2: mu(u) = u' u u'' conjugates U_beta onto U_{s(beta)}
    ok2, wit2 = True, None
    for s in range(n - 1):
        alpha = (s, s + 1)
        neg = data.root_groups[(s + 1, s)]
        for u in data.root_groups[alpha]:
            if u == ident:
                continue
            found = False
            for u1 in neg:
                for u2 in neg:
                    m = mat_mul(F, mat_mul(F, u1, u), u2)
                    mi = mat_inverse(F, m)
                    good = True
                    for beta in data.roots:
                        img = {mat_mul(F, mat_mul(F, m, x), mi)
                               for x in data.root_groups[beta]}
                        if img != set(data.root_groups[_reflect_root(beta, s)]):
                            good = False
                            break
                    if good:
                        found = True
                        break
                if found:
                    break
            if not found:
                ok2, wit2 = False, {"s": s, "u": u}
                break
        if not ok2:
            break
    record("RGD2", ok2, wit2)

    # RGD3: U_{-alpha_s} not contained in U_+
    u_plus = closure(F, [g for (i, j) in data.roots if i < j
                         for g in data.root_groups[(i, j)]])
    ok3 = all(any(g not in u_plus for g in data.root_groups[(s + 1, s)])
              for s in range(n - 1))
    record("RGD3", ok3)

    # RGD4: G = T . <U_alpha>
    u_all = closure(F, [g for r in data.roots for g in data.root_groups[r]])
    product = {mat_mul(F, t, h) for t in data.torus for h in u_all}
    record("RGD4", product == set(data.group))

    # RGD5: T normalizes every root group
    ok5, wit5 = True, None
    for t in data.torus:
        ti = mat_inverse(F, t)
        for r in data.roots:
            members = set(data.root_groups[r])
            if any(mat_mul(F, mat_mul(F, t, u), ti) not in members
                   for u in data.root_groups[r]):
                ok5, wit5 = False, {"root": r}
                break
        if not ok5:
            break
    record("RGD5", ok5, wit5)

    return {"ok": all(r["ok"] for r in records), "records": records}


# -- Bruhat / Birkhoff machinery ----------------------------------------------

def _generators_for(field, n, kind):
    gens = []
    prim = _primitive_unit(field)
    for a in range(n):
        lams = [1] * n
        lams[a] = prim
        gens.append(_diag(field, n, lams))
    if kind in ("upper", "lower"):
        for s in range(n - 1):
            m = _unit_matrix(field, n, s, s + 1, 1)
            gens.append(m if kind == "upper" else tuple(zip(*m)))
    elif kind == "monomial":
        for s in range(n - 1):
            gens.append(simple_reflection_matrix(field, n, s))
    return gens


def _primitive_unit(field):
    for x in range(2, field.q):
        seen, y = set(), x
        while y not in seen:
            seen.add(y)
            y = field.mul[y][x]
        if len(seen) == field.q - 1:
            return x
    return 1


def double_cosets(field, left, mids, right):
    """cells[w] = left . mid_w . right as frozensets, built exhaustively."""
    cells = {}
    for w, nw in mids.items():
        half = [mat_mul(field, b, nw) for b in left]
        cells[w] = frozenset(mat_mul(field, h, b2) for h in half for b2 in right)
    return cells


def check_bn(bn: BNData):
    F, n = bn.field, bn.n
    W = bn.system
    records = []

    def record(name, ok, witness=None):
        records.append({"name": name, "ok": bool(ok), "witness": witness})

    bset, nset, gset = set(bn.b), set(bn.n_grp), set(bn.group)
    # generated subgroups match, then B and N generate G
    gens_b = _generators_for(F, n, "upper")
    gens_n = _generators_for(F, n, "monomial")
    sub_b = closure(F, gens_b)
    sub_n = closure(F, gens_n)
    gen_ok = sub_b == bset and sub_n == nset and closure(F, gens_b + gens_n) == gset
    record("generation", gen_ok)

    t = bset & nset
    record("T=BcapN normal in N",
           all(mat_mul(F, mat_mul(F, x, u), mat_inverse(F, x)) in t
               for x in bn.n_grp for u in t))

    mids = {g: weyl_matrix(F, n, W, g) for g in range(W.order)}
    cells = double_cosets(F, bn.b, mids, bn.b)
    union_ok = set().union(*cells.values()) == gset
    disjoint_ok = sum(len(c) for c in cells.values()) == len(gset)
    record("bruhat partition", union_ok and disjoint_ok,
           None if union_ok and disjoint_ok else {"sizes": {W.words[w]: len(c) for w, c in cells.items()}})

    size_ok = all(len(cells[w]) == len(bn.b) * F.q ** W.lengths[w] for w in cells)
    record("cell sizes |BwB| = |B| q^l(w)", size_ok,
           {W.words[w]: len(cells[w]) for w in cells} if not size_ok else None)

    cell_of = {}
    for w, c in cells.items():
        for g in c:
            cell_of[g] = w
    bn1_ok, wit = True, None
    for w in range(W.order):
        for s in range(W.rank):
            ws = W.rmul[w][s]
            ns = simple_reflection_matrix(F, n, s)
            allowed = {w, ws}
            for b in bn.b:
                g = mat_mul(F, mat_mul(F, mids[w], b), ns)
                if cell_of[g] not in allowed:
                    bn1_ok, wit = False, {"w": W.words[w], "s": s}
                    break
            if not bn1_ok:
                break
        if not bn1_ok:
            break
    record("BN1", bn1_ok, wit)

    bn2_ok = True
    for s in range(W.rank):
        ns = simple_reflection_matrix(F, n, s)
        nsi = mat_inverse(F, ns)
        if all(mat_mul(F, mat_mul(F, ns, b), nsi) in bset for b in bn.b):
            bn2_ok = False
            break
    record("BN2", bn2_ok)

    return {"ok": all(r["ok"] for r in records), "records": records,
            "cells": cells, "cell_of": cell_of}


def check_twin_bn(bplus: BNData, bminus: BNData):
    F, n = bplus.field, bplus.n
    W = bplus.system
    records = []

    def record(name, ok, witness=None):
        records.append({"name": name, "ok": bool(ok), "witness": witness})

    bp, bm = set(bplus.b), set(bminus.b)
    tset = bp & bm
    record("saturation B+ cap B- = T",
           tset == set(torus(F, n)))

    mids = {g: weyl_matrix(F, n, W, g) for g in range(W.order)}
    cells_pm = double_cosets(F, bplus.b, mids, bminus.b)
    gset = set(bplus.group)
    union_ok = set().union(*cells_pm.values()) == gset
    disjoint_ok = sum(len(c) for c in cells_pm.values()) == len(gset)
    record("birkhoff partition", union_ok and disjoint_ok)

    bcell_of = {}
    for w, c in cells_pm.items():
        for g in c:
            bcell_of[g] = w

    # TBN1 for both signs, using cell ids; the negative-sign cells come from
    # inverses: g in B- w B+ iff g^-1 in B+ w^-1 B-.
    tbn1_ok, wit = True, None
    for w in range(W.order):
        for s in range(W.rank):
            ws = W.rmul[w][s]
            if W.lengths[ws] >= W.lengths[w]:
                continue
            ns = simple_reflection_matrix(F, n, s)
            for b in bminus.b:
                g = mat_mul(F, mat_mul(F, mids[w], b), ns)
                if bcell_of[g] != ws:
                    tbn1_ok, wit = False, {"eps": "+", "w": W.words[w], "s": s}
                    break
            if not tbn1_ok:
                break
            for b in bplus.b:
                g = mat_mul(F, mat_mul(F, mids[w], b), ns)
                gi = mat_inverse(F, g)
                if W.inv[bcell_of[gi]] != ws:
                    tbn1_ok, wit = False, {"eps": "-", "w": W.words[w], "s": s}
                    break
            if not tbn1_ok:
                break
        if not tbn1_ok:
            break
    record("TBN1", tbn1_ok, wit)

    tbn2_ok = True
    for s in range(W.rank):
        ns = simple_reflection_matrix(F, n, s)
        if any(mat_mul(F, b, ns) in bm for b in bplus.b):
            tbn2_ok = False
            break
    record("TBN2", tbn2_ok)

    return {"ok": all(r["ok"] for r in records), "records": records,
            "cells": cells_pm, "bcell_of": bcell_of}


# -- cell identification via flags ---------------------------------------------

def bruhat_cell(g, system, field):
    """The w with g in B+ w B+, from southwest submatrix ranks (equivalently
    the relative position of g . standard flag and the standard flag)."""
    n = len(g)
    d = [[0] * (n + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            sub = [row[:j] for row in g[i:]]
            d[i][j] = j - (flagmodel.rank(field, sub) if sub else 0)
    w = [0] * (n + 1)
    for j in range(1, n + 1):
        for i in range(1, n + 1):
            if d[i][j] - d[i - 1][j] - d[i][j - 1] + d[i - 1][j - 1] == 1:
                w[j] = i
                break
    return system.element_from_word(flagmodel.perm_to_word(tuple(w[1:])))


def birkhoff_cell(g, system, field):
    """The w with g in B+ w B-, from southeast submatrix ranks."""
    n = len(g)
    e = [[0] * (n + 2) for _ in range(n + 2)]
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            sub = [row[j - 1:] for row in g[i - 1:]]
            e[i][j] = flagmodel.rank(field, sub)
    w = [0] * (n + 1)
    for j in range(1, n + 1):
        for i in range(1, n + 1):
            if e[i][j] - e[i + 1][j] - e[i][j + 1] + e[i + 1][j + 1] == 1:
                w[j] = i
                break
    return system.element_from_word(flagmodel.perm_to_word(tuple(w[1:])))


def bruhat_cell_membership(g, w, system, field, b_elements):
    """Independent oracle: is g in B n_w B, by scanning b in B with early
    exit on n_w^-1 b^-1 g in B."""
    n = len(g)
    nw = weyl_matrix(field, n, system, w)
    nwi = mat_inverse(field, nw)
    bset = set(b_elements)
    for b in b_elements:
        h = mat_mul(field, nwi, mat_mul(field, mat_inverse(field, b), g))
        if h in bset:
            return True
    return False


def report_text(report):
    lines = []
    for r in report["records"]:
        status = "pass" if r["ok"] else "FAIL"
        extra = f"  witness: {r['witness']}" if r["witness"] else ""
        lines.append(f"[{status}] {r['name']}{extra}")
    return "\n".join(lines) + "\n"
