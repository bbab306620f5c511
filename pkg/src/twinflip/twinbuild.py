"""W-metric buildings and spherical twin buildings.

A Building stores its full N x N distance table of Coxeter-element ids
(numpy uint16).  The twin of a spherical building is the formal-copy twin:
delta_-(c_-, d_-) = w_S delta(c, d) w_S, delta*(c, d_-) = delta(c, d) w_S,
delta*(c_-, d) = w_S delta(c, d).  Twin chambers are (eps, id) pairs with
eps in {+1, -1}.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import coxeter, flagmodel
from .chambersys import ChamberSystem
from .errors import (BadChamber, BadType, NotOpposite, NotSpherical,
                     TwinflipError)

POS, NEG = 1, -1


def _length_array(system):
    return np.array(system.lengths, dtype=np.int16)


def _rmul_array(system, s):
    return np.array([system.rmul[g][s] for g in range(system.order)], dtype=np.uint16)


def _elem_map(system, fn):
    return np.array([fn(g) for g in range(system.order)], dtype=np.uint16)


class Building:
    """A finite building of type (W, S) given by its distance table."""

    def __init__(self, system, delta, labels=None):
        self.system = system
        self.delta = np.asarray(delta, dtype=np.uint16)
        if self.delta.ndim != 2 or self.delta.shape[0] != self.delta.shape[1]:
            raise BadChamber("distance table must be square")
        self.size = self.delta.shape[0]
        self.labels = labels
        self.lengths = _length_array(system)
        self._gen_ids = [system.generator(s).index for s in range(system.rank)]
        self._panel_cache = {}

    def distance(self, x, y) -> coxeter.CoxeterElement:
        return coxeter.CoxeterElement(self.system, int(self.delta[x, y]))

    def numerical_distance(self, x, y) -> int:
        return int(self.lengths[self.delta[x, y]])

    def panel(self, c, s):
        """Chambers s-adjacent to c (including c)."""
        key = s
        if key not in self._panel_cache:
            gid = self._gen_ids[s]
            label = np.full(self.size, -1, dtype=np.int64)
            members = {}
            for x in range(self.size):
                if label[x] != -1:
                    continue
                row = self.delta[x]
                mem = np.flatnonzero((row == 0) | (row == gid))
                label[mem] = x
                members[x] = mem.tolist()
            self._panel_cache[key] = (label, members)
        label, members = self._panel_cache[key]
        return members[int(label[c])]

    def chamber_system(self) -> ChamberSystem:
        """The induced chamber system: c ~_s d iff delta(c,d) in {1, s}."""
        class_maps = []
        for s in range(self.system.rank):
            self.panel(0, s)
            label, _ = self._panel_cache[s]
            class_maps.append(label.tolist())
        return ChamberSystem(tuple(self.system.labels), class_maps)

    def opposite_chambers(self, c):
        """Chambers at distance w_S from c (spherical building)."""
        ws = self.system.longest_element().index
        return np.flatnonzero(self.delta[c] == ws).tolist()

    def dump_table(self, path):
        with open(path, "wb") as fh:
            fh.write(struct.pack("<II", self.size, self.system.order))
            self.delta.astype("<u2").tofile(fh)

    @staticmethod
    def load_table(path):
        with open(path, "rb") as fh:
            n, order = struct.unpack("<II", fh.read(8))
            data = np.fromfile(fh, dtype="<u2", count=n * n).reshape(n, n)
        return n, order, data


def thin_building(system) -> Building:
    """The Coxeter building: chambers = W, delta(x, y) = x^-1 y."""
    n = system.order
    delta = np.zeros((n, n), dtype=np.uint16)
    for x in range(n):
        xi = system.inv[x]
        for y in range(n):
            delta[x, y] = system.mult_index(xi, y)
    return Building(system, delta)


# -- flag buildings ----------------------------------------------------------

@dataclass
class FlagBuilding:
    """Type A_{n-1} building realized on the maximal flags of GF(q)^n."""

    field: flagmodel.Field
    n: int
    flags: list
    building: Building
    index_of: dict = dc_field(default_factory=dict)

    def flag(self, c) -> flagmodel.Flag:
        return self.flags[c]

    def chamber_of(self, flag) -> int:
        return self.index_of[flag.key()]

    def act_chamber(self, g, c) -> int:
        return self.index_of[flagmodel.act(g, self.flags[c]).key()]


def _popcount(arr):
    return np.bitwise_count(arr)


def _flag_masks(flags, field, n):
    """Per flag and dimension 1..n-1, a bitmask over vector codes of GF(q)^n."""
    q = field.q
    nbits = q ** n
    nwords = (nbits + 63) // 64
    out = np.zeros((len(flags), n - 1, nwords), dtype=np.uint64)
    weights = [q ** k for k in range(n)]
    for ci, f in enumerate(flags):
        for d, s in enumerate(f.subspaces):
            mask = 0
            for v in s.vectors():
                code = sum(x * w for x, w in zip(v, weights))
                mask |= 1 << code
            for w in range(nwords):
                out[ci, d, w] = (mask >> (64 * w)) & 0xFFFFFFFFFFFFFFFF
    return out


def _perm_code_table(system, n):
    """Element id of each base-(n+1) permutation code."""
    size = (n + 1) ** n
    table = np.full(size, 0xFFFF, dtype=np.uint16)
    for g in range(system.order):
        perm = flagmodel.word_to_perm(system.words[g], n)
        code = sum(perm[j] * (n + 1) ** j for j in range(n))
        table[code] = g
    return table


def flag_distance_table(flags, field, n, system, block=128):
    """Vectorized all-pairs relative position via subspace bitmasks.

    The pure-Python flagmodel.relative_position_perm is the independent
    oracle for this routine; tests compare the two.
    """
    N = len(flags)
    masks = _flag_masks(flags, field, n)
    q = field.q
    dim_of_count = np.zeros(q ** (n - 1) + 1, dtype=np.int8)
    for d in range(n):
        dim_of_count[q ** d] = d
    code_table = _perm_code_table(system, n)
    delta = np.zeros((N, N), dtype=np.uint16)
    base = n + 1
    for x0 in range(0, N, block):
        x1 = min(x0 + block, N)
        bsz = x1 - x0
        # d[i][j] for 0..n, borders included
        dims = np.zeros((n + 1, n + 1, bsz, N), dtype=np.int16)
        for j in range(1, n + 1):
            dims[n, j] = j
        for i in range(1, n + 1):
            dims[i, n] = i
        for i in range(1, n):
            for j in range(1, n):
                inter = masks[x0:x1, i - 1][:, None, :] & masks[None, :, j - 1]
                counts = _popcount(inter).sum(axis=2)
                dims[i, j] = dim_of_count[counts]
        codes = np.zeros((bsz, N), dtype=np.int64)
        for j in range(1, n + 1):
            wj = np.zeros((bsz, N), dtype=np.int64)
            for i in range(1, n + 1):
                inc = (dims[i, j] - dims[i - 1, j] - dims[i, j - 1]
                       + dims[i - 1, j - 1])
                wj += i * (inc == 1)
            codes += wj * base ** (j - 1)
        delta[x0:x1] = code_table[codes]
    if delta.max() == 0xFFFF:
        raise TwinflipError("relative position produced a non-element code")
    return delta


def flag_building(n, field, system=None) -> FlagBuilding:
    if system is None:
        system = coxeter.system_for_type(f"A{n - 1}")
    if system.rank != n - 1:
        raise BadType("flag building of GF(q)^n needs a rank n-1 system")
    flags = flagmodel.enumerate_flags(n, field)
    delta = flag_distance_table(flags, field, n, system)
    b = Building(system, delta)
    fb = FlagBuilding(field, n, flags, b)
    fb.index_of = {f.key(): i for i, f in enumerate(flags)}
    return fb


def relative_position_element(system, f1, f2) -> coxeter.CoxeterElement:
    """Oracle-route relative position as a Coxeter element."""
    perm = flagmodel.relative_position_perm(f1, f2)
    return system.element_from_word(flagmodel.perm_to_word(perm))


# -- axiom checks ------------------------------------------------------------

def check_building_axioms(b: Building, max_witnesses=3):
    """Exhaustive Bu1-Bu3 verification over the distance table."""
    sys_ = b.system
    delta = b.delta
    N = b.size
    lengths = b.lengths
    violations = []

    def note(axiom, witness):
        if len(violations) < max_witnesses:
            violations.append({"axiom": axiom, "witness": witness})

    diag_ok = bool(np.all(np.diagonal(delta) == 0))
    eye = np.eye(N, dtype=bool)
    bu1_ok = diag_ok and bool(np.all((delta == 0) == eye))
    if not bu1_ok:
        bad = np.argwhere((delta == 0) != eye)
        note("Bu1", {"pair": bad[0].tolist()})

    bu2_ok = True
    bu3_ok = True
    for s in range(sys_.rank):
        gid = b._gen_ids[s]
        rs = _rmul_array(sys_, s)
        longer = lengths[rs] > lengths
        for y in range(N):
            zs = np.flatnonzero(delta[y] == gid)
            w_col = delta[:, y]
            ws_col = rs[w_col]
            must = longer[w_col]
            for z in zs:
                v_col = delta[:, z]
                ok = np.where(must, v_col == ws_col, (v_col == w_col) | (v_col == ws_col))
                if not ok.all():
                    bu2_ok = False
                    x = int(np.flatnonzero(~ok)[0])
                    note("Bu2", {"x": x, "y": int(y), "z": int(z)})
            exists = np.zeros(N, dtype=bool)
            for z in zs:
                exists |= delta[:, z] == ws_col
            if not exists.all():
                bu3_ok = False
                x = int(np.flatnonzero(~exists)[0])
                note("Bu3", {"x": x, "y": int(y), "s": s})
    return {"ok": bu1_ok and bu2_ok and bu3_ok,
            "Bu1": bu1_ok, "Bu2": bu2_ok, "Bu3": bu3_ok,
            "violations": violations}


class TwinBuilding:
    """A spherical twin: positive half plus the formal-copy negative half."""

    def __init__(self, pos: Building, verify=True):
        sys_ = pos.system
        self.system = sys_
        self.pos = pos
        self.size = pos.size
        ws = sys_.longest_element().index
        self.ws = ws
        conj = _elem_map(sys_, lambda g: sys_.mult_index(sys_.mult_index(ws, g), ws))
        rws = _elem_map(sys_, lambda g: sys_.mult_index(g, ws))
        lws = _elem_map(sys_, lambda g: sys_.mult_index(ws, g))
        self._conj_ws, self._rws, self._lws = conj, rws, lws
        self.neg = Building(sys_, conj[pos.delta])
        # delta*(pos x, neg y) and delta*(neg x, pos y)
        self.costar_pm = rws[pos.delta]
        self.costar_mp = lws[pos.delta]
        self.lengths = pos.lengths
        if verify:
            rep = check_twin_axioms(self)
            if not rep["ok"]:
                raise TwinflipError(f"twin axioms failed: {rep['violations']}")

    def half(self, eps) -> Building:
        return self.pos if eps == POS else self.neg

    def codistance_index(self, a, b) -> int:
        """delta*((eps,x),(eps',y)) as an element id; halves must differ."""
        (e1, x), (e2, y) = a, b
        if e1 == e2:
            raise BadChamber("codistance needs chambers in opposite halves")
        return int(self.costar_pm[x, y] if e1 == POS else self.costar_mp[x, y])

    def codistance(self, a, b) -> coxeter.CoxeterElement:
        return coxeter.CoxeterElement(self.system, self.codistance_index(a, b))

    def distance_index(self, a, b) -> int:
        (e1, x), (e2, y) = a, b
        if e1 != e2:
            raise BadChamber("distance needs chambers in one half")
        return int(self.half(e1).delta[x, y])

    def opposite(self, a, b) -> bool:
        return self.codistance_index(a, b) == 0

    def panel(self, a, s):
        eps, c = a
        return [(eps, d) for d in self.half(eps).panel(c, s)]

    def residue(self, a, J):
        """The J-residue of a twin chamber, as (eps, sorted typeset, ids)."""
        eps, c = a
        half = self.half(eps)
        J = tuple(sorted(set(J)))
        seen = {c}
        queue = [c]
        while queue:
            x = queue.pop()
            for s in J:
                for y in half.panel(x, s):
                    if y not in seen:
                        seen.add(y)
                        queue.append(y)
        return TwinResidue(eps, J, tuple(sorted(seen)))

    # -- projections -------------------------------------------------------

    def proj(self, res: "TwinResidue", a):
        """Projection of the twin chamber a onto the residue.

        Same half: the unique member minimizing l(delta(., a)).
        Cross half: the unique member maximizing l(delta*(., a)); spherical
        residues only (always true here since W is finite).
        """
        eps, c = a
        if res.eps != eps and not res.spherical():
            raise NotSpherical("cross-half projection needs a spherical residue")
        if res.eps == eps:
            half = self.half(eps)
            best, bestlen = None, None
            tie = False
            for m in res.members:
                ln = int(self.lengths[half.delta[m, c]])
                if bestlen is None or ln < bestlen:
                    best, bestlen, tie = m, ln, False
                elif ln == bestlen:
                    tie = True
            if tie:
                raise TwinflipError("same-half projection is not unique")
            return (res.eps, best)
        best, bestlen = None, None
        tie = False
        for m in res.members:
            ln = int(self.lengths[self.codistance_index((res.eps, m), a)])
            if bestlen is None or ln > bestlen:
                best, bestlen, tie = m, ln, False
            elif ln == bestlen:
                tie = True
        if tie:
            raise TwinflipError("cross-half projection is not unique")
        return (res.eps, best)

    def proj_set(self, res: "TwinResidue", source: "TwinResidue"):
        return {self.proj(res, (source.eps, m)) for m in source.members}

    def parallel(self, r1: "TwinResidue", r2: "TwinResidue") -> bool:
        """proj_{r1}(r2) = r1 and proj_{r2}(r1) = r2, elementwise images."""
        img1 = {c for _, c in self.proj_set(r1, r2)}
        img2 = {c for _, c in self.proj_set(r2, r1)}
        return img1 == set(r1.members) and img2 == set(r2.members)

    def convex_hull(self, a, b):
        """Smallest convex chamber pair containing {a, b}: fixpoint closure
        under panel projections.  Same-half inputs close within their half."""
        same_half = a[0] == b[0]
        members = {a, b}
        frontier = {a, b}
        while frontier:
            panels = set()
            for ch in members:
                for s in range(self.system.rank):
                    panels.add((ch[0], s, tuple(self.half(ch[0]).panel(ch[1], s))))
            new = set()
            for eps, s, mem in panels:
                res = TwinResidue(eps, (s,), mem)
                for ch in members:
                    if same_half and ch[0] != eps:
                        continue
                    p = self.proj(res, ch)
                    if p not in members:
                        new.add(p)
            members |= new
            frontier = new
        pos = sorted(c for e, c in members if e == POS)
        neg = sorted(c for e, c in members if e == NEG)
        return pos, neg

    def twin_apartment_from_opposites(self, a, b) -> "TwinApartment":
        """The unique twin apartment containing an opposite pair, computed as
        their convex hull and re-verified."""
        if a[0] == b[0]:
            raise NotOpposite("chambers lie in the same half")
        if not self.opposite(a, b):
            raise NotOpposite(f"codistance is {self.codistance(a, b)!r}, not 1")
        pos, neg = self.convex_hull(a, b)
        apt = TwinApartment.build(self, pos, neg)
        return apt


@dataclass(frozen=True)
class TwinResidue:
    eps: int
    typeset: tuple
    members: tuple

    def spherical(self):
        return True  # ambient W is finite, so every parabolic is

    def __len__(self):
        return len(self.members)


class TwinApartment:
    """A pair of apartments in which opposition is a perfect matching."""

    def __init__(self, tb, pos, neg, op):
        self.tb = tb
        self.pos = tuple(pos)
        self.neg = tuple(neg)
        self.op = op  # dict twin chamber -> twin chamber

    @classmethod
    def build(cls, tb: TwinBuilding, pos, neg) -> "TwinApartment":
        W = tb.system
        if len(pos) != W.order or len(neg) != W.order:
            raise TwinflipError(
                f"apartment halves must have |W| = {W.order} chambers, "
                f"got {len(pos)}/{len(neg)}")
        for half_eps, ids in ((POS, pos), (NEG, neg)):
            half = tb.half(half_eps)
            base = ids[0]
            image = {int(half.delta[base, x]) for x in ids}
            if len(image) != W.order:
                raise TwinflipError("apartment half is not isometric to (W, delta_S)")
            for x in ids:
                for y in ids:
                    lhs = W.mult_index(W.inv[int(half.delta[base, x])],
                                       int(half.delta[base, y]))
                    if lhs != int(half.delta[x, y]):
                        raise TwinflipError("apartment half fails the isometry check")
        op = {}
        for x in pos:
            mates = [y for y in neg if tb.costar_pm[x, y] == 0]
            if len(mates) != 1:
                raise TwinflipError("opposition is not a perfect matching")
            op[(POS, x)] = (NEG, mates[0])
        for y in neg:
            mates = [x for x in pos if tb.costar_pm[x, y] == 0]
            if len(mates) != 1:
                raise TwinflipError("opposition is not a perfect matching")
            op[(NEG, y)] = (POS, mates[0])
        for ch, mate in op.items():
            if op[mate] != ch:
                raise TwinflipError("opposition pairing is not an involution")
        return cls(tb, pos, neg, op)

    def chambers(self):
        return [(POS, c) for c in self.pos] + [(NEG, c) for c in self.neg]

    def key(self):
        return (self.pos, self.neg)

    def __eq__(self, other):
        return isinstance(other, TwinApartment) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


def spherical_to_twin(b: Building, verify=True) -> TwinBuilding:
    return TwinBuilding(b, verify=verify)


def check_twin_axioms(tb: TwinBuilding, max_witnesses=3):
    """Exhaustive Tw1-Tw3 verification over the (co)distance tables."""
    sys_ = tb.system
    N = tb.size
    lengths = tb.lengths
    violations = []

    def note(axiom, witness):
        if len(violations) < max_witnesses:
            violations.append({"axiom": axiom, "witness": witness})

    inv_map = _elem_map(sys_, lambda g: sys_.inv[g])
    tw1_ok = bool(np.array_equal(inv_map[tb.costar_pm], tb.costar_mp.T))
    if not tw1_ok:
        bad = np.argwhere(inv_map[tb.costar_pm] != tb.costar_mp.T)
        note("Tw1", {"pair": bad[0].tolist()})

    tw2_ok = True
    tw3_ok = True
    # eps = +: x positive, y,z negative; eps = -: x negative, y,z positive
    for eps, costar, other in ((POS, tb.costar_pm, tb.neg), (NEG, tb.costar_mp, tb.pos)):
        for s in range(sys_.rank):
            gid = other._gen_ids[s]
            rs = _rmul_array(sys_, s)
            shorter = lengths[rs] < lengths
            for y in range(N):
                zs = np.flatnonzero(other.delta[y] == gid)
                w_col = costar[:, y]
                ws_col = rs[w_col]
                must = shorter[w_col]
                for z in zs:
                    v_col = costar[:, z]
                    ok = np.where(must, v_col == ws_col, np.ones(N, dtype=bool))
                    if not ok.all():
                        tw2_ok = False
                        x = int(np.flatnonzero(~ok)[0])
                        note("Tw2", {"eps": eps, "x": x, "y": int(y), "z": int(z)})
                exists = np.zeros(N, dtype=bool)
                for z in zs:
                    exists |= costar[:, z] == ws_col
                if not exists.all():
                    tw3_ok = False
                    x = int(np.flatnonzero(~exists)[0])
                    note("Tw3", {"eps": eps, "x": x, "y": int(y), "s": s})
    return {"ok": tw1_ok and tw2_ok and tw3_ok,
            "Tw1": tw1_ok, "Tw2": tw2_ok, "Tw3": tw3_ok,
            "violations": violations}
