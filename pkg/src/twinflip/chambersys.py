"""Finite chamber systems over a type set.

Partitions are stored densely: one class-index array per type, so adjacency
tests are O(1).  Chambers are ids 0..N-1; callers keep their own side table
from ids to model objects (flags, Weyl elements, ...).
"""

from __future__ import annotations

import itertools

from .errors import BadChamber, BadType


class ChamberSystem:
    def __init__(self, types, class_maps):
        """types: ordered type labels; class_maps: per type, a list mapping
        chamber id -> equivalence class index."""
        self.types = tuple(types)
        if not class_maps or not class_maps[0]:
            raise BadChamber("a chamber system needs at least one chamber")
        self.size = len(class_maps[0])
        if len(class_maps) != len(self.types):
            raise BadType("one partition per type required")
        self.class_maps = [list(cm) for cm in class_maps]
        for cm in self.class_maps:
            if len(cm) != self.size:
                raise BadChamber("partition arrays must cover all chambers")
        # members per (type, class)
        self._members = []
        for cm in self.class_maps:
            byclass = {}
            for c, k in enumerate(cm):
                byclass.setdefault(k, []).append(c)
            self._members.append(byclass)

    @property
    def rank(self):
        return len(self.types)

    def adjacent(self, c, d, i):
        return self.class_maps[i][c] == self.class_maps[i][d]

    def panel(self, c, i):
        """Members of the i-panel of c (the ~i class)."""
        return self._members[i][self.class_maps[i][c]]

    def _check_chamber(self, c):
        if not 0 <= c < self.size:
            raise BadChamber(f"chamber {c} out of range")

    def _check_types(self, J):
        for j in J:
            if not 0 <= j < self.rank:
                raise BadType(f"type index {j} out of range")

    def residue_members(self, c, J):
        """The J-connectivity class of c, as a sorted list of chamber ids."""
        self._check_chamber(c)
        J = sorted(set(J))
        self._check_types(J)
        seen = {c}
        queue = [c]
        while queue:
            x = queue.pop()
            for j in J:
                for y in self.panel(x, j):
                    if y not in seen:
                        seen.add(y)
                        queue.append(y)
        return sorted(seen)

    def residue(self, c, J):
        return Residue(self, tuple(sorted(set(J))), tuple(self.residue_members(c, J)))

    def component_labels(self, J):
        """Label array of J-connectivity classes (labels are the least member)."""
        J = sorted(set(J))
        self._check_types(J)
        label = [-1] * self.size
        for c in range(self.size):
            if label[c] != -1:
                continue
            label[c] = c
            queue = [c]
            while queue:
                x = queue.pop()
                for j in J:
                    for y in self.panel(x, j):
                        if label[y] == -1:
                            label[y] = c
                            queue.append(y)
        return label

    def is_connected(self):
        return len(set(self.component_labels(range(self.rank)))) == 1

    def residue_chamber_system(self, K):
        """The K-residue chamber system over types I \\ K.

        Returns (system, residue_of_chamber) where residue_of_chamber maps an
        original chamber id to its new chamber id.
        """
        K = sorted(set(K))
        self._check_types(K)
        base = self.component_labels(K)
        reps = sorted(set(base))
        newid = {r: i for i, r in enumerate(reps)}
        memb = [newid[base[c]] for c in range(self.size)]
        rest = [i for i in range(self.rank) if i not in K]
        if not rest:
            return _rank0(len(reps)), memb
        class_maps = []
        for i in rest:
            coarse = self.component_labels(K + [i])
            cm = [None] * len(reps)
            for c in range(self.size):
                cm[memb[c]] = coarse[c]
            class_maps.append(cm)
        return ChamberSystem(tuple(self.types[i] for i in rest), class_maps), memb

    def induced(self, chambers):
        """Sub-chamber system on a chamber subset.

        Returns (system, old ids in new order)."""
        chambers = sorted(set(chambers))
        if not chambers:
            raise BadChamber("induced system needs at least one chamber")
        class_maps = []
        for i in range(self.rank):
            cm = [self.class_maps[i][c] for c in chambers]
            class_maps.append(cm)
        return ChamberSystem(self.types, class_maps), chambers

    # -- residual connectedness ------------------------------------------

    def _class_bitmasks(self, J):
        label = self.component_labels(J)
        masks = {}
        for c, lab in enumerate(label):
            masks[lab] = masks.get(lab, 0) | (1 << c)
        return label, masks

    def is_residually_connected(self):
        """Exhaustive check of the residual-connectedness property.

        For every J subseteq I and every family of corank-one residues
        (R_{I-{j}})_{j in J} with pairwise non-trivial intersections, the total
        intersection must be exactly one (I-J)-residue.  J = {} degenerates to
        connectivity.  Exponential in the rank; intended for rank <= 4.
        """
        return self.residual_connectedness_report()["ok"]

    def residual_connectedness_report(self):
        if not self.is_connected():
            return {"ok": False, "witness": "not connected (J = {} clause)"}
        corank = {}
        for j in range(self.rank):
            _, masks = self._class_bitmasks([t for t in range(self.rank) if t != j])
            corank[j] = sorted(masks.values())
        for r in range(1, self.rank + 1):
            for J in itertools.combinations(range(self.rank), r):
                _, fine_masks = self._class_bitmasks(
                    [t for t in range(self.rank) if t not in J])
                for family in self._families(corank, J):
                    total = family[0]
                    for m in family[1:]:
                        total &= m
                    if total == 0:
                        return {"ok": False,
                                "witness": f"empty intersection for J={J}"}
                    low = (total & -total).bit_length() - 1
                    # the (I-J)-residue of the lowest member
                    target = None
                    for m in fine_masks.values():
                        if m & (1 << low):
                            target = m
                            break
                    if total != target:
                        return {"ok": False,
                                "witness": f"intersection for J={J} is not a single residue"}
        return {"ok": True, "witness": None}

    def _families(self, corank, J):
        """Families of corank-1 residues indexed by J with pairwise non-trivial
        intersections, built incrementally."""
        def rec(k, chosen):
            if k == len(J):
                yield tuple(chosen)
                return
            for m in corank[J[k]]:
                if all(m & prev for prev in chosen):
                    chosen.append(m)
                    yield from rec(k + 1, chosen)
                    chosen.pop()
        yield from rec(0, [])

    # -- serialization ----------------------------------------------------

    def to_text(self):
        lines = [f"{self.size} " + " ".join(str(t) for t in self.types)]
        for cm in self.class_maps:
            lines.append(" ".join(str(k) for k in cm))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = lines[0].split()
        n = int(head[0])
        types = tuple(head[1:])
        class_maps = [[int(x) for x in ln.split()] for ln in lines[1:]]
        if len(class_maps) != len(types) or any(len(cm) != n for cm in class_maps):
            raise BadType("malformed chamber system text")
        return cls(types, class_maps)


class _rank0(ChamberSystem):
    """Rank-zero chamber system (no types, isolated chambers)."""

    def __init__(self, n):
        self.types = ()
        self.size = n
        self.class_maps = []
        self._members = []


class Residue:
    """A J-residue: the J-connectivity class of a chamber."""

    def __init__(self, owner, typeset, members):
        self.owner = owner
        self.typeset = tuple(typeset)
        self.members = tuple(members)

    def __contains__(self, c):
        return c in set(self.members)

    def __len__(self):
        return len(self.members)

    def __eq__(self, other):
        return (isinstance(other, Residue) and self.owner is other.owner
                and self.typeset == other.typeset and self.members == other.members)

    def __hash__(self):
        return hash((id(self.owner), self.typeset, self.members))

    def __repr__(self):
        return f"Residue(J={self.typeset}, size={len(self.members)})"


def all_residues(system, J):
    """All J-residues of a chamber system, lowest representative first."""
    label = system.component_labels(sorted(set(J)))
    byrep = {}
    for c, lab in enumerate(label):
        byrep.setdefault(lab, []).append(c)
    return [Residue(system, tuple(sorted(set(J))), tuple(sorted(members)))
            for _, members in sorted(byrep.items())]


def inherits_connectedness(sub_chambers, system, X=None):
    """True iff the induced system on sub_chambers inherits connectedness from
    `system` within X: chambers of X joined by a J-gallery in the sub-system
    exactly when joined by one in `system`, for every J."""
    sub_chambers = sorted(set(sub_chambers))
    if X is None:
        X = sub_chambers
    X = sorted(set(X))
    if not set(X) <= set(sub_chambers):
        raise BadChamber("X must be a subset of the sub-system's chambers")
    sub, order = system.induced(sub_chambers)
    pos = {c: i for i, c in enumerate(order)}
    for r in range(system.rank + 1):
        for J in itertools.combinations(range(system.rank), r):
            big = system.component_labels(J)
            small = sub.component_labels(J)
            groups = {}
            for c in X:
                groups.setdefault(big[c], set()).add(small[pos[c]])
            if any(len(g) > 1 for g in groups.values()):
                return False
    return True
