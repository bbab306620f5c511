"""Quasi-flips of finite twin buildings and their analysis.

A quasi-flip is stored as the involution tau on model chamber ids:
theta((eps, c)) = (-eps, tau[c]).  The induced Weyl automorphism is inferred
from the distance transport and validated; nothing about it is taken on
trust from the caller.
"""

from __future__ import annotations

import logging

import numpy as np

from . import coxeter, flagmodel
from .chambersys import inherits_connectedness
from .errors import (HypothesisNotMet, NoBypass, NotDivisible, TwinflipError,
                     ValidationFailed)
from .twinbuild import NEG, POS, FlagBuilding, TwinBuilding, TwinResidue

log = logging.getLogger(__name__)


class QuasiFlip:
    """An involutive, adjacency- and opposition-preserving swap of the two
    halves of a twin building, with its theta-codistance table."""

    def __init__(self, tb: TwinBuilding, tau, name="flip", model=None, form=None):
        self.tb = tb
        self.name = name
        self.model = model  # FlagBuilding when built from a form
        self.form = form
        self.tau = np.asarray(tau, dtype=np.int64)
        self.system = tb.system
        self._validate()
        n = tb.size
        self.dtheta = tb.costar_pm[np.arange(n), self.tau]
        self.ltheta = tb.lengths[self.dtheta].astype(np.int64)
        bad = np.flatnonzero(
            self._theta_w_map[self.dtheta]
            != np.array(self.system.inv, dtype=np.uint16)[self.dtheta])
        if bad.size:
            raise ValidationFailed(
                f"theta-codistance at chamber {bad[0]} is not a twisted involution")

    # -- structure ---------------------------------------------------------

    def apply(self, ch):
        eps, c = ch
        return (-eps, int(self.tau[c]))

    @property
    def theta_w(self) -> coxeter.DiagramInvolution:
        return self._theta_w

    def theta_w_index(self, g: int) -> int:
        return int(self._theta_w_map[g])

    def _validate(self):
        tb, tau = self.tb, self.tau
        n = tb.size
        if sorted(tau.tolist()) != list(range(n)):
            raise ValidationFailed("tau is not a permutation of the chambers")
        if not np.array_equal(tau[tau], np.arange(n)):
            raise ValidationFailed("the flip is not an involution")
        D = tb.pos.delta
        Dn = tb.neg.delta
        transported = Dn[np.ix_(tau, tau)]
        # infer the induced generator permutation from distance transport
        perm = [None] * self.system.rank
        gen_ids = tb.pos._gen_ids
        for s in range(self.system.rank):
            vals = np.unique(transported[D == gen_ids[s]])
            if vals.size != 1 or int(vals[0]) not in gen_ids:
                raise ValidationFailed(
                    f"images of {self.system.labels[s]}-adjacent pairs are not "
                    f"adjacent of a single type")
            perm[s] = gen_ids.index(int(vals[0]))
        try:
            self._theta_w = coxeter.DiagramInvolution(self.system, perm)
        except Exception as exc:
            raise ValidationFailed(f"induced generator map is not a diagram "
                                   f"involution: {exc}") from exc
        self._theta_w_map = np.array(self._theta_w._table, dtype=np.uint16)
        # full distance transport
        if not np.array_equal(transported, self._theta_w_map[D]):
            bad = np.argwhere(transported != self._theta_w_map[D])[0]
            raise ValidationFailed(f"distance transport fails at pair {bad.tolist()}")
        # full codistance transport (covers opposition preservation)
        lhs = tb.costar_mp[np.ix_(tau, tau)]
        if not np.array_equal(lhs, self._theta_w_map[tb.costar_pm]):
            bad = np.argwhere(lhs != self._theta_w_map[tb.costar_pm])[0]
            raise ValidationFailed(f"codistance transport fails at pair {bad.tolist()}")

    # -- theta-codistance --------------------------------------------------

    def codistance_table(self):
        """delta^theta and its lengths over the positive half."""
        return self.dtheta.copy(), self.ltheta.copy()

    def codistance_element(self, c) -> coxeter.CoxeterElement:
        return coxeter.CoxeterElement(self.system, int(self.dtheta[c]))

    def realized_codistances(self):
        return sorted(set(int(v) for v in np.unique(self.dtheta)))

    # -- panels and projections ---------------------------------------------

    def panel_members(self, c, s):
        return self.tb.pos.panel(c, s)

    def proj_onto_panel_of_image(self, members, c):
        """proj_{P}(theta(c)) for a positive panel P: the member maximizing
        the codistance length to theta(c)."""
        return self._argmax_unique(
            members, lambda m: int(self.tb.lengths[self.tb.costar_pm[m, self.tau[c]]]))

    def proj_theta_fixed_set(self, members):
        """proj_P(theta) = {c in P : proj_P(theta(c)) = c}."""
        return [c for c in members if self.proj_onto_panel_of_image(members, c) == c]

    @staticmethod
    def _argmax_unique(members, score):
        best, bestv, tie = None, None, False
        for m in members:
            v = score(m)
            if bestv is None or v > bestv:
                best, bestv, tie = m, v, False
            elif v == bestv:
                tie = True
        if tie:
            raise TwinflipError("projection is not unique")
        return best


def build_flip_from_form(fb: FlagBuilding, tb: TwinBuilding, form) -> QuasiFlip:
    """theta(c) = (orthogonal flag of c)_- for a non-degenerate form."""
    tau = np.array([fb.chamber_of(flagmodel.orthogonal_flag(f, form)) for f in fb.flags])
    name = f"{form.kind}-n{fb.n}-q{fb.field.q}"
    return QuasiFlip(tb, tau, name=name, model=fb, form=form)


# -- classification ----------------------------------------------------------

def classify(flip: QuasiFlip):
    """proper (some Phan chamber), strong (no co-projected panel), flip
    (trivial induced Weyl automorphism)."""
    proper = bool((flip.dtheta == 0).any())
    strong = True
    witness = None
    tb = flip.tb
    for s in range(flip.system.rank):
        seen = set()
        for c in range(tb.size):
            members = tuple(flip.panel_members(c, s))
            if members in seen:
                continue
            seen.add(members)
            if all(flip.proj_onto_panel_of_image(members, m) == m for m in members):
                strong = False
                witness = {"type": s, "panel": list(members)}
                break
        if not strong:
            break
    return {"proper": proper, "strong": strong, "flip": flip.theta_w.is_identity(),
            "theta_w": repr(flip.theta_w), "strong_witness": witness}


def verify_panel_trichotomy(flip: QuasiFlip, max_witnesses=3):
    """For every chamber c and type s, with w = delta^theta(c), check the
    three cases of the descent trichotomy (drop by two / parallel / rise by
    two) including the projection claims, plus the corollary that adjacent
    chambers with equal numerical codistance share the codistance."""
    sys_ = flip.system
    tb = flip.tb
    tau = flip.tau
    violations = []

    def note(case, c, s, extra=""):
        if len(violations) < max_witnesses:
            violations.append({"case": case, "chamber": int(c), "type": s, "info": extra})

    for s in range(sys_.rank):
        ts = flip.theta_w.perm[s]
        for c in range(tb.size):
            members = flip.panel_members(c, s)
            w = int(flip.dtheta[c])
            swts = sys_.rmul[sys_.left(s, w)][ts]
            lw, lsw = sys_.lengths[w], sys_.lengths[swts]
            theta_members = [int(tau[m]) for m in members]
            if lsw == lw - 2:
                for d in members:
                    if d != c and int(flip.dtheta[d]) != swts:
                        note("drop", c, s, f"neighbor {d} has wrong codistance")
                pp = {flip.proj_onto_panel_of_image(members, m) for m in members}
                if pp != {c}:
                    note("drop", c, s, "proj_P(theta(P)) != {c}")
                qq = {flip._argmax_unique(
                    theta_members, lambda z: int(tb.lengths[tb.costar_mp[z, m]]))
                    for m in members}
                if qq != {int(tau[c])}:
                    note("drop", c, s, "proj_theta(P)(P) != {theta(c)}")
            elif lsw == lw:
                if swts != w:
                    note("parallel", c, s, "l(s w theta(s)) = l(w) but s w theta(s) != w")
                res = TwinResidue(POS, (s,), tuple(members))
                ires = TwinResidue(NEG, (s,), tuple(theta_members))
                if not tb.parallel(res, ires):
                    note("parallel", c, s, "panel not parallel to its image")
                fixed = flip.proj_onto_panel_of_image(members, c) == c
                if fixed != (sys_.lengths[sys_.left(s, w)] < lw):
                    note("parallel", c, s, "projection fixedness mismatch")
            else:
                risers = [d for d in members if int(flip.dtheta[d]) == swts]
                if len(risers) != 1:
                    note("rise", c, s, f"{len(risers)} chambers at the raised codistance")
                else:
                    d = risers[0]
                    pp = {flip.proj_onto_panel_of_image(members, m) for m in members}
                    if pp != {d}:
                        note("rise", c, s, "proj_P(theta(P)) != {d}")
    # adjacent equal numerical codistance => equal codistance
    for s in range(sys_.rank):
        seen = set()
        for c in range(tb.size):
            members = tuple(flip.panel_members(c, s))
            if members in seen:
                continue
            seen.add(members)
            for a in members:
                for b in members:
                    if a < b and flip.ltheta[a] == flip.ltheta[b] and \
                            flip.dtheta[a] != flip.dtheta[b]:
                        note("equal-codistance", a, s, f"pair ({a},{b})")
    return {"ok": not violations, "violations": violations}


# -- Phan residues ------------------------------------------------------------

def _phan_data(flip: QuasiFlip):
    """For each J subseteq S: residue labels and per-residue Phan flags."""
    tb = flip.tb
    sys_ = flip.system
    cs = tb.pos.chamber_system()
    tau = flip.tau
    data = {}
    import itertools as it
    for r in range(sys_.rank + 1):
        for J in it.combinations(range(sys_.rank), r):
            label = cs.component_labels(list(J))
            members = {}
            for c, lab in enumerate(label):
                members.setdefault(lab, []).append(c)
            phan = {}
            for lab, mem in members.items():
                sub = flip.tb.costar_pm[np.ix_(mem, tau[mem])] == 0
                phan[lab] = bool(sub.any(axis=1).all() and sub.any(axis=0).all())
            data[J] = (label, members, phan)
    return data, cs


def phan_residues(flip: QuasiFlip, J):
    """All J-residues of the positive half opposite their theta-image."""
    data, _ = _phan_data_cached(flip)
    J = tuple(sorted(set(J)))
    label, members, phan = data[J]
    return [sorted(members[lab]) for lab in sorted(members) if phan[lab]]


def _phan_data_cached(flip):
    if not hasattr(flip, "_phan_cache"):
        flip._phan_cache = _phan_data(flip)
    return flip._phan_cache


def minimal_phan_residues(flip: QuasiFlip):
    """Inclusion-minimal Phan residues, as (typeset, member list) pairs."""
    data, _ = _phan_data_cached(flip)
    import itertools as it
    out = []
    for J, (label, members, phan) in sorted(data.items(), key=lambda kv: len(kv[0])):
        for lab in sorted(members):
            if not phan[lab]:
                continue
            mem = members[lab]
            minimal = True
            for r in range(len(J)):
                for Jp in it.combinations(J, r):
                    sublabel, _, subphan = data[Jp]
                    if any(subphan[sublabel[c]] for c in mem):
                        minimal = False
                        break
                if not minimal:
                    break
            if minimal:
                out.append((J, sorted(mem)))
    return out


def homogeneity_type(flip: QuasiFlip):
    """The common type K of all minimal Phan residues, or a NotHomogeneous
    record with two witnesses."""
    mins = minimal_phan_residues(flip)
    types = sorted({J for J, _ in mins})
    if len(types) == 1:
        return {"homogeneous": True, "K": types[0]}
    w1 = next((J, mem) for J, mem in mins if J == types[0])
    w2 = next((J, mem) for J, mem in mins if J == types[1])
    return {"homogeneous": False, "K": None,
            "witnesses": [{"type": w1[0], "chamber": w1[1][0]},
                          {"type": w2[0], "chamber": w2[1][0]}]}


# -- flip-flop systems ---------------------------------------------------------

def flip_flop_system(flip: QuasiFlip, members=None):
    """Chambers of minimal numerical theta-codistance within the residue
    (default: the whole positive half), with the induced chamber system."""
    if members is None:
        members = range(flip.tb.size)
    members = sorted(members)
    lt = flip.ltheta
    m = min(int(lt[c]) for c in members)
    chosen = [c for c in members if lt[c] == m]
    cs = flip.tb.pos.chamber_system()
    sub, order = cs.induced(chosen)
    return {"members": chosen, "min_ltheta": m, "system": sub, "order": order}


def _descent_reachability(flip, members):
    """reachable[c]: c can reach the minimum l-theta level of the member set
    by a strictly decreasing gallery inside it.  Exact, decided bottom-up."""
    memset = set(members)
    lt = flip.ltheta
    m = min(int(lt[c]) for c in members)
    reachable = {}
    for c in sorted(members, key=lambda c: int(lt[c])):
        if lt[c] == m:
            reachable[c] = True
            continue
        ok = False
        for s in range(flip.system.rank):
            for d in flip.panel_members(c, s):
                if d in memset and lt[d] < lt[c] and reachable.get(d):
                    ok = True
                    break
            if ok:
                break
        reachable[c] = ok
    return reachable, m


def admits_direct_descent(flip: QuasiFlip, members=None):
    if members is None:
        members = range(flip.tb.size)
    members = sorted(members)
    reachable, _ = _descent_reachability(flip, members)
    return all(reachable.values())


def _descent_path(flip, memset, c, lt, m, reachable):
    """A strictly decreasing gallery from c into the minimum level, lowest
    chamber id among valid next steps."""
    path = [c]
    while lt[path[-1]] != m:
        cur = path[-1]
        nxt = None
        for s in range(flip.system.rank):
            for d in flip.panel_members(cur, s):
                if d in memset and lt[d] < lt[cur] and reachable.get(d):
                    if nxt is None or d < nxt:
                        nxt = d
        if nxt is None:
            raise NoBypass(f"no strictly decreasing continuation from {cur}")
        path.append(nxt)
    return path


def bypass_gallery(flip: QuasiFlip, members, gallery):
    """Replace a peak (c0, c1, c2) inside a rank-two residue by a gallery
    from c0 to c2 staying strictly below l-theta(c1) except possibly at c2.

    Built as descent(c0) + path inside the flip-flop level + reversed
    descent(c2), mirroring the bypass construction.
    """
    c0, c1, c2 = gallery
    members = sorted(members)
    memset = set(members)
    lt = flip.ltheta
    if not (lt[c0] < lt[c1] and lt[c1] >= lt[c2]):
        raise NoBypass("gallery is not a peak/plateau configuration")
    reachable, m = _descent_reachability(flip, members)
    if not all(reachable.values()):
        raise NoBypass("residue does not admit direct descent")
    ff = flip_flop_system(flip, members)
    if not ff["system"].is_connected():
        raise NoBypass("flip-flop level of the residue is not connected")
    g0 = _descent_path(flip, memset, c0, lt, m, reachable)
    g2 = _descent_path(flip, memset, c2, lt, m, reachable)
    # BFS inside the flip-flop level, lowest id tie break
    level = set(ff["members"])
    start, goal = g0[-1], g2[-1]
    prev = {start: None}
    frontier = [start]
    while frontier and goal not in prev:
        nxt = []
        for x in sorted(frontier):
            for s in range(flip.system.rank):
                for d in sorted(flip.panel_members(x, s)):
                    if d in level and d not in prev:
                        prev[d] = x
                        nxt.append(d)
        frontier = nxt
    if goal not in prev:
        raise NoBypass("flip-flop level is not connected between feet")
    mid = []
    x = goal
    while x is not None:
        mid.append(x)
        x = prev[x]
    mid.reverse()
    out = g0[:-1] + mid + list(reversed(g2[:-1]))
    if not out:
        out = [c0]
    for d in out[:-1] if out[-1] == c2 else out:
        if lt[d] >= lt[c1]:
            raise NoBypass(f"constructed gallery violates the bound at {d}")
    return out


# -- geometricity ---------------------------------------------------------------

def geometricity_report(flip: QuasiFlip, override=False):
    """Connectivity, homogeneity and residual connectedness of the flip-flop
    system, under the odd-order root-group hypothesis (override allowed)."""
    q = flip.model.field.q if flip.model is not None else None
    hyp_ok = q is not None and q % 2 == 1 and q >= 5
    if not hyp_ok and not override:
        raise HypothesisNotMet(
            f"root group order {q} is not odd and >= 5; pass override to run anyway")
    if not hyp_ok:
        log.warning("geometricity hypotheses not met (root group order %s); "
                    "running with override", q)
    ff = flip_flop_system(flip)
    connected = ff["system"].is_connected()
    mins = minimal_phan_residues(flip)
    union = sorted({c for _, mem in mins for c in mem})
    equals_union = union == ff["members"]
    hom = homogeneity_type(flip)
    cs = flip.tb.pos.chamber_system()
    inherits = inherits_connectedness(ff["members"], cs)
    if hom["homogeneous"]:
        K = hom["K"]
        sub, _ = cs.induced(ff["members"])
        ksys, _ = sub.residue_chamber_system(list(K))
        resconn = ksys.is_residually_connected() if ksys.rank else ksys.size >= 1
    else:
        resconn = False
    ok = connected and equals_union and hom["homogeneous"] and inherits and resconn
    return {"ok": ok, "hypothesis_ok": hyp_ok, "overridden": not hyp_ok,
            "root_group_order": q,
            "connected": connected, "equals_union_of_minimal_phan": equals_union,
            "homogeneous": hom["homogeneous"],
            "K": list(hom["K"]) if hom["homogeneous"] else None,
            "inherits_connectedness": inherits,
            "residue_system_residually_connected": resconn,
            "flip_flop_size": len(ff["members"]), "min_ltheta": ff["min_ltheta"]}


def verify_descent_uniqueness(flip: QuasiFlip):
    """Exhaustive check of the descent-existence lemma: whenever
    l(w^-1 r theta(w)) = l(r) - 2 l(w) and delta^theta(d) = w^-1 r theta(w),
    there is a unique c at distance w from d with delta^theta(c) = r, and the
    convex hull of d and theta(d) contains c and theta(c)."""
    sys_ = flip.system
    tb = flip.tb
    twisted = [t.element.index for t in sys_.twisted_involutions(flip.theta_w)]
    twmap = flip._theta_w_map
    inv = sys_.inv
    pairs = []
    for r in twisted:
        for w in range(1, sys_.order):
            conj = sys_.mult_index(sys_.mult_index(inv[w], r), int(twmap[w]))
            if sys_.lengths[conj] == sys_.lengths[r] - 2 * sys_.lengths[w]:
                pairs.append((r, w, conj))
    failures = []
    for d in range(tb.size):
        hull = None
        for r, w, conj in pairs:
            if int(flip.dtheta[d]) != conj:
                continue
            cands = np.flatnonzero(
                (tb.pos.delta[:, d] == w) & (flip.dtheta == r))
            if cands.size != 1:
                failures.append({"d": d, "r": r, "w": w, "count": int(cands.size)})
                continue
            c = int(cands[0])
            if hull is None:
                pos, neg = tb.convex_hull((POS, d), (NEG, int(flip.tau[d])))
                hull = (set(pos), set(neg))
            if c not in hull[0] or int(flip.tau[c]) not in hull[1]:
                failures.append({"d": d, "r": r, "w": w, "hull_miss": c})
    return {"ok": not failures, "failures": failures[:3], "pairs_checked": len(pairs)}


# -- Moufang sets ---------------------------------------------------------------

class MoufangSetData:
    """A Moufang set: points with root groups as permutation lists."""

    def __init__(self, points, root_groups):
        self.points = list(points)
        self.root_groups = root_groups  # list of perm tuples per point index
        self._validate()

    def _validate(self):
        n = len(self.points)
        family = {tuple(sorted(map(tuple, g))) for g in
                  (self.root_groups[i] for i in range(n))}
        for x in range(n):
            U = self.root_groups[x]
            others = [y for y in range(n) if y != x]
            seen = set()
            for u in U:
                if u[x] != x:
                    raise ValidationFailed(f"root group at {x} moves its point")
                seen.add(tuple(u))
            if len(seen) != len(U):
                raise ValidationFailed("duplicate root group elements")
            # sharp transitivity on the rest
            for y in others:
                if sorted(u[y] for u in U) != others:
                    raise ValidationFailed(f"root group at {x} is not sharply "
                                           f"transitive from {y}")
            # conjugation permutes the family
            for u in U:
                uinv = _perm_inverse(u)
                for y in others:
                    conj = tuple(sorted(_perm_conj(g, u, uinv) for g in self.root_groups[y]))
                    if conj not in family:
                        raise ValidationFailed("conjugation does not permute root groups")

    def size(self):
        return len(self.points)


def _perm_inverse(p):
    out = [0] * len(p)
    for i, v in enumerate(p):
        out[v] = i
    return tuple(out)


def _perm_conj(g, u, uinv):
    # u g u^-1
    return tuple(u[g[uinv[i]]] for i in range(len(g)))


def _perm_compose(a, b):
    return tuple(a[b[i]] for i in range(len(a)))


def projective_line_moufang_set(field) -> MoufangSetData:
    """The projective line over the field with its unipotent root groups."""
    lines = flagmodel.enumerate_lines(field, 2)
    index = {L.basis: i for i, L in enumerate(lines)}
    F = field

    def act_perm(g):
        out = []
        for L in lines:
            v = L.basis[0]
            img = (flagmodel.dot(F, g[0], v), flagmodel.dot(F, g[1], v))
            out.append(index[flagmodel.rref(F, [img])])
        return tuple(out)

    inf = index[((1, 0),)]
    u_inf = [act_perm(((1, lam), (0, 1))) for lam in range(F.q)]
    groups = [None] * len(lines)
    groups[inf] = u_inf
    for i, L in enumerate(lines):
        if i == inf:
            continue
        a, b = L.basis[0]
        # g maps [1:0] to [a:b], invertible
        if b == 0:
            g = ((a, 0), (0, 1))
        else:
            g = ((a, 1 if a == 0 else 0), (b, 0 if a == 0 else 1))
        gp = act_perm(g)
        if gp[inf] != i:
            raise TwinflipError("base change matrix does not move infinity correctly")
        gpi = _perm_inverse(gp)
        groups[i] = [_perm_conj(u, gp, gpi) for u in u_inf]
    return MoufangSetData(lines, groups)


def moufang_second_fixed_point(mouf: MoufangSetData, phi, x_inf, candidate):
    """Given an involutive automorphism phi fixing x_inf and a candidate
    point a != x_inf, return the phi-fixed point h.a where h is the unique
    square root of the root group element carrying a to phi(a)."""
    U = mouf.root_groups[x_inf]
    if len(U) % 2 == 0:
        raise NotDivisible(f"root group order {len(U)} is even")
    if phi[x_inf] != x_inf:
        raise ValidationFailed("phi does not fix the base point")
    if _perm_compose(phi, phi) != tuple(range(len(phi))):
        raise ValidationFailed("phi is not an involution")
    phi_inv = _perm_inverse(phi)
    family = {tuple(sorted(map(tuple, g))) for g in mouf.root_groups}
    for x in range(mouf.size()):
        conj = tuple(sorted(_perm_conj(g, phi, phi_inv) for g in mouf.root_groups[x]))
        if conj not in family:
            raise ValidationFailed("phi is not a Moufang set automorphism")
    a = candidate
    target = phi[a]
    g = next(u for u in U if u[a] == target)
    h = tuple(range(len(phi)))
    half = (len(U) + 1) // 2
    for _ in range(half):
        h = _perm_compose(h, g)
    if _perm_compose(h, h) != g:
        raise NotDivisible("square root inconsistency; group not uniquely 2-divisible")
    out = h[a]
    if phi[out] != out:
        raise TwinflipError("doubled point is not fixed")
    return out
