"""Bridges between the two atom languages, plus congruence algebra.

The anchored relations (lhs <>_a rhs + k) can be re-expressed through the
canonical maps and the dotted predicates, and back.  Together with the
gcd / scaling / Chinese-remainder rewrites for congruences and the
dimension-chain formulas, these are the rewriting tools the eliminator is
built from.  Every rewrite here is a pointwise equivalence, checked by
sampling in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

from .normal import (
    FamilyUnionForm, FUClause, ResourceLimit, all_names, boolean_units,
    dnf_disjoint_tree, dnf_pairwise_disjoint, extract_can_terms,
    hoist_main_units, unit_involves_main,
)
from .syntax import (
    AC, AEP, FALSE, TRUE, Atom, AuxAsymp, AuxLe, AuxTerm, AuxVar, CongDot,
    DimFloor, DimSucc, Discr, DPred, EqDot, Exists, Forall, Formula, Fresh,
    LinTerm, MainRel, Not, PlainRel, Sc, Se, Sort, SortMin, SuccPlus,
    aux_term_sort, conj, disj, implies, neg, sort_ac, sort_ae,
)

TOPG = "TopG"

DIM_ELL_CAP = 8


# ---------------------------------------------------------------------------
# Rewrite tracing

@dataclass
class RewriteStep:
    rule: str
    before: object
    after: object


@dataclass
class RewriteTrace:
    steps: list = field(default_factory=list)

    def add(self, rule: str, before, after):
        self.steps.append(RewriteStep(rule, before, after))

    def dump(self) -> str:
        return "\n".join("RULE %s" % s.rule for s in self.steps)


def _note(trace, rule, before, after):
    if trace is not None:
        trace.add(rule, before, after)
    return after


# ---------------------------------------------------------------------------
# Small builders

def aux_lt(a: AuxTerm, b: AuxTerm) -> Formula:
    return Not(AuxLe(b, a))


def aux_eq(a: AuxTerm, b: AuxTerm) -> Formula:
    return conj([AuxLe(a, b), AuxLe(b, a)])


def canc_term(m: int, t: LinTerm) -> Sc:
    """The canonical map of exponent m, as a prime power when possible."""

    for p in range(2, m):
        if p * p > m:
            break
        if m % p == 0:
            r = 0
            mm = m
            while mm % p == 0:
                mm //= p
                r += 1
            if mm == 1:
                return Sc(p, r, t)
            return Sc(m, 1, t)
    return Sc(m, 1, t)


def plain_eq0(t: LinTerm) -> Formula:
    z = LinTerm.zero()
    return conj([neg(PlainRel("lt", t, z)), neg(PlainRel("lt", z, t))])


def _prime_power_parts(m: int):
    """[(p, r)] with m the product of the p**r."""

    out = []
    p = 2
    while p * p <= m:
        if m % p == 0:
            r = 0
            while m % p == 0:
                m //= p
                r += 1
            out.append((p, r))
        p += 1
    if m > 1:
        out.append((m, 1))
    return out


# ---------------------------------------------------------------------------
# Discreteness on arbitrary sorts

def discr_lift(term: AuxTerm, fresh: Fresh = None) -> Formula:
    """Discreteness of the quotient at any auxiliary point, phrased through
    the coordinate sorts when the point lives elsewhere."""

    sort = aux_term_sort(term)
    if sort is not None and sort.kind == AC:
        return Discr(term)
    if fresh is None:
        fresh = Fresh("d")
    name = fresh("d")
    v = AuxVar(name, sort_ac(2))
    return Exists(name, sort_ac(2), conj([AuxAsymp(v, term), Discr(v)]))


# ---------------------------------------------------------------------------
# Congruence algebra

def cong_gcd_reduce(a: MainRel, trace: RewriteTrace = None) -> MainRel:
    """Bracket congruences only need moduli dividing the bracket exponent."""

    if not (isinstance(a, MainRel) and a.op == "congb"):
        raise ValueError("expected a bracket congruence")
    g = math.gcd(a.m, a.mp)
    if g == a.m:
        return a
    out = MainRel("congb", a.lhs, a.rhs, 0, a.aux, m=g, mp=a.mp)
    return _note(trace, "congb-gcd", a, out)


def cong_scale(k: int, a: MainRel, trace: RewriteTrace = None) -> Formula:
    """The literal with both sides multiplied by k; congruences pick up the
    restriction to kG, inequalities flip for negative k."""

    if k == 0:
        raise ValueError("scale factor must be nonzero")
    if not isinstance(a, MainRel):
        raise ValueError("expected an anchored relation")
    lhs, rhs = a.lhs.scale(k), a.rhs.scale(k)
    if a.op == "eq":
        out = MainRel("eq", lhs, rhs, k * a.k, a.aux)
    elif a.op == "lt":
        if k > 0:
            out = MainRel("lt", lhs, rhs, k * a.k, a.aux)
        else:
            out = MainRel("lt", rhs, lhs, -k * a.k, a.aux)
    elif a.op == "cong":
        scaled = MainRel("cong", lhs, rhs, k * a.k, a.aux, m=abs(k) * a.m)
        out = conj([scaled, PlainRel("cong", lhs, rhs, m=abs(k))])
    else:
        scaled = MainRel("congb", lhs, rhs, 0, a.aux, m=abs(k) * a.m,
                         mp=abs(k) * a.mp)
        out = conj([scaled, PlainRel("cong", lhs, rhs, m=abs(k))])
    return _note(trace, "scale", a, out)


def cong_crt_split(a: MainRel, trace: RewriteTrace = None) -> Formula:
    """Chinese-remainder split of a congruence into prime-power pieces."""

    if not isinstance(a, MainRel):
        raise ValueError("expected an anchored relation")
    if a.op == "cong":
        parts = [
            MainRel("cong", a.lhs, a.rhs, a.k, a.aux, m=p ** r)
            for p, r in _prime_power_parts(a.m)
        ]
        out = conj(parts)
    elif a.op == "congb":
        if a.mp % a.m != 0:
            raise ValueError("bracket split needs the modulus to divide the "
                             "bracket exponent; reduce by gcd first")
        parts = []
        for p, s in _prime_power_parts(a.mp):
            r = 0
            m = a.m
            while m % p == 0:
                m //= p
                r += 1
            if r == 0:
                continue  # modulus 1 piece is vacuous
            parts.append(MainRel("congb", a.lhs, a.rhs, 0, a.aux,
                                 m=p ** r, mp=p ** s))
        out = conj(parts)
    else:
        raise ValueError("expected a congruence")
    return _note(trace, "crt-split", a, out)


# ---------------------------------------------------------------------------
# Anchored atoms through the canonical maps

def qe_atom_to_syn(a: Atom, fresh: Fresh = None,
                   trace: RewriteTrace = None) -> Formula:
    """An anchored relation re-expressed without anchored relations: only
    plain relations, dotted predicates, and comparisons of canonical-map
    images.  Atoms of other kinds pass through unchanged."""

    if not isinstance(a, MainRel):
        return a
    if fresh is None:
        fresh = Fresh("q", {v for lt in (a.lhs, a.rhs) for v in lt.vars()})
    t = a.lhs - a.rhs
    eta = a.aux
    if a.op == "eq":
        out = _eq_translate(eta, t, a.k, fresh)
    elif a.op == "lt":
        out = _lt_translate(eta, a.lhs, a.rhs, a.k, fresh)
    elif a.op == "cong":
        out = _cong_translate(eta, t, a.k, a.m, fresh)
    else:
        out = _congb_translate(eta, t, a.m, a.mp, fresh)
    return _note(trace, "anchor-out", a, out)


def _anchor_sort(eta: AuxTerm) -> Sort:
    sort = aux_term_sort(eta)
    if sort is None:
        raise ValueError("anchor sort unknown; declare the variable")
    return sort


def _eq_zero(eta: AuxTerm, t: LinTerm, fresh: Fresh) -> Formula:
    sort = _anchor_sort(eta)
    if sort.kind == AEP:
        n = sort.n
        name = fresh("q")
        v = AuxVar(name, sort_ac(n))
        below = Forall(name, sort_ac(n),
                       implies(AuxLe(eta, v), aux_lt(Se(n, t), v)))
        return disj([plain_eq0(t), below])
    return disj([aux_lt(Se(sort.n, t), eta), plain_eq0(t)])


def _eq_translate(eta, t, k, fresh) -> Formula:
    if k == 0:
        return _eq_zero(eta, t, fresh)
    dense = conj([neg(discr_lift(eta, fresh)), _eq_zero(eta, t, fresh)])
    disc = conj([discr_lift(eta, fresh), AuxAsymp(eta, Se(2, t)),
                 EqDot(k, t)])
    return disj([dense, disc])


def _cong_zero(eta: AuxTerm, t: LinTerm, m: int) -> Formula:
    if m == 1:
        return TRUE
    below = conj([aux_lt(Sc(p, r, t), eta) for p, r in _prime_power_parts(m)])
    return disj([below, PlainRel("cong", t, LinTerm.zero(), m=m)])


def _cong_translate(eta, t, k, m, fresh) -> Formula:
    if m == 1:
        return TRUE
    k = k % m
    if k == 0:
        return _cong_zero(eta, t, m)
    dense = conj([neg(discr_lift(eta, fresh)), _cong_zero(eta, t, m)])
    disc = conj([discr_lift(eta, fresh), AuxAsymp(eta, canc_term(m, t)),
                 CongDot(m, k, t)])
    return disj([dense, disc])


def _congb_translate(eta, t, m, mp, fresh) -> Formula:
    m = math.gcd(m, mp)
    parts = []
    for p, s in _prime_power_parts(mp):
        r = 0
        mm = m
        while mm % p == 0:
            mm //= p
            r += 1
        if r == 0:
            continue
        piece = disj([
            _cong_zero(eta, t, p ** r),
            conj([AuxAsymp(eta, Sc(p, r, t)), DPred(p, r, s, t)]),
        ])
        parts.append(piece)
    return conj(parts)


def _lt_translate(eta, lhs, rhs, k, fresh) -> Formula:
    t = lhs - rhs
    base = conj([PlainRel("lt", lhs, rhs), neg(_eq_zero(eta, t, fresh))])
    if k == 0:
        return base

    def eq_offset(i: int) -> Formula:
        if i == 0:
            return _eq_zero(eta, t, fresh)
        return conj([AuxAsymp(eta, Se(2, t)), EqDot(i, t)])

    if k > 0:
        recipe = disj([base] + [eq_offset(i) for i in range(k)])
    else:
        recipe = conj([base] + [neg(eq_offset(i)) for i in range(k, 0)])
    return disj([
        conj([neg(discr_lift(eta, fresh)), base]),
        conj([discr_lift(eta, fresh), recipe]),
    ])


# ---------------------------------------------------------------------------
# The reverse direction: plain and dotted atoms into anchored family form

def _syn_atom_rewrite(a: Atom) -> Formula:
    z = LinTerm.zero()
    if isinstance(a, PlainRel):
        anchor = SortMin(sort_ac(2))
        if a.op == "lt":
            return MainRel("lt", a.lhs, a.rhs, 0, anchor)
        return MainRel("cong", a.lhs, a.rhs, 0, anchor, m=a.m)
    if isinstance(a, EqDot):
        e = Se(2, a.t)
        return conj([Discr(e), MainRel("eq", a.t, z, a.k, e)])
    if isinstance(a, CongDot):
        c = canc_term(a.m, a.t)
        return conj([Discr(c), MainRel("cong", a.t, z, a.k, c, m=a.m)])
    if isinstance(a, DPred):
        c = Sc(a.p, a.r, a.t)
        return conj([
            MainRel("congb", a.t, z, 0, c, m=a.p ** a.r, mp=a.p ** a.s),
            neg(MainRel("cong", a.t, z, 0, c, m=a.p ** a.r)),
        ])
    return a


def _rewrite_syn_atoms(f: Formula, _memo: dict = None) -> Formula:
    if _memo is None:
        _memo = {}
    hit = _memo.get(id(f))
    if hit is not None:
        return hit[1]
    if isinstance(f, Atom):
        out = _syn_atom_rewrite(f)
    elif isinstance(f, Not):
        out = neg(_rewrite_syn_atoms(f.arg, _memo))
    elif isinstance(f, (Exists, Forall)):
        out = type(f)(f.var, f.sort, _rewrite_syn_atoms(f.body, _memo))
    elif hasattr(f, "args"):
        parts = [_rewrite_syn_atoms(g, _memo) for g in f.args]
        from .syntax import And
        out = conj(parts) if isinstance(f, And) else disj(parts)
    else:
        out = f
    _memo[id(f)] = (f, out)
    return out


def _pin_formula(var: AuxVar, term: AuxTerm) -> Formula:
    """var equals the canonical-map image `term`, written with anchored
    relations at var only."""

    z = LinTerm.zero()
    if isinstance(term, Sc):
        m = term.p ** term.r
        t = term.arg
        hit = conj([
            neg(MainRel("cong", t, z, 0, var, m=m)),
            MainRel("congb", t, z, 0, var, m=m, mp=m),
        ])
        bottom = conj([
            AuxLe(var, SortMin(sort_ac(term.p))),
            MainRel("cong", t, z, 0, var, m=m),
        ])
        return disj([hit, bottom])
    if isinstance(term, Se):
        t = term.arg
        hit = conj([
            neg(MainRel("eq", t, z, 0, var)),
            MainRel("eq", t, z, 0, SuccPlus(var)),
        ])
        bottom = conj([
            AuxLe(var, SortMin(sort_ae(term.p))),
            MainRel("eq", t, z, 0, var),
        ])
        return disj([hit, bottom])
    raise TypeError("not a canonical-map image: %r" % (term,))


def syn_qf_to_qe_fuf(f: Formula, cap: int = 4096,
                     trace: RewriteTrace = None) -> FamilyUnionForm:
    """A quantifier-free formula over plain and dotted atoms, brought into
    family union form over anchored relations.

    Plain relations are anchored at the bottom coordinate class, dotted
    predicates are unfolded through their canonical-map image, the images
    are pulled out into parameters pinned by anchored relations, and the
    matrix is case-split into pairwise-disjoint clauses.
    """

    g = _rewrite_syn_atoms(f)
    _note(trace, "plain-anchor", f, g)
    fresh = Fresh("th", all_names(g))
    g, extracted = extract_can_terms(g, fresh)
    g = hoist_main_units(g)
    theta = tuple((name, sort) for name, sort, _ in extracted)
    pins = [_pin_formula(AuxVar(name, sort), term)
            for name, sort, term in extracted]
    matrix = conj(pins + [g])
    _note(trace, "can-pin", g, matrix)

    clauses = []
    for row in dnf_disjoint_tree(matrix, cap=cap):
        xi_parts = []
        psi = []
        for u, pol in row:
            if unit_involves_main(u):
                psi.append((u, pol))
            else:
                xi_parts.append(u if pol else neg(u))
        clauses.append(FUClause(theta, conj(xi_parts), tuple(psi)))
    return FamilyUnionForm(tuple(clauses))


# ---------------------------------------------------------------------------
# Dimension chains

def _compositions(total: int, n: int):
    if n == 0:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, n - 1):
            yield (first,) + rest


def _dim_levels(p: int, beta: AuxTerm, s_hi, s_lo, ell: int) -> Formula:
    """dim of (bracket level s_lo)/(bracket level s_hi) at beta equals ell;
    s_hi may be None for the group at beta itself."""

    if s_hi is None:
        if s_lo is None:
            return TRUE if ell == 0 else FALSE
        return DimFloor(p, s_lo, ell, beta)
    if s_lo is None or s_lo > s_hi:
        raise ValueError("levels out of order")
    steps = list(range(s_lo, s_hi))
    if not steps:
        return TRUE if ell == 0 else FALSE
    return disj([
        conj([DimSucc(p, s, l, beta) for s, l in zip(steps, split)])
        for split in _compositions(ell, len(steps))
    ])


def _dim_same_class(p, alpha, s_hi, s_lo, ell, fresh) -> Formula:
    """Quotient of two bracket levels over the same class, anchored through
    a coordinate-sort point when one exists."""

    name = fresh("b")
    v = AuxVar(name, sort_ac(p))
    with_point = Exists(name, sort_ac(p), conj([
        AuxAsymp(v, alpha), _dim_levels(p, v, s_hi, s_lo, ell)]))
    no_point = conj([
        Not(Exists(name, sort_ac(p), AuxAsymp(v, alpha))),
        TRUE if ell == 0 else FALSE,
    ])
    return disj([with_point, no_point])


def dim_chain_formula(p: int, lower, upper, ell: int,
                      fresh: Fresh = None) -> Formula:
    """Pure-auxiliary formula: the chain condition holds and the p-quotient
    dimension between the two bracket groups equals ell.

    lower is (aux term, s) with s in N>=1 or None for the group itself;
    upper is the same or TOPG for the whole group.
    """

    if ell < 0 or ell > DIM_ELL_CAP:
        raise ResourceLimit("dimension target %d out of range" % ell)
    if fresh is None:
        fresh = Fresh("b")
    a1, s1 = lower
    if upper == TOPG:
        a2, s2, top = None, None, True
    else:
        a2, s2, top = upper[0], upper[1], False
    for s in (s1, s2):
        if s is not None and s < 1:
            raise ValueError("bracket level must be >= 1 or None")

    branches = []
    if not top:
        # same archimedean class needs level s1 at least level s2
        if s1 is None and s2 is None:
            branches.append(conj([AuxAsymp(a1, a2),
                                  TRUE if ell == 0 else FALSE]))
        elif s2 is not None and (s1 is None or s1 >= s2):
            branches.append(conj([
                AuxAsymp(a1, a2),
                _dim_same_class(p, a1, s1, s2, ell, fresh),
            ]))

    # a1 strictly below a2 (or below the whole group)
    for k in range(ell + 2):
        names = [fresh("b") for _ in range(k)]
        betas = [AuxVar(n, sort_ac(p)) for n in names]
        order = []
        prev = a1
        for b in betas:
            order.append(aux_lt(prev, b))
            prev = b
        if not top:
            order.append(aux_lt(prev, a2))
        gname = fresh("g")
        gv = AuxVar(gname, sort_ac(p))
        between = conj([aux_lt(a1, gv)] +
                       ([aux_lt(gv, a2)] if not top else []))
        exact = Forall(gname, sort_ac(p), implies(
            between, disj([AuxAsymp(gv, b) for b in betas])))

        pieces = []  # dimension contributions along the chain
        pieces.append(lambda l, a1=a1, s1=s1: _dim_same_class(
            p, a1, s1, 1, l, fresh))
        for b in betas:
            pieces.append(lambda l, b=b: DimFloor(p, 1, l, b))
        if top or s2 is None:
            pieces.append(lambda l: TRUE if l == 0 else FALSE)
        else:
            pieces.append(lambda l, a2=a2, s2=s2: _dim_same_class(
                p, a2, None, s2, l, fresh))

        dim_split = disj([
            conj([piece(l) for piece, l in zip(pieces, split)])
            for split in _compositions(ell, len(pieces))
        ])
        core = conj(order + [exact, dim_split])
        for n in reversed(names):
            core = Exists(n, sort_ac(p), core)
        branches.append(core)
    return disj(branches)
