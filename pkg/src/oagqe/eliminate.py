"""Elimination of main-sort existential quantifiers.

The engine works on conjunctions of anchored literals in one distinguished
main variable.  Coefficients are scaled to one, inequalities are reduced
pair by pair to a gap analysis at the dominating class, and the remaining
congruence systems are solved prime by prime through coset normalization
and a counting condition on quotient dimensions.  Everything a step cannot
decide outright is pushed into guard formulas over the auxiliary sorts, so
the output is quantifier-free in the main sort and exactly equivalent.

`qe_driver` wires the step into full formulas: innermost main quantifiers
are eliminated first, the results are re-expressed through the canonical
maps, and the final matrix is brought back into family union form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from typing import Optional

from .normal import FamilyUnionForm, ResourceLimit, all_names, atom_lin_terms
from .syntax import (
    FALSE, TRUE, Atom, AuxTerm, AuxAsymp, AuxLe, Bottom, Exists, Forall,
    Formula, Fresh, LinTerm, MainRel, Not, Sc, Se, SortMin, SuccPlus, Top,
    conj, disj, neg, sort_ac,
)
from .translate import (
    TOPG, _prime_power_parts, dim_chain_formula, discr_lift,
    qe_atom_to_syn, syn_qf_to_qe_fuf,
)


# ---------------------------------------------------------------------------
# Data shapes

@dataclass(frozen=True)
class LiteralConj:
    """A conjunction of signed atoms."""

    lits: tuple  # of (Atom, bool)

    def formula(self) -> Formula:
        return conj([a if pol else Not(a) for a, pol in self.lits])


@dataclass(frozen=True)
class GuardedResult:
    """One guard region of the inequality analysis.

    Within the region, the existential over the input conjunction is
    equivalent to: for every group, some case admits a witness.  Guards of
    distinct results are pairwise inconsistent.
    """

    guard: Formula
    residuals: tuple  # of tuple[LiteralConj, ...]


@dataclass(frozen=True)
class Coset:
    """One congruence condition x in c + k*1_aux + (group at aux + p^r G).

    s selects the limit group of exponent p^s over the class; None selects
    the class group itself.  Bracket conditions carry no offset (k = 0).
    """

    aux: AuxTerm
    p: int
    r: int
    s: Optional[int]
    c: LinTerm
    k: int


@dataclass(frozen=True)
class CosetSystem:
    """A one-prime system: at most one positive coset and a set of excluded
    ones, all at modulus exponent r."""

    p: int
    r: int
    positive: Optional[Coset]
    negatives: tuple  # of Coset


@dataclass(frozen=True)
class _Bound:
    aux: AuxTerm
    c: LinTerm
    k: int
    strict: bool


@dataclass(frozen=True)
class _EqRep:
    aux: AuxTerm
    c: LinTerm
    k: int


@dataclass(frozen=True)
class _CongRec:
    pol: bool
    aux: AuxTerm
    m: int
    mp: Optional[int]  # bracket exponent, None for the plain class group
    c: LinTerm
    k: int


class _Ctx:
    def __init__(self, fresh: Fresh, limit: int):
        self.fresh = fresh
        self.limit = limit
        self.count = 0
        self.dim_cache = {}
        self.prime_cache = {}
        self.cong_cache = {}
        self.discr_cache = {}

    def tick(self, n: int = 1):
        self.count += n
        if self.count > self.limit:
            raise ResourceLimit("branch budget exceeded (%d)" % self.limit)

    def dim(self, p, lower, upper, ell) -> Formula:
        key = (p, lower, upper, ell)
        if key not in self.dim_cache:
            self.dim_cache[key] = dim_chain_formula(p, lower, upper, ell,
                                                    self.fresh)
        return self.dim_cache[key]

    def discr(self, term) -> Formula:
        # one witness formula per anchor, so equal anchors stay one unit
        if term not in self.discr_cache:
            self.discr_cache[term] = discr_lift(term, self.fresh)
        return self.discr_cache[term]


# ---------------------------------------------------------------------------
# Folding constructors: sort minima are the bottom class, so comparisons
# against them and between equal terms are decided on the spot.

def _le_cls(a: AuxTerm, b: AuxTerm) -> Formula:
    if a == b or isinstance(a, SortMin):
        return TRUE
    return AuxLe(a, b)


def _lt_cls(a: AuxTerm, b: AuxTerm) -> Formula:
    return neg(_le_cls(b, a))


def _asymp_cls(a: AuxTerm, b: AuxTerm) -> Formula:
    if a == b or (isinstance(a, SortMin) and isinstance(b, SortMin)):
        return TRUE
    return AuxAsymp(a, b)


def _mk_cong(diff: LinTerm, k: int, aux: AuxTerm, m: int) -> Formula:
    k %= m
    if not diff.vars() and diff == LinTerm.zero() and k == 0:
        return TRUE
    return MainRel("cong", diff, LinTerm.zero(), k, aux, m=m)


def _mk_congb(diff: LinTerm, aux: AuxTerm, m: int, mp: int) -> Formula:
    if diff == LinTerm.zero():
        return TRUE
    return MainRel("congb", diff, LinTerm.zero(), 0, aux, m=m, mp=mp)


def _mk_lt0(t: LinTerm, k: int, aux: AuxTerm) -> Formula:
    """0 < t + k minimal positive steps at aux."""

    if t == LinTerm.zero() and k <= 0:
        return FALSE
    return MainRel("lt", LinTerm.zero(), t, k, aux)


def _mk_eq(lhs: LinTerm, rhs: LinTerm, k: int, aux: AuxTerm) -> Formula:
    if lhs == rhs and k == 0:
        return TRUE
    return MainRel("eq", lhs, rhs, k, aux)


def _grow(guard, *extra):
    """Guard list extended by atoms, folding constants; None when dead."""

    out = list(guard)
    for g in extra:
        if isinstance(g, Bottom):
            return None
        if isinstance(g, Top):
            continue
        out.append(g)
    return out


def power_sum_bound(n: int, nu: int) -> int:
    """Smallest N such that nu negative powers of n can only reach total 1
    if the powers below n**N alone already reach 1."""

    if n < 2:
        raise ValueError("base must be >= 2")
    if nu < 0:
        raise ValueError("term count must be >= 0")
    if nu == 0:
        return 0
    return -(-nu // (n - 1))


# ---------------------------------------------------------------------------
# Literal records

def _anchor_main_vars(eta: AuxTerm):
    if isinstance(eta, (Sc, Se)):
        return eta.arg.vars()
    if isinstance(eta, SuccPlus):
        return _anchor_main_vars(eta.arg)
    return set()


def _atom_main_vars(a: Atom):
    out = set()
    for t in atom_lin_terms(a):
        out |= t.vars()
    return out


def _gather(var: str, lits):
    """Split literals into var-free ones and raw anchored records in var."""

    xfree, raws = [], []
    for a, pol in lits:
        if var not in _atom_main_vars(a):
            xfree.append((a, pol))
            continue
        if not isinstance(a, MainRel):
            raise ValueError("quantified variable in a non-anchored atom: "
                             "%r" % (a,))
        if var in _anchor_main_vars(a.aux):
            raise ValueError("quantified variable inside an anchor: "
                             "%r" % (a,))
        d = a.lhs - a.rhs
        r = d.coeff(var)
        if r == 0:
            xfree.append((a, pol))
            continue
        raws.append((a.op, pol, r, d.without(var), a.k, a.m, a.mp, a.aux))
    return xfree, raws


def _scale_records(raws):
    """Records with the variable coefficient scaled to one.

    Returns (lowers, uppers, equalities, inequations, congruences, R) with
    every literal rewritten for x' = R*x; membership of x' in RG is added
    as a congruence when R > 1.
    """

    R = 1
    for _, _, r, _, _, _, _, _ in raws:
        R = R * abs(r) // math.gcd(R, abs(r))
    lowers, uppers, eqs, nes, congs = [], [], [], [], []
    for op, pol, r, w, k, m, mp, aux in raws:
        c = R // r
        rep = w.scale(-c)
        if op == "eq":
            (eqs if pol else nes).append(_EqRep(aux, rep, c * k))
        elif op == "lt":
            if (c > 0) == pol:
                # x' < rep + ck, or the negation of rep + ck < x'
                uppers.append(_Bound(aux, rep, c * k, pol))
            else:
                lowers.append(_Bound(aux, rep, c * k, pol))
        elif op == "cong":
            m2 = abs(c) * m
            congs.append(_CongRec(pol, aux, m2, None, rep, (c * k) % m2))
        else:
            m2, mp2 = abs(c) * m, abs(c) * mp
            congs.append(_CongRec(pol, aux, math.gcd(m2, mp2), mp2, rep, 0))
    if R > 1:
        congs.append(_CongRec(True, SortMin(sort_ac(2)), R, None,
                              LinTerm.zero(), 0))
    return lowers, uppers, eqs, nes, congs, R


def _cong_m0(congs) -> int:
    m0 = 1
    for rec in congs:
        m0 = m0 * rec.m // math.gcd(m0, rec.m)
    return m0


def _rec_atom(var: str, rec) -> tuple:
    """The (atom, polarity) literal of a scaled record, in the variable."""

    x = LinTerm.var(var)
    if isinstance(rec, _EqRep):
        return MainRel("eq", x, rec.c, rec.k, rec.aux), True
    if isinstance(rec, _CongRec):
        if rec.mp is None:
            return (MainRel("cong", x, rec.c, rec.k, rec.aux, m=rec.m),
                    rec.pol)
        return (MainRel("congb", x, rec.c, 0, rec.aux, m=rec.m, mp=rec.mp),
                rec.pol)
    raise TypeError("no atom form for %r" % (rec,))


def _bound_atom(var: str, b: _Bound, lower: bool) -> tuple:
    x = LinTerm.var(var)
    if lower:
        if b.strict:
            return MainRel("lt", b.c, x, -b.k, b.aux), True
        return MainRel("lt", x, b.c, b.k, b.aux), False
    if b.strict:
        return MainRel("lt", x, b.c, b.k, b.aux), True
    return MainRel("lt", b.c, x, -b.k, b.aux), False


def normalize_coefficients(var: str, lits, *,
                           keep_free: bool = True) -> LiteralConj:
    """An equivalent-for-existence conjunction whose anchored literals all
    carry the variable with coefficient one.

    The variable is read as R times the original one; membership in RG is
    recorded as a congruence at the bottom class.
    """

    xfree, raws = _gather(var, lits)
    lowers, uppers, eqs, nes, congs, _ = _scale_records(raws)
    out = list(xfree) if keep_free else []
    for b in lowers:
        out.append(_bound_atom(var, b, True))
    for b in uppers:
        out.append(_bound_atom(var, b, False))
    for e in eqs:
        out.append(_rec_atom(var, e))
    for e in nes:
        a, _ = _rec_atom(var, e)
        out.append((a, False))
    for rec in congs:
        out.append(_rec_atom(var, rec))
    return LiteralConj(tuple(out))


# ---------------------------------------------------------------------------
# Part one: inequalities

def _pair_branches(lo: _Bound, up: _Bound, congs, m0: int, ctx: _Ctx):
    """Branches for one lower/upper pair.

    Each branch is (guard, cases); under the guard, the pair together with
    the congruences admits a witness iff some case does.  A case is
    (equality record or None, congruence records).  Guards of distinct
    branches are inconsistent; regions covered by no branch admit none.
    """

    if (not lo.strict and not up.strict and lo.aux == up.aux
            and lo.c == up.c and lo.k == up.k):
        # degenerate interval: the witness is pinned to the bound
        return [(TRUE, ((_EqRep(lo.aux, lo.c, lo.k), tuple(congs)),))]
    t = up.c - lo.c
    M = m0 if m0 >= 2 else 2
    e = Se(M, t)
    base = tuple(congs)
    branches = []
    gammas = [
        # both bounds and their gap live at the lower bound's class
        ((_asymp_cls(up.aux, lo.aux), _le_cls(e, lo.aux)), lo.aux,
         (lo.k, lo.strict), (up.k, up.strict)),
        # the upper bound sits strictly below: it only cuts at lo's class
        ((_lt_cls(up.aux, lo.aux), _le_cls(e, lo.aux)), lo.aux,
         (lo.k, lo.strict), (0, False)),
        ((_lt_cls(lo.aux, up.aux), _le_cls(e, up.aux)), up.aux,
         (0, False), (up.k, up.strict)),
        # both bounds vanish below the class of the difference
        ((_lt_cls(lo.aux, e), _lt_cls(up.aux, e)), e,
         (0, False), (0, False)),
    ]

    def emit(guard, cases):
        if guard is not None:
            branches.append((conj(guard), cases))

    for raw_pre, gamma, (klo, slo), (kup, sup) in gammas:
        pre = _grow([], *raw_pre)
        if pre is None:
            continue
        ctx.tick()
        big = _mk_lt0(t, kup - klo - (m0 + 1), gamma)
        dg = ctx.discr(gamma)
        # a gap wider than the congruence period: the bounds only pin the
        # residue of x against the limit group at gamma
        wide = base
        if m0 > 1:
            wide = base + (_CongRec(True, gamma, m0, m0, lo.c, 0),)
        emit(_grow(pre, big), ((None, wide),))
        if not slo and not sup:
            emit(_grow(pre, neg(big), neg(dg),
                       _mk_eq(up.c, lo.c, klo - kup, gamma)),
                 ((_EqRep(gamma, lo.c, klo), base),))
        for ell in range(m0 + 2):
            i0 = 1 if slo else 0
            i1 = ell - 1 if sup else ell
            if i1 < i0:
                continue
            cases = tuple((_EqRep(gamma, lo.c, klo + i), base)
                          for i in range(i0, i1 + 1))
            emit(_grow(pre, neg(big), dg,
                       _mk_eq(up.c, lo.c, ell + klo - kup, gamma)),
                 cases)
    return branches


def part1_inequalities(var: str, lits, fresh: Fresh = None, *,
                       max_branches: int = 20000) -> list:
    """Reduce the order part of a coefficient-one conjunction.

    Input literals must all mention the variable; equalities must be
    positive (split inequations into clauses first).  The existential is
    equivalent to the disjunction over the results of

        guard  and  (for every group: some case has a witness)

    where the cases are congruence systems with at most one equality.
    """

    if fresh is None:
        fresh = Fresh("b", _names_of_lits(lits) | {var})
    ctx = _Ctx(fresh, max_branches)
    xfree, raws = _gather(var, lits)
    if xfree:
        raise ValueError("literal without the quantified variable: "
                         "%r" % (xfree[0][0],))
    lowers, uppers, eqs, nes, congs, R = _scale_records(raws)
    if R > 1:
        raise ValueError("coefficients are not one; normalize first")
    if nes:
        raise ValueError("negative equality; split it into bound clauses")
    for e in eqs:
        lowers.append(_Bound(e.aux, e.c, e.k, False))
        uppers.append(_Bound(e.aux, e.c, e.k, False))
    m0 = _cong_m0(congs)

    def case_conj(case) -> LiteralConj:
        eq, cs = case
        lits_out = [] if eq is None else [_rec_atom(var, eq)]
        lits_out += [_rec_atom(var, rec) for rec in cs]
        return LiteralConj(tuple(lits_out))

    if not lowers or not uppers:
        return [GuardedResult(TRUE,
                              ((case_conj((None, tuple(congs))),),))]
    per_pair = [_pair_branches(lo, up, congs, m0, ctx)
                for lo in lowers for up in uppers]
    results = []
    for combo in product(*per_pair):
        ctx.tick()
        guard = conj([g for g, _ in combo])
        groups = tuple(tuple(case_conj(c) for c in cases)
                       for _, cases in combo)
        results.append(GuardedResult(guard, groups))
    return results


def _names_of_lits(lits):
    return all_names(conj([a if pol else Not(a) for a, pol in lits]))


# ---------------------------------------------------------------------------
# Part two: congruences, prime by prime

def _vp(m: int, p: int) -> int:
    r = 0
    while m % p == 0:
        m //= p
        r += 1
    return r


def _prime_split(rec: _CongRec):
    """Prime-power cosets whose conjunction is the record's positive sense,
    or None when the condition is the whole group."""

    if rec.mp is None:
        if rec.m == 1:
            return None
        return [Coset(rec.aux, p, r, None, rec.c, rec.k)
                for p, r in _prime_power_parts(rec.m)]
    m = math.gcd(rec.m, rec.mp)
    if m == 1:
        return None
    out = []
    for p, s in _prime_power_parts(rec.mp):
        r = _vp(m, p)
        if r:
            out.append(Coset(rec.aux, p, r, s, rec.c, 0))
    return out


def _group_le_static(a: Coset, b: Coset) -> bool:
    """Containment of the two groups when the anchors share a class."""

    if a.s is None:
        return True
    if b.s is None:
        return False
    return a.s >= b.s


def _order_branches(a: Coset, b: Coset, ctx: _Ctx):
    """Guard branches deciding which of the two groups contains the other.

    Yields (extra guard atoms, True if a's group is the smaller one)."""

    if a.aux == b.aux:
        yield [], _group_le_static(a, b)
        return
    options = [
        (_lt_cls(a.aux, b.aux), True),
        (_lt_cls(b.aux, a.aux), False),
        (_asymp_cls(a.aux, b.aux), _group_le_static(a, b)),
    ]
    for g, a_smaller in options:
        extra = _grow([], g)
        if extra is not None:
            yield extra, a_smaller


def _coset_member(small: Coset, big: Coset, p: int, r: int,
                  ctx: _Ctx) -> Formula:
    """The small coset's representative belongs to the big one.

    Assumes (by guard context) that the small group is contained in the
    big one, so every offset class sits at or below the big anchor."""

    diff = small.c - big.c
    m = p ** r
    if big.s is not None:
        # the limit group absorbs minimal positive elements of its class
        # and of every class below
        return _mk_congb(diff, big.aux, m, p ** big.s)
    # small.c + small.k * 1 lies in big.c + big.k * 1 + group, i.e. the
    # difference is congruent to (big.k - small.k) minimal positive steps
    base = 0
    others = []
    for kk, al in ((-small.k, small.aux), (big.k, big.aux)):
        if kk == 0:
            continue
        if al == big.aux:
            base += kk
        else:
            others.append((kk, al))
    if not others:
        return _mk_cong(diff, base, big.aux, m)
    out = []
    for picks in product((False, True), repeat=len(others)):
        ctx.tick()
        k = base
        guards = []
        for (kk, al), taken in zip(others, picks):
            guards.append(_asymp_cls(al, big.aux) if taken
                          else _lt_cls(al, big.aux))
            if taken:
                k += kk
        guards = _grow([], *guards, _mk_cong(diff, k, big.aux, m))
        if guards is not None:
            out.append(conj(guards))
    return disj(out)


def _coset_branches(p: int, r: int, level, ctx: _Ctx):
    """Normalize the top-level literals of one prime step.

    Yields (guard atoms, positive coset or None, disjoint negatives all
    contained in the positive).  Guard regions of distinct outputs are
    disjoint; regions covered by none admit no witness."""

    positives = [cs for pol, cs in level if pol]
    negatives = [cs for pol, cs in level if not pol]
    states = [([], None, negatives)]
    for cs in positives:
        nxt = []
        for guard, pos, negs in states:
            if pos is None:
                nxt.append((guard, cs, negs))
                continue
            for extra, cs_smaller in _order_branches(cs, pos, ctx):
                small, big = (cs, pos) if cs_smaller else (pos, cs)
                tst = _coset_member(small, big, p, r, ctx)
                g2 = _grow(guard, *extra, tst)
                if g2 is not None:
                    nxt.append((g2, small, negs))
                # disjoint positives leave nothing: no branch emitted
        states = nxt
        ctx.tick(len(states))

    # each negative is dropped, kept, or kills the state
    refined = []
    for guard, pos, negs in states:
        stack = [(guard, [], list(negs))]
        while stack:
            g, kept, pending = stack.pop()
            if not pending:
                refined.append((g, pos, kept))
                continue
            cs, pending = pending[0], pending[1:]
            ctx.tick()
            if pos is None:
                stack.append((g, kept + [cs], pending))
                continue
            for extra, cs_smaller in _order_branches(cs, pos, ctx):
                if cs_smaller:
                    tst = _coset_member(cs, pos, p, r, ctx)
                    hit = _grow(g, *extra, tst)
                    if hit is not None:
                        stack.append((hit, kept + [cs], pending))
                    miss = _grow(g, *extra, neg(tst))
                    if miss is not None:
                        stack.append((miss, kept, pending))
                else:
                    # the positive fits inside the negative: a hit empties
                    # the state, a miss makes the negative irrelevant
                    tst = _coset_member(pos, cs, p, r, ctx)
                    miss = _grow(g, *extra, neg(tst))
                    if miss is not None:
                        stack.append((miss, kept, pending))

    # subsumption between negatives: keep a pairwise-disjoint set
    out = []
    for guard, pos, negs in refined:
        # state: (guard, disjoint kept set, candidate, index into kept,
        #         still-pending candidates)
        stack = [(guard, [], None, 0, negs)]
        while stack:
            g, kept, cs, idx, pending = stack.pop()
            ctx.tick()
            if cs is None:
                if not pending:
                    out.append((g, pos, kept))
                else:
                    stack.append((g, kept, pending[0], 0, pending[1:]))
                continue
            if idx == len(kept):
                stack.append((g, kept + [cs], None, 0, pending))
                continue
            other = kept[idx]
            for extra, cs_smaller in _order_branches(cs, other, ctx):
                small, big = (cs, other) if cs_smaller else (other, cs)
                tst = _coset_member(small, big, p, r, ctx)
                hit = _grow(g, *extra, tst)
                if hit is not None:
                    if cs_smaller:
                        # a hit folds the candidate into the kept one
                        stack.append((hit, kept, None, 0, pending))
                    else:
                        rest = kept[:idx] + kept[idx + 1:]
                        stack.append((hit, rest, cs, idx, pending))
                miss = _grow(g, *extra, neg(tst))
                if miss is not None:
                    stack.append((miss, kept, cs, idx + 1, pending))
    return out


def _hdesc(cs: Coset, r: int):
    """Descriptor of (group + p^(r-1) G) / p^(r-1) G for dimension chains."""

    if cs.s is None:
        return (cs.aux, None)
    return (cs.aux, cs.s - r + 1)


def _sum_condition(p: int, r: int, pos: Optional[Coset], selected,
                   ctx: _Ctx) -> Formula:
    """The selected excluded cosets do not fill their common ambient coset.

    Expressed through quotient dimensions: with q the index of each
    excluded group inside the ambient one, the sum of 1/q stays below one.
    Dimensions at or above the truncation bound contribute nothing."""

    if not selected:
        return TRUE
    upper = TOPG if pos is None else _hdesc(pos, r)
    N = power_sum_bound(p, len(selected))
    opts = []
    for cs in selected:
        fin = [ctx.dim(p, _hdesc(cs, r), upper, ell) for ell in range(N)]
        opts.append(fin + [neg(disj(list(fin)))])
    out = []
    for choice in product(range(N + 1), repeat=len(selected)):
        total = sum((Fraction(1, p ** ell)
                     for ell in choice if ell < N), Fraction(0))
        if total < 1:
            ctx.tick()
            out.append(conj([opts[i][ell]
                             for i, ell in enumerate(choice)]))
    return disj(out)


def _relax(cs: Coset, gr: int) -> Coset:
    return Coset(cs.aux, cs.p, gr, cs.s, cs.c, cs.k)


def _level_step(p: int, r: int, pos: Optional[Coset], negs, rest,
                ctx: _Ctx) -> Formula:
    """One level of the prime recursion, after coset normalization.

    Splits on which excluded cosets stay relevant inside the witness's
    p^(r-1) G class, checks the counting condition there, and recurses on
    the relaxed memberships together with the lower-level literals."""

    gr = r - 1
    cond1 = [(True, _relax(pos, gr))] if pos is not None else []
    if gr == 0:
        subsets = [tuple(range(len(negs)))]
    else:
        subsets = [tuple(idx) for n in range(len(negs) + 1)
                   for idx in combinations(range(len(negs)), n)]
    out = []
    for chosen in subsets:
        ctx.tick()
        sumc = _sum_condition(p, r, pos, [negs[i] for i in chosen], ctx)
        if isinstance(sumc, Bottom):
            continue
        mems = cond1 + [(i in chosen, _relax(negs[i], gr))
                        for i in range(len(negs))]
        out.append(conj([sumc, _exists_prime(p, rest + mems, ctx)]))
    return disj(out)


def _exists_prime(p: int, lits, ctx: _Ctx) -> Formula:
    """Solvability of a one-prime coset system in the quantified variable,
    as a formula over the parameters only."""

    live = []
    for pol, cs in lits:
        if cs.r <= 0:
            if not pol:
                return FALSE
            continue
        if (pol, cs) not in live:
            live.append((pol, cs))
    if not live:
        return TRUE
    key = (p, tuple(sorted(live, key=repr)))
    cached = ctx.prime_cache.get(key)
    if cached is not None:
        return cached
    r = max(cs.r for _, cs in live)
    level = [(pol, cs) for pol, cs in live if cs.r == r]
    rest = [(pol, cs) for pol, cs in live if cs.r < r]
    out = []
    for guard, pos, negs in _coset_branches(p, r, level, ctx):
        out.append(conj(guard + [_level_step(p, r, pos, negs, rest, ctx)]))
    res = disj(out)
    ctx.prime_cache[key] = res
    return res


def _part2_core(eq: Optional[_EqRep], congs, ctx: _Ctx) -> Formula:
    """Solvability of a congruence system with at most one equality."""

    key = (eq, tuple(congs))
    cached = ctx.cong_cache.get(key)
    if cached is not None:
        return cached
    clauses = [[]]
    for rec in congs:
        parts = _prime_split(rec)
        if parts is None:
            if rec.pol:
                continue
            return FALSE
        if rec.pol:
            for cl in clauses:
                cl.extend((True, cs) for cs in parts)
        else:
            # the negation fails in at least one prime component
            clauses = [cl + [(False, cs)]
                       for cl in clauses for cs in parts]
            ctx.tick(len(clauses))
    out = []
    for cl in clauses:
        by_p = {}
        for pol, cs in cl:
            by_p.setdefault(cs.p, []).append((pol, cs))
        fs = []
        for p in sorted(by_p):
            plist = by_p[p]
            if eq is not None:
                r = max(cs.r for _, cs in plist)
                plist = plist + [(True, Coset(eq.aux, p, r, None,
                                              eq.c, eq.k))]
            fs.append(_exists_prime(p, plist, ctx))
        out.append(conj(fs))
    res = disj(out)
    ctx.cong_cache[key] = res
    return res


def part2_congruences(var: str, system: LiteralConj, fresh: Fresh = None, *,
                      max_branches: int = 20000) -> Formula:
    """Eliminate the variable from congruence literals plus at most one
    positive equality, all with coefficient one."""

    if fresh is None:
        fresh = Fresh("b", _names_of_lits(system.lits) | {var})
    ctx = _Ctx(fresh, max_branches)
    xfree, raws = _gather(var, system.lits)
    if xfree:
        raise ValueError("literal without the quantified variable: "
                         "%r" % (xfree[0][0],))
    lowers, uppers, eqs, nes, congs, R = _scale_records(raws)
    if R > 1:
        raise ValueError("coefficients are not one; normalize first")
    if lowers or uppers or nes:
        raise ValueError("only congruences and a positive equality remain "
                         "after the order analysis")
    if len(eqs) > 1:
        raise ValueError("at most one equality is supported")
    return _part2_core(eqs[0] if eqs else None, congs, ctx)


def sat_membership_condition(var: str, system: CosetSystem,
                             fresh: Fresh = None, *, gexp: int = None,
                             qs=None, max_branches: int = 20000) -> Formula:
    """One reduction step for a coset system: a formula whose solvability
    in the variable matches the system's, with all memberships relaxed to
    modulus exponent gexp (default r - 1).

    With qs given (one index per excluded coset, None meaning infinite),
    the counting conditions are decided numerically; otherwise they are
    spelled out through quotient-dimension formulas, which requires the
    uniform level r and gexp = r - 1.
    """

    p, r = system.p, system.r
    pos, negs = system.positive, list(system.negatives)
    if gexp is None:
        gexp = r - 1
    if fresh is None:
        fresh = Fresh("b", {var})
    ctx = _Ctx(fresh, max_branches)
    if qs is None:
        if gexp != r - 1:
            raise ValueError("dimension counting needs gexp = r - 1")
        for cs in ([pos] if pos else []) + negs:
            if cs.r != r:
                raise ValueError("dimension counting needs uniform level")
    elif len(qs) != len(negs):
        raise ValueError("one index per excluded coset")

    x = LinTerm.var(var)

    def mem(cs: Coset) -> Formula:
        if gexp == 0:
            return TRUE
        if cs.s is not None:
            return MainRel("congb", x, cs.c, 0, cs.aux,
                           m=p ** gexp, mp=p ** cs.s)
        return MainRel("cong", x, cs.c, cs.k % p ** gexp, cs.aux,
                       m=p ** gexp)

    out = []
    for n in range(len(negs) + 1):
        for chosen in combinations(range(len(negs)), n):
            ctx.tick()
            if qs is not None:
                total = sum((Fraction(1, qs[i])
                             for i in chosen if qs[i] is not None),
                            Fraction(0))
                sumc = TRUE if total < 1 else FALSE
            else:
                sumc = _sum_condition(p, r, pos,
                                      [negs[i] for i in chosen], ctx)
            lits = [mem(pos)] if pos is not None else []
            lits += [mem(negs[i]) if i in chosen else neg(mem(negs[i]))
                     for i in range(len(negs))]
            out.append(conj([sumc] + lits))
    return disj(out)


# ---------------------------------------------------------------------------
# The composed step and the driver

def _clause_formula(lowers, uppers, congs, m0, ctx: _Ctx) -> Formula:
    if not lowers or not uppers:
        return _part2_core(None, tuple(congs), ctx)
    fs = []
    for lo in lowers:
        for up in uppers:
            branches = _pair_branches(lo, up, congs, m0, ctx)
            fs.append(disj([
                conj([g, disj([_part2_core(eq, cs, ctx)
                               for eq, cs in cases])])
                for g, cases in branches]))
    return conj(fs)


def eliminate_exists_main(var: str, lits, fresh: Fresh = None, *,
                          translate_syn: bool = False,
                          max_branches: int = 200000) -> Formula:
    """Eliminate an existential main quantifier from a literal conjunction.

    Returns a main-quantifier-free formula equivalent to exists var of the
    conjunction.  With translate_syn, every anchored relation of the result
    is re-expressed through plain relations, dotted predicates and
    canonical-map comparisons.
    """

    lits = list(lits)
    if fresh is None:
        fresh = Fresh("b", _names_of_lits(lits) | {var})
    ctx = _Ctx(fresh, max_branches)
    xfree, raws = _gather(var, lits)
    lowers, uppers, eqs, nes, congs, _ = _scale_records(raws)
    for e in eqs:
        lowers.append(_Bound(e.aux, e.c, e.k, False))
        uppers.append(_Bound(e.aux, e.c, e.k, False))
    m0 = _cong_m0(congs)
    clause_fs = []
    for sides in product((0, 1), repeat=len(nes)):
        ctx.tick()
        los = lowers + [_Bound(n.aux, n.c, n.k, True)
                        for n, side in zip(nes, sides) if side == 0]
        ups = uppers + [_Bound(n.aux, n.c, n.k, True)
                        for n, side in zip(nes, sides) if side == 1]
        clause_fs.append(_clause_formula(los, ups, congs, m0, ctx))
    out = conj([a if pol else Not(a) for a, pol in xfree] +
               [disj(clause_fs)])
    if translate_syn:
        out = _formula_to_syn(out, fresh)
    return out


def _formula_to_syn(f: Formula, fresh: Fresh, memo: dict = None) -> Formula:
    # Shared subformulas are translated once; the memo also keeps a
    # reference to each visited node so identities stay stable.  Atoms are
    # additionally deduplicated by value: equal atoms must come out as the
    # same translation, or their fresh witnesses would make them distinct
    # branching units downstream.
    if memo is None:
        memo = {}
    hit = memo.get(id(f))
    if hit is not None:
        return hit[1]
    if isinstance(f, Atom):
        out = memo.get(f)
        if out is None:
            out = qe_atom_to_syn(f, fresh)
            memo[f] = out
    elif isinstance(f, Not):
        out = neg(_formula_to_syn(f.arg, fresh, memo))
    elif isinstance(f, (Exists, Forall)):
        out = type(f)(f.var, f.sort, _formula_to_syn(f.body, fresh, memo))
    elif hasattr(f, "args"):
        from .syntax import And
        parts = [_formula_to_syn(g, fresh, memo) for g in f.args]
        out = conj(parts) if isinstance(f, And) else disj(parts)
    else:
        out = f
    memo[id(f)] = (f, out)
    return out


def _push_out_main(f: Formula, fresh: Fresh, cap: int,
                   max_branches: int) -> Formula:
    if isinstance(f, Atom):
        return f
    if isinstance(f, Not):
        return neg(_push_out_main(f.arg, fresh, cap, max_branches))
    if hasattr(f, "args"):
        from .syntax import And
        parts = [_push_out_main(g, fresh, cap, max_branches)
                 for g in f.args]
        return conj(parts) if isinstance(f, And) else disj(parts)
    if isinstance(f, (Exists, Forall)):
        body = _push_out_main(f.body, fresh, cap, max_branches)
        if not f.sort.is_main:
            return type(f)(f.var, f.sort, body)
        if isinstance(f, Exists):
            return _main_exists(f.var, body, fresh, cap, max_branches)
        return neg(_main_exists(f.var, neg(body), fresh, cap,
                                max_branches))
    return f


def _main_exists(var: str, body: Formula, fresh: Fresh, cap: int,
                 max_branches: int) -> Formula:
    fuf = syn_qf_to_qe_fuf(body, cap=cap)
    parts = []
    for cl in fuf.clauses:
        chi = eliminate_exists_main(var, list(cl.psi), fresh,
                                    translate_syn=True,
                                    max_branches=max_branches)
        inner = conj([cl.xi, chi])
        for name, sort in reversed(cl.theta):
            inner = Exists(name, sort, inner)
        parts.append(inner)
    return disj(parts)


def qe_driver(f: Formula, *, cap: int = 4096,
              max_branches: int = 200000) -> FamilyUnionForm:
    """Full relative elimination: remove every main-sort quantifier and
    return the result in family union form.

    Main quantifiers are eliminated innermost first; after each step the
    result is re-expressed through the canonical maps, so the next step
    again sees only plain and dotted main content.  Raises ResourceLimit
    when a branching budget is exceeded; logically impossible inputs
    simply come out as an empty or false union.
    """

    fresh = Fresh("b", all_names(f))
    g = _push_out_main(f, fresh, cap, max_branches)
    return syn_qf_to_qe_fuf(g, cap=cap)
