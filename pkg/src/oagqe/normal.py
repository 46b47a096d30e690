"""Family union form and disjoint disjunctive normal form.

A formula without main-sort quantifiers is rewritten as a finite disjunction
of clauses  E theta. (xi and psi)  where xi lives purely in the auxiliary
sorts, psi is a conjunction of literals over the main variables and theta,
and any two instantiated clauses are mutually inconsistent.  The theta
parameters stand for the canonical-map images of main-sort terms; equating
them with those images inside every psi is what makes distinct instantiations
clash.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Optional

from .syntax import (
    FALSE, TRUE, Atom, AuxLe, AuxTerm, AuxVar, Bottom, Exists, Forall,
    Formula, Fresh, MainRel, Not, And, Or, Sc, Se, Sort, SuccPlus, Top,
    atom_aux_terms, atom_lin_terms, atoms_of, aux_term_sort, conj, disj,
    free_vars, has_main_quantifier, neg, subformulas,
)


class ResourceLimit(Exception):
    """Raised when a rewriting step exceeds its configured size budget."""


# ---------------------------------------------------------------------------
# Boolean skeleton

def boolean_units(f: Formula) -> list[Formula]:
    """Maximal non-boolean subformulas (atoms and quantified blocks), in
    first-occurrence order."""

    out: list[Formula] = []
    seen = set()
    visited: set[int] = set()

    def walk(g: Formula):
        if id(g) in visited:
            return
        visited.add(id(g))
        if isinstance(g, (Top, Bottom)):
            return
        if isinstance(g, Not):
            walk(g.arg)
        elif isinstance(g, (And, Or)):
            for h in g.args:
                walk(h)
        else:
            if g not in seen:
                seen.add(g)
                out.append(g)

    walk(f)
    return out


def replace_units(f: Formula, val: dict, _memo: dict = None) -> Formula:
    """f with each unit in val replaced by a formula, simplified on the way
    up.  Units not in val are kept.  Shared nodes are rewritten once."""

    if _memo is None:
        _memo = {}
    hit = _memo.get(id(f))
    if hit is not None:
        return hit[1]
    if isinstance(f, (Top, Bottom)):
        out = f
    elif isinstance(f, Not):
        out = neg(replace_units(f.arg, val, _memo))
    elif isinstance(f, And):
        out = conj(replace_units(g, val, _memo) for g in f.args)
    elif isinstance(f, Or):
        out = disj(replace_units(g, val, _memo) for g in f.args)
    else:
        out = val.get(f, f)
    _memo[id(f)] = (f, out)
    return out


def atom_involves_main(a: Atom) -> bool:
    """Whether the atom mentions the main sort at all: a main-sort relation,
    or an auxiliary atom over a canonical-map image of a main term."""

    return bool(atom_lin_terms(a))


def unit_involves_main(u: Formula) -> bool:
    if isinstance(u, Atom):
        return atom_involves_main(u)
    return any(atom_involves_main(a) for a in atoms_of(u))


def dnf_pairwise_disjoint(f: Formula, cap: int = 16):
    """Truth-table disjunctive normal form: one clause per satisfying row,
    each clause listing every unit with a polarity.  Any two clauses disagree
    on some unit, so they are pairwise inconsistent."""

    units = boolean_units(f)
    if len(units) > cap:
        raise ResourceLimit("%d boolean units in one formula" % len(units))
    clauses = []
    for row in product((True, False), repeat=len(units)):
        val = {u: (TRUE if b else FALSE) for u, b in zip(units, row)}
        res = replace_units(f, val)
        if isinstance(res, Top):
            clauses.append(list(zip(units, row)))
        elif not isinstance(res, Bottom):
            raise AssertionError("skeleton did not fully evaluate")
    return clauses


def dnf_disjoint_tree(f: Formula, cap: int = 4096):
    """Pairwise-disjoint disjunctive normal form by decision-tree splitting.

    Units are assigned in a fixed order and a clause is emitted as soon as
    the rest of the formula is decided, so clauses list only the units up to
    the decision point.  Two distinct clauses still disagree with opposite
    polarity on the unit where their branches split.
    """

    units = boolean_units(f)
    # Canonicalize: every occurrence equal to a listed unit becomes that
    # exact object, so liveness below can go by identity.
    f = replace_units(f, {u: u for u in units})
    clauses = []
    # explicit stack: the unit list can be long and recursion depth tracks it
    stack = [(f, 0, [])]
    while stack:
        g, i, lits = stack.pop()
        if isinstance(g, Bottom):
            continue
        if isinstance(g, Top):
            clauses.append(lits)
            if len(clauses) > cap:
                raise ResourceLimit("disjoint clause cap exceeded")
            continue
        live = {id(x) for x in boolean_units(g)}
        while i < len(units) and id(units[i]) not in live:
            i += 1
        if i >= len(units):
            raise AssertionError("skeleton did not fully evaluate")
        u = units[i]
        for pol in (False, True):
            h = replace_units(g, {u: TRUE if pol else FALSE})
            stack.append((h, i + 1, lits + [(u, pol)]))
    return clauses


def hoist_main_units(f: Formula, cap: int = 10, _memo: dict = None) -> Formula:
    """Shannon-expand main-sort atoms out of auxiliary quantifier blocks.

    After canonical-map extraction, a main-sort atom sitting under an
    auxiliary quantifier cannot mention the bound variable, so the block
    equals a case split over the truth values of those atoms, each case
    keeping a purely auxiliary block.  Auxiliary sorts are never empty, so
    a block whose body collapses to a constant is that constant.
    """

    if _memo is None:
        _memo = {}
    hit = _memo.get(id(f))
    if hit is not None:
        return hit[1]

    def save(out):
        _memo[id(f)] = (f, out)
        return out

    if isinstance(f, (Atom, Top, Bottom)):
        return save(f)
    if isinstance(f, Not):
        return save(neg(hoist_main_units(f.arg, cap, _memo)))
    if isinstance(f, And):
        return save(conj(hoist_main_units(g, cap, _memo) for g in f.args))
    if isinstance(f, Or):
        return save(disj(hoist_main_units(g, cap, _memo) for g in f.args))
    body = hoist_main_units(f.body, cap, _memo)
    if f.sort.is_main:
        return save(type(f)(f.var, f.sort, body))
    units = [u for u in boolean_units(body) if unit_involves_main(u)]
    if not units:
        return save(type(f)(f.var, f.sort, body))
    for u in units:
        if f.var in free_vars(u):
            raise ValueError(
                "main-sort atom depends on an auxiliary bound variable; "
                "outside the supported fragment")
    if len(units) > cap:
        raise ResourceLimit("%d main-sort atoms under one auxiliary "
                            "quantifier" % len(units))
    cases = []
    for row in product((True, False), repeat=len(units)):
        val = {u: (TRUE if b else FALSE) for u, b in zip(units, row)}
        reduced = replace_units(body, val)
        blk = (reduced if isinstance(reduced, (Top, Bottom))
               else type(f)(f.var, f.sort, reduced))
        lits = [u if b else neg(u) for u, b in zip(units, row)]
        cases.append(conj(lits + [blk]))
    return save(disj(cases))


# ---------------------------------------------------------------------------
# Family union form

@dataclass(frozen=True)
class FUClause:
    theta: tuple  # ((name, Sort), ...)
    xi: Formula
    psi: tuple  # ((Atom, bool), ...)

    def matrix(self) -> Formula:
        return conj([self.xi] + [a if pol else Not(a) for a, pol in self.psi])

    def to_formula(self) -> Formula:
        out = self.matrix()
        for name, sort in reversed(self.theta):
            out = Exists(name, sort, out)
        return out


@dataclass(frozen=True)
class FamilyUnionForm:
    clauses: tuple  # (FUClause, ...)

    def to_formula(self) -> Formula:
        return disj(cl.to_formula() for cl in self.clauses)

    def well_formed(self) -> list[str]:
        """Structural problems, empty when the form is valid."""

        problems = []
        for i, cl in enumerate(self.clauses):
            names = [n for n, _ in cl.theta]
            if len(set(names)) != len(names):
                problems.append("clause %d: duplicate parameter names" % i)
            for s in (s for _, s in cl.theta):
                if not isinstance(s, Sort) or s.is_main:
                    problems.append("clause %d: non-aux parameter sort" % i)
            if has_main_quantifier(cl.xi):
                problems.append("clause %d: main quantifier in guard" % i)
            for a in atoms_of(cl.xi):
                if atom_involves_main(a):
                    problems.append(
                        "clause %d: guard atom touches the main sort" % i)
                    break
            for v, s in free_vars(cl.xi).items():
                if s is not None and s.is_main:
                    problems.append(
                        "clause %d: main variable %s in guard" % (i, v))
            for a, pol in cl.psi:
                if not isinstance(a, Atom):
                    problems.append("clause %d: non-atomic literal" % i)
                elif has_main_quantifier(a):
                    problems.append("clause %d: quantified literal" % i)
        return problems


def inline_defined_params(f: Formula) -> Formula:
    """Remove auxiliary existentials whose variable is pinned to a term.

    An  E v. (v <= t and t <= v and rest)  block, with v not occurring in t,
    is equivalent to rest with t for v.  Family union forms produced here
    always pin their parameters this way, so this pass makes their negations
    acceptable input again.
    """

    from .syntax import aux_free_vars, substitute

    if isinstance(f, (Atom, Top, Bottom)):
        return f
    if isinstance(f, Not):
        return neg(inline_defined_params(f.arg))
    if isinstance(f, And):
        return conj(inline_defined_params(g) for g in f.args)
    if isinstance(f, Or):
        return disj(inline_defined_params(g) for g in f.args)
    if isinstance(f, Forall):
        return Forall(f.var, f.sort, inline_defined_params(f.body))
    body = inline_defined_params(f.body)
    if f.sort.is_main:
        return Exists(f.var, f.sort, body)
    parts = list(body.args) if isinstance(body, And) else [body]

    def is_var(t):
        return isinstance(t, AuxVar) and t.name == f.var

    pin = None
    for a in parts:
        if (isinstance(a, AuxLe) and is_var(a.lhs)
                and f.var not in aux_free_vars(a.rhs)
                and any(isinstance(b, AuxLe) and is_var(b.rhs)
                        and b.lhs == a.rhs for b in parts)):
            pin = a.rhs
            break
    if pin is None:
        return Exists(f.var, f.sort, body)
    rest = [a for a in parts
            if not (isinstance(a, AuxLe)
                    and ((is_var(a.lhs) and a.rhs == pin)
                         or (is_var(a.rhs) and a.lhs == pin)))]
    return substitute(conj(rest), {f.var: pin})


def _can_subterms(t: AuxTerm, out: list):
    if isinstance(t, (Sc, Se)):
        if t not in out:
            out.append(t)
    elif isinstance(t, SuccPlus):
        _can_subterms(t.arg, out)


def _map_can(t: AuxTerm, mapping: dict) -> AuxTerm:
    if t in mapping:
        return mapping[t]
    if isinstance(t, SuccPlus):
        return SuccPlus(_map_can(t.arg, mapping))
    return t


def _rewrite_aux_terms(f: Formula, mapping: dict,
                       _memo: dict = None) -> Formula:
    if _memo is None:
        _memo = {}
    hit = _memo.get(id(f))
    if hit is not None:
        return hit[1]
    if isinstance(f, Atom):
        out = _patch_atom(f, mapping)
    elif isinstance(f, (Top, Bottom)):
        out = f
    elif isinstance(f, Not):
        out = neg(_rewrite_aux_terms(f.arg, mapping, _memo))
    elif isinstance(f, And):
        out = conj(_rewrite_aux_terms(g, mapping, _memo) for g in f.args)
    elif isinstance(f, Or):
        out = disj(_rewrite_aux_terms(g, mapping, _memo) for g in f.args)
    elif isinstance(f, Exists):
        out = Exists(f.var, f.sort, _rewrite_aux_terms(f.body, mapping,
                                                       _memo))
    elif isinstance(f, Forall):
        out = Forall(f.var, f.sort, _rewrite_aux_terms(f.body, mapping,
                                                       _memo))
    else:
        raise TypeError("not a formula: %r" % (f,))
    _memo[id(f)] = (f, out)
    return out


def _patch_atom(a: Atom, mapping: dict) -> Atom:
    from .syntax import (
        AuxAsymp, DimFloor, DimSucc, Discr, AuxLe as _Le, MainRel as _MR,
    )

    if isinstance(a, _MR):
        return _MR(a.op, a.lhs, a.rhs, a.k, _map_can(a.aux, mapping), a.m,
                   a.mp)
    if isinstance(a, _Le):
        return _Le(_map_can(a.lhs, mapping), _map_can(a.rhs, mapping))
    if isinstance(a, AuxAsymp):
        return AuxAsymp(_map_can(a.lhs, mapping), _map_can(a.rhs, mapping))
    if isinstance(a, Discr):
        return Discr(_map_can(a.aux, mapping))
    if isinstance(a, DimSucc):
        return DimSucc(a.p, a.s, a.ell, _map_can(a.aux, mapping))
    if isinstance(a, DimFloor):
        return DimFloor(a.p, a.s, a.ell, _map_can(a.aux, mapping))
    return a


def all_names(f: Formula):
    names = set(free_vars(f))
    for g in subformulas(f):
        if isinstance(g, (Exists, Forall)):
            names.add(g.var)
    return names


def extract_can_terms(f: Formula, fresh: Fresh):
    """Replace every canonical-map image of a main term by a fresh variable.

    Returns (rewritten formula, [(name, sort, original term), ...]).
    """

    can_terms: list[AuxTerm] = []
    for a in atoms_of(f):
        for t in atom_aux_terms(a):
            _can_subterms(t, can_terms)
    mapping = {}
    extracted = []
    for t in can_terms:
        name = fresh()
        sort = aux_term_sort(t)
        mapping[t] = AuxVar(name, sort)
        extracted.append((name, sort, t))
    g = _rewrite_aux_terms(f, mapping) if mapping else f
    return g, extracted


def to_family_union(f: Formula, cap_atoms: int = 14) -> FamilyUnionForm:
    """Rewrite a formula without main-sort quantifiers into family union
    form.

    Canonical-map images of main terms are pulled out into fresh parameters
    theta; every clause carries the defining equations, which is what keeps
    distinct parameter instantiations inconsistent.  The main-sort atoms are
    then case-split by a full truth table.
    """

    if has_main_quantifier(f):
        raise ValueError("input contains a main-sort quantifier")
    f = inline_defined_params(f)

    # extract canonical-map images into parameters
    fresh = Fresh("th", all_names(f))
    g, extracted = extract_can_terms(f, fresh)
    g = hoist_main_units(g)
    theta = []
    defs = []
    for name, sort, t in extracted:
        var = AuxVar(name, sort)
        theta.append((name, sort))
        defs.append((AuxLe(var, t), True))
        defs.append((AuxLe(t, var), True))

    units = boolean_units(g)
    main_units = []
    for u in units:
        if not unit_involves_main(u):
            continue
        if not isinstance(u, Atom):
            raise ValueError(
                "main-sort atom under an auxiliary quantifier is outside "
                "the supported fragment")
        main_units.append(u)

    theta = tuple(theta)
    if not main_units:
        return FamilyUnionForm((FUClause(theta, g, tuple(defs)),))
    if len(main_units) > cap_atoms:
        raise ResourceLimit(
            "%d main-sort atoms in one matrix" % len(main_units))

    clauses = []
    for row in product((True, False), repeat=len(main_units)):
        val = {u: (TRUE if b else FALSE) for u, b in zip(main_units, row)}
        xi = replace_units(g, val)
        if isinstance(xi, Bottom):
            continue
        psi = tuple(zip(main_units, row)) + tuple(defs)
        clauses.append(FUClause(theta, xi, psi))
    return FamilyUnionForm(tuple(clauses))
