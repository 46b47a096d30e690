"""Boolean skeleton passes and family union form."""

import random

import pytest

from conftest import FIXTURE_MODELS, aux_assignment, main_assignment, rand_term
from oagqe.evaluate import evaluate
from oagqe.models import IntComp, LexModel
from oagqe.normal import (
    FamilyUnionForm, FUClause, ResourceLimit, boolean_units,
    dnf_disjoint_tree, dnf_pairwise_disjoint, hoist_main_units,
    inline_defined_params, replace_units, to_family_union,
)
from oagqe.syntax import (
    FALSE, TRUE, AuxLe, AuxVar, Discr, Exists, Forall, LinTerm, MainRel, Not,
    PlainRel, SORT_G, Sc, SortMin, conj, disj, neg, sort_ac, substitute,
)

ZZ = LexModel((IntComp(), IntComp()))
BOT = SortMin(sort_ac(2))
zero = LinTerm.zero()


def atom(i):
    return PlainRel("lt", zero, LinTerm.var("y%d" % i))


def rand_skeleton(rng, depth):
    if depth == 0:
        return atom(rng.randint(1, 5))
    c = rng.randint(0, 2)
    if c == 0:
        return neg(rand_skeleton(rng, depth - 1))
    args = [rand_skeleton(rng, depth - 1) for _ in range(rng.randint(2, 3))]
    return conj(args) if c == 1 else disj(args)


def test_boolean_units_order_and_dedup():
    f = conj([disj([atom(2), atom(1)]), Not(atom(2)), atom(3)])
    assert boolean_units(f) == [atom(2), atom(1), atom(3)]
    # a quantified block is opaque: one unit, not its atoms
    q = Exists("x", SORT_G, MainRel("lt", zero, LinTerm.var("x"), 0, BOT))
    assert boolean_units(conj([q, atom(1)])) == [q, atom(1)]


def test_replace_units_folds_constants():
    f = conj([disj([atom(1), atom(2)]), atom(3)])
    assert replace_units(f, {atom(1): TRUE}) == atom(3)
    assert replace_units(f, {atom(1): FALSE, atom(2): FALSE}) is FALSE
    assert replace_units(f, {atom(3): TRUE}) == disj([atom(1), atom(2)])
    # unknown units stay in place
    assert replace_units(atom(4), {atom(1): TRUE}) == atom(4)


def _clause_truth(clause, val):
    return all(val[u] is b for u, b in clause)


def _skeleton_truth(f, val):
    res = replace_units(f, {u: (TRUE if b else FALSE)
                            for u, b in val.items()})
    assert res is TRUE or res is FALSE
    return res is TRUE


@pytest.mark.parametrize("dnf,kwargs", [
    (dnf_pairwise_disjoint, {"cap": 40}),
    (dnf_disjoint_tree, {}),
])
def test_dnf_cover_and_disjoint(dnf, kwargs):
    rng = random.Random(7)
    for _ in range(40):
        f = rand_skeleton(rng, rng.randint(1, 3))
        units = boolean_units(f)
        clauses = dnf(f, **kwargs)
        for _ in range(20):
            val = {u: rng.random() < 0.5 for u in units}
            sat = [cl for cl in clauses if _clause_truth(cl, val)]
            assert len(sat) <= 1, "two clauses satisfied at once"
            assert bool(sat) == _skeleton_truth(f, val)


def test_dnf_tree_emits_short_clauses():
    f = disj([atom(1), conj([atom(2), atom(3)])])
    clauses = dnf_disjoint_tree(f)
    # the first branch decides the formula after a single unit
    assert min(len(cl) for cl in clauses) == 1
    with pytest.raises(ResourceLimit):
        dnf_disjoint_tree(disj([atom(i) for i in range(1, 6)]), cap=2)
    with pytest.raises(ResourceLimit):
        dnf_pairwise_disjoint(conj([atom(i) for i in range(1, 6)]), cap=4)


def test_hoist_main_units_equivalence(rng):
    a = AuxVar("a", sort_ac(2))
    plain = PlainRel("lt", zero, LinTerm.var("y"))
    f = Exists("a", sort_ac(2), conj([Discr(a), plain]))
    g = hoist_main_units(f)
    # no main atom is left under the auxiliary quantifier
    from oagqe.normal import atom_involves_main
    from oagqe.syntax import atoms_of
    for u in boolean_units(g):
        if isinstance(u, Exists):
            assert not any(atom_involves_main(p) for p in atoms_of(u.body))
    for v in (-2, 0, 3):
        asg = {"y": ZZ.element([v, 0])}
        assert evaluate(ZZ, asg, f) == evaluate(ZZ, asg, g)


def test_hoist_rejects_bound_dependence():
    a = AuxVar("a", sort_ac(2))
    f = Exists("a", sort_ac(2),
               MainRel("lt", zero, LinTerm.var("y"), 0, a))
    with pytest.raises(ValueError):
        hoist_main_units(f)


def test_hoist_cap():
    plains = [PlainRel("lt", zero, LinTerm.var("y%d" % i))
              for i in range(12)]
    a = AuxVar("a", sort_ac(2))
    f = Exists("a", sort_ac(2), conj([Discr(a)] + plains))
    with pytest.raises(ResourceLimit):
        hoist_main_units(f, cap=4)


def test_well_formed_flags_problems():
    a = AuxVar("a", sort_ac(2))
    guard_main = FUClause((), PlainRel("lt", zero, LinTerm.var("y")), ())
    assert FamilyUnionForm((guard_main,)).well_formed()
    dup = FUClause((("a", sort_ac(2)), ("a", sort_ac(3))), TRUE, ())
    assert FamilyUnionForm((dup,)).well_formed()
    mainp = FUClause((("a", SORT_G),), TRUE, ())
    assert FamilyUnionForm((mainp,)).well_formed()
    qlit = FUClause((), TRUE, ((Exists("x", SORT_G, PlainRel(
        "lt", zero, LinTerm.var("x"))), True),))
    assert FamilyUnionForm((qlit,)).well_formed()
    ok = FUClause((("a", sort_ac(2)),), Discr(a),
                  ((MainRel("lt", zero, LinTerm.var("y"), 0, a), True),))
    assert FamilyUnionForm((ok,)).well_formed() == []


def test_inline_defined_params():
    v = AuxVar("v", sort_ac(2))
    t = Sc(2, 1, LinTerm.var("y"))
    body = conj([AuxLe(v, t), AuxLe(t, v), Discr(v)])
    f = Exists("v", sort_ac(2), body)
    assert inline_defined_params(f) == Discr(t)
    # without the two-sided pin the quantifier stays
    g = Exists("v", sort_ac(2), conj([AuxLe(v, t), Discr(v)]))
    assert isinstance(inline_defined_params(g), Exists)


def test_to_family_union_rejects_main_quantifier():
    f = Exists("x", SORT_G, PlainRel("lt", zero, LinTerm.var("x")))
    with pytest.raises(ValueError):
        to_family_union(f)


def test_to_family_union_cap():
    plains = [PlainRel("cong", LinTerm.var("y"), zero, m=m)
              for m in range(2, 9)]
    with pytest.raises(ResourceLimit):
        to_family_union(conj(plains), cap_atoms=3)


def test_to_family_union_equivalence(rng):
    from conftest import rand_bool, rand_syn_atom
    for trial in range(30):
        f = rand_bool(rng, rng.randint(1, 2), rand_syn_atom)
        try:
            fuf = to_family_union(f)
        except ResourceLimit:
            continue
        assert fuf.well_formed() == []
        model = FIXTURE_MODELS[trial % len(FIXTURE_MODELS)]
        for _ in range(4):
            asg = main_assignment(model, rng, ["x", "y", "z"])
            want = evaluate(model, asg, f)
            vals = [evaluate(model, asg, cl.to_formula())
                    for cl in fuf.clauses]
            got = (True if any(v is True for v in vals)
                   else (False if all(v is False for v in vals) else None))
            if want is not None and got is not None:
                assert want == got, (f, model, asg)
            # instantiated clauses must stay mutually exclusive
            assert sum(1 for v in vals if v is True) <= 1
