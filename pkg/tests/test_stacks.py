import random

import pytest

from catspec.errors import PreconditionError
from catspec.fincat import analyze_functor, validate_category
from catspec.generators import random_pseudofunctor
from catspec.grothendieck import CO
from catspec.sites import is_sheaf, matching_families, maximal_sieve
from catspec.spaces import all_functions_sheaf, constant_presheaf_on, discrete, sierpinski
from catspec.stacks import descent_category, descent_data, discrete_pseudofunctor, restriction, stack_flags


@pytest.mark.parametrize("X", [sierpinski(), discrete("ab")], ids=["S", "D2"])
def test_discrete_descent_data_are_matching_families(X):
    J = X.topology()
    for P in (all_functions_sheaf(X), constant_presheaf_on(X)):
        F = discrete_pseudofunctor(P)
        for b in X.category().objects:
            for S in J.sieves[b]:
                assert len(descent_data(S, F)) == len(matching_families(P, S))


def test_restriction_to_maximal_sieve_is_equivalence():
    X = sierpinski()
    F = discrete_pseudofunctor(all_functions_sheaf(X))
    C = X.category()
    for b in C.objects:
        S = maximal_sieve(C, b)
        D = descent_category(S, F)
        assert validate_category(D).ok
        assert analyze_functor(restriction(S, F, b, D), quasi_inverse=False).equivalence


def test_stack_flags_follow_sheaf_condition():
    X = discrete("ab")
    J = X.topology()
    good = discrete_pseudofunctor(all_functions_sheaf(X))
    assert stack_flags(good, J)["stack"]
    P = constant_presheaf_on(X)
    flags = stack_flags(discrete_pseudofunctor(P), J)
    assert not flags["stack"] and not is_sheaf(P, J).ok
    assert flags["witness"]["object"]


def test_descent_needs_contravariance():
    F = random_pseudofunctor(random.Random(0), CO, max_base=2, max_value=2)
    b = F.base.objects[0]
    with pytest.raises(PreconditionError):
        descent_data(maximal_sieve(F.base, b), F)
