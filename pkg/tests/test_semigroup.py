import random

import pytest
from conftest import fixture_path, golden, semigroup
from checks import green_problems

from setautomata.harness import random_transformation_submonoid
from setautomata.semigroup import (IncomparableIdempotents, LinearBand, NonIdempotent, NotAMonoid,
                                   SemigroupError, build_L_extension, check_height_claims,
                                   check_L_extension, direct_product, from_cayley_table,
                                   full_transformation_monoid, green, idempotents, image, is_aperiodic,
                                   is_band, is_in_DA, is_linear_band, load_morphism, non_linear_witness)

NAMES = ["u1", "u1sq", "n2", "n3", "z2", "ab_band"]


def test_tables_validate():
    u1 = semigroup("u1")
    assert u1.is_monoid and u1.name(u1.mul(1, 0)) == "0"
    n2 = semigroup("n2")
    assert n2.name(n2.mul(n2.index("x1"), n2.index("x2"))) == "0"
    with pytest.raises(SemigroupError):
        from_cayley_table(["a", "b"], [[0, 1], [0, 0]])
    with pytest.raises(SemigroupError):
        from_cayley_table(["a"], [[3]])


def test_morphism_images():
    h = load_morphism(fixture_path("formulas", "u1_z.json"))
    assert image(h, "izd") == "0"
    assert image(h, "") == "1"
    assert image(h, "ii") == "1"


@pytest.mark.parametrize("name", NAMES)
def test_classification_matches_golden(name):
    M = semigroup(name)
    facts = golden("semigroups")[name]
    assert is_band(M) == facts["band"]
    assert is_linear_band(M) == facts["linear_band"]
    assert is_in_DA(M) == facts["in_DA"]
    assert is_aperiodic(M) == facts["aperiodic"]
    assert sorted(M.name(e) for e in idempotents(M)) == facts["idempotents"]
    g = green(M)
    assert {k: len(getattr(g, k)) for k in "RLJH"} == facts["classes"]


def test_witnesses():
    assert non_linear_witness(semigroup("u1")) == LinearBand()
    assert non_linear_witness(semigroup("ab_band")) == LinearBand()
    assert non_linear_witness(semigroup("n2")) == NonIdempotent("x1")
    assert non_linear_witness(semigroup("u1sq")) == IncomparableIdempotents("r", "s")
    assert non_linear_witness(semigroup("n2")).describe() == "no: non-idempotent x1"


def test_direct_product_of_u1_is_not_linear():
    u1 = semigroup("u1")
    P = direct_product(u1, u1)
    assert is_band(P) and not is_linear_band(P)


def test_linear_band_needs_monoid():
    S = from_cayley_table(["a", "b"], [[0, 0], [1, 1]])
    assert S.identity is None
    with pytest.raises(NotAMonoid):
        non_linear_witness(S)


def test_height_order_on_u1():
    M = semigroup("u1")
    ext = build_L_extension(M)
    zero, one = M.index("0"), M.index("1")
    assert ext.strictly_below(zero, one)
    assert (ext.height(zero), ext.height(one)) == (1, 2)
    trivial = from_cayley_table(["1"], [[0]])
    assert build_L_extension(trivial).heights == (1,)


def test_height_order_on_ab_band():
    M = semigroup("ab_band")
    ext = build_L_extension(M)
    assert check_L_extension(ext) == []
    assert check_height_claims(M, ext) == []
    # L-classes are singletons here, so heights order every L-comparable pair
    g = green(M)
    for x in range(len(M)):
        for y in range(len(M)):
            if x != y and g.l_le[x, y]:
                assert ext.height(x) < ext.height(y)


@pytest.mark.parametrize("name", NAMES)
def test_green_facts_on_fixtures(name):
    assert green_problems(semigroup(name)) == []


def test_green_facts_on_t2():
    assert green_problems(full_transformation_monoid(2)) == []


def test_random_submonoids():
    rng = random.Random(11)
    for _ in range(60):
        M = random_transformation_submonoid(rng)
        assert green_problems(M) == []
        if is_linear_band(M):
            assert is_band(M) and is_in_DA(M)
            ext = build_L_extension(M)
            assert check_L_extension(ext) == []
            assert check_height_claims(M, ext) == []
