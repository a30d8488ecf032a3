import itertools
from collections import Counter

import numpy as np
import pytest

from taguchi.design_space import DesignSpace, Factor, space_from_levels
from taguchi.errors import DesignError
from taguchi.orthogonal_array import (
    ExperimentPlan,
    OrthogonalArray,
    auto_array,
    catalog,
    catalog_lookup,
    gf_construct,
    plan,
    rao_hamming,
    validate,
)

L16_PUBLISHED = [
    [1, 4, 4, 4, 4], [2, 3, 4, 1, 2], [4, 1, 4, 2, 3], [1, 1, 1, 1, 1],
    [2, 4, 3, 2, 1], [2, 1, 2, 3, 4], [4, 3, 2, 4, 1], [4, 2, 3, 1, 4],
    [3, 2, 4, 3, 1], [3, 1, 3, 4, 2], [1, 3, 3, 3, 3], [4, 4, 1, 3, 2],
    [3, 3, 1, 2, 4], [1, 2, 2, 2, 2], [2, 2, 1, 4, 3], [3, 4, 2, 1, 3],
]


def pair_oracle(matrix):
    """Independent strength-2 check by counting row tuples with Counter."""
    m = np.asarray(matrix)
    R, K = m.shape
    L = int(m.max())
    for i, j in itertools.combinations(range(K), 2):
        c = Counter(zip(m[:, i], m[:, j]))
        if len(c) != L * L or set(c.values()) != {R // (L * L)}:
            return False
    return all(set(Counter(m[:, i]).values()) == {R // L} for i in range(K))


def test_catalog_l16_verbatim():
    a = catalog_lookup(5, 4)
    assert a.name == "L16(4^5)"
    assert a.matrix.tolist() == L16_PUBLISHED


def test_l16_columns_1_2_each_pair_once():
    hist = validate(OrthogonalArray(L16_PUBLISHED, 4)).pair_counts[(0, 1)]
    assert hist.tolist() == [[1] * 4] * 4
    assert Counter((r[0], r[1]) for r in L16_PUBLISHED) == {p: 1 for p in itertools.product(range(1, 5), repeat=2)}


def test_single_factor_lookup():
    a = catalog_lookup(1, 2)
    assert a.matrix.tolist() == [[1], [2]]
    assert validate(a).passed


def test_l9_lookup():
    a = catalog_lookup(4, 3)
    assert (a.runs, a.columns) == (9, 4)
    assert validate(a).passed and pair_oracle(a.matrix)


def test_lookup_drops_right_columns():
    a = catalog_lookup(3, 2)
    assert a.name == "L4(2^3)"
    b = catalog_lookup(5, 2)
    assert b.matrix.tolist() == [row[:5] for row in catalog()["L8(2^7)"].matrix.tolist()]


def test_lookup_missing_suggests_gf():
    with pytest.raises(DesignError, match="gf_construct"):
        catalog_lookup(3, 7)
    with pytest.raises(DesignError):
        catalog_lookup(3, 6)


@pytest.mark.parametrize("name", list(catalog()))
def test_catalog_entries_are_orthogonal(name):
    a = catalog()[name]
    assert validate(a).passed
    assert pair_oracle(a.matrix)


def test_gf_2_3_each_pair_once():
    a = gf_construct(2, 3)
    assert a.runs == 4
    for i, j in itertools.combinations(range(3), 2):
        assert sorted(zip(a.matrix[:, i], a.matrix[:, j])) == list(itertools.product([1, 2], repeat=2))


def test_gf_4_5_shape_like_l16():
    a = gf_construct(4, 5)
    assert (a.runs, a.columns, a.levels) == (16, 5, 4)
    assert validate(a).passed


def test_gf_3_1_balance():
    a = gf_construct(3, 1)
    assert a.runs == 9 and sorted(Counter(a.matrix[:, 0]).values()) == [3, 3, 3]


@pytest.mark.parametrize("L", [2, 3, 4, 5, 7, 8, 9])
def test_gf_all_column_counts(L):
    for k in range(1, L + 2):
        a = gf_construct(L, k)
        assert validate(a).passed
        assert pair_oracle(a.matrix)


def test_gf_errors():
    with pytest.raises(DesignError, match="prime-power"):
        gf_construct(6, 2)
    with pytest.raises(DesignError, match="at most L\\+1"):
        gf_construct(4, 6)


@pytest.mark.parametrize("q,n", [(2, 3), (2, 4), (3, 3), (4, 3)])
def test_rao_hamming(q, n):
    a = rao_hamming(q, n)
    assert a.runs == q**n and a.columns == (q**n - 1) // (q - 1)
    assert validate(a).passed


def test_validate_identical_columns_fail():
    m = np.array(L16_PUBLISHED)
    m[:, 1] = m[:, 0]
    rep = validate(OrthogonalArray(m, 4))
    assert not rep.passed
    assert (0, 1) in rep.offending_pairs
    assert rep.pair_counts[(0, 1)][0, 0] == 4


def test_validate_unbalanced():
    rep = validate(OrthogonalArray([[1, 1], [1, 2], [2, 1]], 2))
    assert not rep.passed and rep.unbalanced_columns


def test_array_is_immutable():
    a = catalog_lookup(5, 4)
    with pytest.raises(ValueError):
        a.matrix[0, 0] = 2


def test_plan_rows_match_fixture(cifar_plan):
    assert cifar_plan.rows[0].assignment == {"lr": 0.01, "epochs": 150, "sampling": 1.0, "backbone": 110, "batch": 256}
    assert cifar_plan.rows[3].assignment == {"lr": 0.01, "epochs": 60, "sampling": 0.382, "backbone": 20, "batch": 32}
    assert [r.run_id for r in cifar_plan.rows] == list(range(16))


def test_plan_single_factor():
    sp = space_from_levels([[0.1, 0.2]], ["lr"])
    p = plan(sp, catalog_lookup(1, 2))
    assert [r.assignment for r in p.rows] == [{"lr": 0.1}, {"lr": 0.2}]


def test_plan_dimension_errors(cifar_space):
    with pytest.raises(DesignError, match="columns"):
        plan(cifar_space, catalog_lookup(4, 4))
    small = DesignSpace([Factor("a", [1, 2, 3]), Factor("b", [1, 2, 3, 4])])
    with pytest.raises(DesignError, match="'a'"):
        plan(small, catalog_lookup(2, 4))


def test_plan_is_pure(cifar_space):
    a = plan(cifar_space, catalog_lookup(5, 4))
    b = plan(cifar_space, catalog_lookup(5, 4))
    assert a.to_csv() == b.to_csv()
    assert a.to_dict() == b.to_dict()


def test_plan_export(cifar_plan, tmp_path):
    csv_path, json_path = cifar_plan.write(tmp_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "run_id,lr,epochs,sampling,backbone,batch"
    assert lines[1] == "0,0.01,150,1.0,110,256"
    again = ExperimentPlan.load(json_path)
    assert again.to_csv() == cifar_plan.to_csv()
    assert again.to_dict()["runs"][0]["indices"] == [1, 4, 4, 4, 4]


@pytest.mark.parametrize("shape", [(2, 2, 2), (3, 3, 3, 3), (4, 4, 4, 4, 4), (5,) * 6, (3,) * 5, (7, 7)])
def test_auto_array_runs_at_least_min_runs(shape):
    from taguchi.design_space import min_runs

    sp = space_from_levels([range(n) for n in shape])
    p = plan(sp, auto_array(sp))
    assert p.runs >= min_runs(sp)
    assert validate(p.array).passed
