import itertools
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taguchi.design_space import (
    DesignSpace,
    Factor,
    grid_size,
    indices_of,
    min_runs,
    realize,
    space_from_levels,
)
from taguchi.errors import DesignError


def test_grid_size_cifar_space(cifar_space):
    assert grid_size(cifar_space) == 1024


def test_grid_size_degenerate():
    assert grid_size(space_from_levels([[7]])) == 1


def test_grid_size_mixed():
    sp = space_from_levels([range(2), range(3), range(5)])
    # oracle: enumerate the grid
    assert grid_size(sp) == len(list(itertools.product(range(2), range(3), range(5)))) == 30


def test_grid_size_overflow_names_factor():
    sp = space_from_levels([range(2**20)] * 4, names=["a", "b", "c", "d"])
    with pytest.raises(OverflowError, match="'d'"):
        grid_size(sp)


def test_min_runs():
    assert min_runs(space_from_levels([range(4)] * 5)) == 16
    assert min_runs(space_from_levels([[1]])) == 1
    assert min_runs(space_from_levels([range(2), range(3), range(4)])) == 7


def test_realize_cifar_optimum(cifar_space):
    got = realize(cifar_space, (4, 4, 4, 4, 2))
    assert got == {"lr": 0.1, "epochs": 150, "sampling": 1.0, "backbone": 110, "batch": 64}


def test_realize_first_levels(cifar_space):
    got = realize(cifar_space, (1, 1, 1, 1, 1))
    assert list(got.values()) == [0.01, 60, 0.382, 20, 32]


def test_realize_single():
    sp = DesignSpace([Factor("f", ["only"], kind="categorical")])
    assert realize(sp, [1]) == {"f": "only"}


@pytest.mark.parametrize("bad", [0, 5, -1, 2.0, True])
def test_realize_out_of_range(cifar_space, bad):
    with pytest.raises(DesignError, match="lr"):
        realize(cifar_space, (bad, 1, 1, 1, 1))


def test_realize_wrong_length(cifar_space):
    with pytest.raises(DesignError):
        realize(cifar_space, (1, 1))


def test_round_trip_all_points(cifar_space):
    for idx in itertools.product(*(range(1, n + 1) for n in cifar_space.shape)):
        assert indices_of(cifar_space, realize(cifar_space, idx)) == idx


def test_factor_validation():
    with pytest.raises(DesignError):
        Factor("x", [])
    with pytest.raises(DesignError, match="duplicate"):
        Factor("x", [1, 2, 1])
    with pytest.raises(DesignError):
        Factor("x", [1, "a"])  # numeric kind
    with pytest.raises(DesignError):
        Factor("x", [1], kind="ordinal")
    Factor("backbone", ["resnet20", "resnet56"], kind="categorical")


def test_duplicate_factor_names():
    with pytest.raises(DesignError, match="duplicate"):
        DesignSpace([Factor("a", [1]), Factor("a", [2])])


def test_json_round_trip_keeps_values(cifar_space, tmp_path):
    p = tmp_path / "s.json"
    cifar_space.dump(p)
    again = DesignSpace.load(p)
    assert again == cifar_space
    raw = json.loads(p.read_text())
    assert raw["factors"][2]["levels"] == [0.382, 0.618, 0.8, 1.0]
    assert raw["factors"][3]["kind"] == "categorical"


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=1, max_size=6))
def test_min_runs_below_grid_size(shape):
    sp = space_from_levels([range(n) for n in shape])
    assert min_runs(sp) <= grid_size(sp)
    # strict once two or more factors vary; shape (1, 2) gives 2 == 2
    if sum(n >= 2 for n in shape) >= 2:
        assert min_runs(sp) < grid_size(sp)
    assert grid_size(sp) == math.prod(shape)
