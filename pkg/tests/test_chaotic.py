import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geosampling.chaotic import (Move, MoveParams, apply_to_layout, apply_to_table, fixed_move,
                                 free_move, interchange, plan_move, run_chaotic, transfer)
from geosampling.design import StripTable, design_of, entropy, first_order, sweep
from geosampling.exceptions import DomainError, InvariantError, PreconditionError
from geosampling.layout import layout_from_offsets, madow_layout, random_layout

from conftest import PI7

VARIANTS = [
    {"selection": sel, "anchor": anc, "unit_choice": uc}
    for sel in ("mass", "uniform") for anc in ("bottom", "random") for uc in ("symmetric", "literal")
]


def test_transfer_of_unit_four(middle7):
    moved = transfer(middle7, 4, 40, 10, 7)
    assert moved.bars[3].intervals == ((10, 17), (35, 40), (47, 100))
    masses = design_of(moved).masses
    assert masses[(1, 4, 5, 7)] == 7
    assert masses[(1, 5, 7)] == 13
    assert masses[(3, 7)] == 7
    assert masses[(3, 4, 7)] == 15
    assert first_order(moved) == list(PI7)


def test_interchange_units_one_and_five(madow7):
    moved = interchange(madow7, 1, 5, 10, 75, 10)
    assert design_of(moved).masses == {
        (1, 3, 6): 10, (4, 5, 7): 10, (1, 4, 7): 18, (2, 4, 7): 30,
        (3, 4, 7): 7, (1, 3, 7): 10, (3, 5, 7): 15,
    }


def test_interchange_needs_interchangeable_units(madow7):
    with pytest.raises(PreconditionError):
        interchange(madow7, 2, 5, 10, 75, 10)  # unit 2 is not in [10, 20)


def test_free_move_no_op_when_subset():
    # two strips: {1} below {1, 2}; literal rule from {1} to {1, 2} has nothing to move
    layout = layout_from_offsets([100, 50], [0, 50], 100)
    bounds, masks = sweep(layout)
    assert masks == [0b01, 0b11]

    class Fixed(random.Random):
        def randrange(self, *args):
            return 0

    assert plan_move(bounds, dict(zip(bounds, masks)), Fixed(), 0.5, False, "bottom", "uniform", "literal") is None


def test_no_op_when_substrip_rounds_to_zero():
    layout = layout_from_offsets([1, 1], [0, 1], 100)
    rng = random.Random(0)
    for _ in range(50):
        assert free_move(layout, rng, alpha=0.5) == layout


def test_fixed_move_no_op_on_identical_samples_and_unique_design():
    layout = madow_layout([50, 50], 100)
    rng = random.Random(1)
    for _ in range(100):
        layout = fixed_move(layout, rng, alpha=0.7)
        assert design_of(layout).masses == {(1,): 50, (2,): 50}
    table = StripTable([0, 50, 100], [1, 1], 100, (100,))
    assert plan_move(table.bounds, table.mask_at, rng, 1.0, True) is None


def test_zero_iterations_is_identity(madow7):
    result, trace = run_chaotic(madow7, MoveParams(iterations=0), mode="fixed")
    assert result == madow7
    assert len(trace.rows) == 1 and trace.applied == 0


def test_fixed_mode_rejects_variable_size_layout(middle7):
    with pytest.raises(DomainError):
        run_chaotic(middle7, MoveParams(iterations=5), mode="fixed")


def test_move_params_validation():
    for bad in ({"alpha": 0}, {"alpha": 1.5}, {"iterations": -1}, {"anchor": "top"},
                {"selection": "x"}, {"unit_choice": "y"}):
        with pytest.raises(DomainError):
            MoveParams(**bad)


def test_toggle_guards_against_illegal_moves(madow7):
    table = StripTable.from_layout(madow7)
    with pytest.raises(InvariantError):
        apply_to_table(table, Move(k=1, l=None, src=0, dst=40, v=5))


@pytest.mark.parametrize("variant", VARIANTS, ids=lambda v: "-".join(v.values()))
@pytest.mark.parametrize("fixed", [False, True], ids=["free", "fixed"])
def test_table_and_interval_paths_agree(variant, fixed):
    grid = 10**6
    layout = madow_layout([p * 10**4 for p in PI7], grid)
    table = StripTable.from_layout(layout)
    rng_a, rng_b = random.Random(7), random.Random(7)
    for _ in range(300):
        ba, ma = sweep(layout)
        assert (ba, ma) == (table.bounds, table.masks)
        move_a = plan_move(ba, dict(zip(ba, ma)), rng_a, 0.5, fixed, **variant)
        move_b = plan_move(table.bounds, table.mask_at, rng_b, 0.5, fixed, **variant)
        assert move_a == move_b
        if move_a is not None:
            layout = apply_to_layout(layout, move_a)
            apply_to_table(table, move_b)
    assert table.to_layout() == layout


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(VARIANTS), st.floats(0.05, 1.0))
def test_free_moves_conserve_fip_and_breakpoint_growth(seed, variant, alpha):
    grid = 10**6
    fip = [p * 10**4 for p in PI7]
    layout = random_layout(fip, random.Random(seed), grid)
    table = StripTable.from_layout(layout)
    rng = random.Random(seed + 1)
    total = sum(fip)
    for _ in range(200):
        before = len(table.bounds)
        move = plan_move(table.bounds, table.mask_at, rng, alpha, False, **variant)
        if move is not None:
            apply_to_table(table, move)
        assert len(table.bounds) - before <= 4
    result = table.to_layout()
    assert first_order(result) == fip
    assert sum(bar.measure for bar in result.bars) == total


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(VARIANTS), st.floats(0.05, 1.0))
def test_fixed_moves_keep_size(seed, variant, alpha):
    grid = 10**6
    fip = [p * 10**4 for p in PI7]
    layout = madow_layout(fip, grid)
    checked = []

    def check(m, table):
        assert {bin(mask).count("1") for mask in table.masks} == {3}
        checked.append(m)

    params = MoveParams(alpha=alpha, iterations=300, seed=seed, **variant)
    result, _ = run_chaotic(layout, params, mode="fixed", checkpoints=20, on_checkpoint=check)
    assert len(checked) == 21
    assert first_order(result) == fip


def test_run_is_deterministic(madow7):
    params = MoveParams(alpha=0.5, iterations=500, seed=42)
    a = run_chaotic(madow7, params, mode="fixed")
    b = run_chaotic(madow7, params, mode="fixed")
    assert a == b


def test_trace_rows_and_diagnostics():
    layout = random_layout([p * 10**4 for p in PI7], random.Random(0), 10**6)
    _, trace = run_chaotic(layout, MoveParams(iterations=1000, seed=3), mode="free", checkpoints=4)
    assert [r.move for r in trace.rows] == [0, 250, 500, 750, 1000]
    assert trace.applied + trace.skipped == 1000
    assert all(r.max_sip_gap is not None for r in trace.rows)


def test_entropy_rises_over_seeds():
    # one-sided sign test at p < .01 over 30 runs needs at least 22 increases
    grid = 10**6
    fip = [p * 10**4 for p in PI7]
    rises = 0
    for seed in range(30):
        start = random_layout(fip, random.Random(seed), grid)
        result, _ = run_chaotic(start, MoveParams(alpha=0.5, iterations=2000, seed=seed), "free", checkpoints=1)
        rises += entropy(design_of(result)) > entropy(design_of(start))
    tail = sum(math.comb(30, k) for k in range(rises, 31)) / 2**30
    assert rises >= 22 and tail < 0.01
