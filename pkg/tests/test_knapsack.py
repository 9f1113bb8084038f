import itertools

import numpy as np
import pytest

from muxim.knapsack import BudgetAllocationTable, solve_mckp, verify_allocation
from muxim.seeding import ProfitCostTable, ProfitRow


def table_from_profits(profit_lists):
    rows = []
    for layer_profits in profit_lists:
        rows.append([ProfitRow(j, float(p), tuple(range(j)))
                     for j, p in enumerate(layer_profits)])
    return ProfitCostTable(rows)


def brute_force_value(table, budget):
    sizes = [len(r) for r in table.rows]
    best = float("-inf")
    for choice in itertools.product(*(range(s) for s in sizes)):
        if sum(choice) <= budget:
            best = max(best, sum(table.rows[i][j].profit
                                 for i, j in enumerate(choice)))
    return best


def test_single_class_picks_argmax_within_budget():
    table = table_from_profits([[0, 5, 6, 12]])
    alloc = solve_mckp(table, 2)
    assert alloc.rows[0].budget == 2
    assert alloc.total_profit == 6


def test_tie_resolution_prefers_lexicographic_budgets():
    table = table_from_profits([[0, 5, 6], [0, 4, 9]])
    alloc = solve_mckp(table, 2)
    # (0,2) and (1,1) both reach 9 at cost 2; lexicographic wins
    assert alloc.total_profit == 9
    assert [r.budget for r in alloc.rows] == [0, 2]


def test_all_zero_profits_allocate_nothing():
    table = table_from_profits([[0, 0, 0], [0, 0]])
    alloc = solve_mckp(table, 3)
    assert [r.budget for r in alloc.rows] == [0, 0]
    assert alloc.total_cost == 0


def test_negative_budget_rejected():
    table = table_from_profits([[0, 1]])
    with pytest.raises(ValueError):
        solve_mckp(table, -1)


def test_dp_matches_brute_force_on_random_tables(rng):
    for _ in range(60):
        k = int(rng.integers(1, 5))
        budget = int(rng.integers(0, 7))
        profits = []
        for _ in range(k):
            size = int(rng.integers(1, budget + 2))
            vals = np.round(rng.random(size) * 20, 3)
            vals[0] = 0.0
            profits.append(np.maximum.accumulate(vals).tolist())
        table = table_from_profits(profits)
        alloc = solve_mckp(table, budget)
        assert alloc.total_cost <= budget
        assert alloc.total_profit == pytest.approx(
            brute_force_value(table, budget), abs=1e-9)
        assert verify_allocation(alloc, table, budget)


def test_dp_value_monotone_in_budget(rng):
    table = table_from_profits([[0, 3, 5, 6], [0, 2, 8], [0, 1]])
    values = [solve_mckp(table, l).total_profit for l in range(6)]
    assert values == sorted(values)


def test_dp_dominates_single_layer_best():
    table = table_from_profits([[0, 3, 5], [0, 7], [0, 2, 2, 9]])
    budget = 3
    alloc = solve_mckp(table, budget)
    for i, rows in enumerate(table.rows):
        best_single = max(r.profit for r in rows if r.cost <= budget)
        assert alloc.total_profit >= best_single - 1e-12


def test_verify_rejects_infeasible_allocation():
    table = table_from_profits([[0, 5], [0, 4]])
    bad = BudgetAllocationTable(rows=[
        type(solve_mckp(table, 2).rows[0])(0, 1, 5.0),
        type(solve_mckp(table, 2).rows[0])(1, 1, 4.0),
    ])
    assert not verify_allocation(bad, table, 1)  # cost 2 > budget 1


def test_verify_budget_zero_only_accepts_all_zero():
    table = table_from_profits([[0, 5], [0, 4]])
    alloc = solve_mckp(table, 0)
    assert [r.budget for r in alloc.rows] == [0, 0]
    assert verify_allocation(alloc, table, 0)


def test_allocation_csv(tmp_path):
    table = table_from_profits([[0, 5], [0, 4]])
    alloc = solve_mckp(table, 2)
    path = tmp_path / "alloc.csv"
    alloc.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "layer,budget,profit"
    assert len(lines) == 3
