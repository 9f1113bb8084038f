"""From status data to a tree model: grouping, structure, exact queries.

Simulation status rows are binary node indicators.  Highly correlated
columns collapse into groups (one representative each), a maximum-mutual-
information spanning tree is fitted over the representatives, and exact
conditional queries run by message passing on that tree.
"""

import numpy as np

from muxim import (chow_liu_fit, mutual_information, pearson_matrix,
                   tree_condition, variable_grouping)

rng = np.random.default_rng(0)
m = 4000

# planted chain: x0 drives x1 drives x2; x3 echoes x1; x4 is always off
x0 = rng.random(m) < 0.5
x1 = np.where(x0, rng.random(m) < 0.9, rng.random(m) < 0.1)
x2 = np.where(x1, rng.random(m) < 0.85, rng.random(m) < 0.15)
x3 = x1 ^ (rng.random(m) < 0.02)
x4 = np.zeros(m, bool)
data = np.column_stack([x0, x1, x2, x3, x4]).astype(np.uint8)

corr = pearson_matrix(data)
print("corr(x1, x3) = %.3f   corr(x0, x2) = %.3f" %
      (corr[1, 3], corr[0, 2]))
print("constant column x4 is undefined:", np.isnan(corr[4, 0]))

part = variable_grouping(data, corr, xi=0.8)
print("\ngroups:", part.groups)
print("kinds:", part.kinds)
print("tree variables:", part.tree_variables(), "(x3 rides on x1's group)")

print("MI(x0, x1) = %.3f nats, MI(x0, x2) = %.3f nats" %
      (mutual_information(data, 0, 1), mutual_information(data, 0, 2)))

tree = chow_liu_fit(data, part, alpha=1.0)
print("\nfitted edges (parent -> child):", sorted(
    (p, c) for c, p in tree.parent.items()))
print("total mutual information: %.3f nats over"
      % tree.total_mi(), tree.pair_computations, "pair computations")

for evidence in ({}, {0: 1}, {0: 1, 2: 1}):
    p = tree_condition(tree, query=1, evidence=evidence)
    print(f"P(x1 = 1 | {evidence}) = {p:.3f}")
