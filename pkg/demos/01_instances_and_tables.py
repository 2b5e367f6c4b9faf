"""Knapsack instances and the diagonals every simulation starts from.

Run: python3 demos/01_instances_and_tables.py
"""

import numpy as np

from ifqaoa.diagonals import Method, auto_penalty, build_tables, slack_encoding
from ifqaoa.instances import generate_real, to_integer, to_problem

# A random real-valued instance and its integer rescaling (capacity 10 n).
real = generate_real(6, seed=42)
integer = to_integer(real)
print("real   :", np.round(real.weights, 3), "capacity", round(real.capacity, 3))
print("integer:", integer.weights, "capacity", integer.capacity)

# Every method turns the same problem into diagonal tables over all 2**n assignments.
problem = to_problem(integer)
exact = build_tables(problem, Method.IF_EXACT, normalized=False)
f, g = exact.f, exact.g[0]
print(f"\n{exact.feasible.sum()} of {exact.size} assignments are feasible")
best = np.argmin(exact.train_cost)
print(f"optimum x={best:06b} (bit i = item i, read right to left), value {-exact.train_cost[best]:g}")

# The indicator cost simply zeroes infeasible states; penalties lift them instead.
lam = auto_penalty(f, g)
print(f"\nauto-tuned quadratic penalty lambda = {lam:.4g}")
vp = build_tables(problem, Method.VIRTUAL_PENALTY, normalized=False)
worst = np.min(vp.phase_cost[~vp.feasible])
second = np.partition(f[exact.feasible], 1)[1]
print(f"best infeasible penalized cost {worst:g} == second-best feasible {second:g}")

# The slack formulation needs extra qubits to encode 0..W.
enc = slack_encoding(integer.capacity)
print(f"\nslack register for W={integer.capacity}: {enc.m} bits, coefficients {enc.coeffs}")
slack = build_tables(problem, Method.SLACK_PENALTY)
print(f"slack tables span {slack.n_total} qubits; phase range {np.ptp(slack.phase_cost):.1f} = 2 * n_total")
