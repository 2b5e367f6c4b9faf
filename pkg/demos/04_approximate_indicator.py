"""Approximate indicator on a real-valued instance.

Non-integer constraint values cannot be resolved exactly; the circuit then
fails post-selection with some probability per layer.  More ancilla qubits
give a sharper step and a higher survival probability.

Run: python3 demos/04_approximate_indicator.py
"""

from ifqaoa.diagonals import Method, build_tables
from ifqaoa.engine import QaoaParams, evolve
from ifqaoa.instances import generate_real, to_problem
from ifqaoa.optimize import DepthSchedule, optimize_sequential

problem = to_problem(generate_real(8, seed=11))
schedule = DepthSchedule(depths=(1, 2, 4, 8), max_iters=60)

ladder = optimize_sequential(build_tables(problem, Method.IF_APPROX, qpe_bits=8), schedule)
params = QaoaParams(ladder[-1].betas, ladder[-1].gammas)
print(f"optimized with M=8 to p={params.p}: RAAR {ladder[-1].raar:.3f}, P* {ladder[-1].p_star:.3f}")

# Replay the same schedule with other register sizes.
for M in (3, 4, 6, 8, 12):
    state = evolve(build_tables(problem, Method.IF_APPROX, qpe_bits=M), params)
    qs = " ".join(f"{q:.3f}" for q in state.layer_success)
    print(f"M={M:>2}: q_total {state.q_total:.4f}   per layer {qs}")
