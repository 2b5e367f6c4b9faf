"""Circuit cost and time to solution.

Gate and layer counts for penalty QUBO circuits against indicator circuits,
and how post-selection failures enter the expected runtime.

Run: python3 demos/05_resources_and_tts.py
"""

from ifqaoa.metrics import (
    ResourceKind,
    ResourceModel,
    clops_cost_layer,
    clops_total,
    gate_count,
    qtg_matched_depth,
    tts,
    tts_approx,
)

# 20 items: an 8-bit slack register against a 9-bit phase register.
print("gates  QUBO:", gate_count(20, 8, ResourceKind.QUBO_PENALTY), " IF:", gate_count(20, 9, ResourceKind.INDICATOR_FAST))
for kind, m in ((ResourceKind.QUBO_PENALTY, 8), (ResourceKind.INDICATOR_FAST, 9), (ResourceKind.INDICATOR_SEQUENTIAL, 9)):
    print(f"cost layers {kind.value:>13}: {clops_cost_layer(20, m, kind)}")

fast = ResourceModel(20, 9, ResourceKind.INDICATOR_FAST)
p = 16
layers = clops_total(fast, p)
print(f"\np={p}: {layers} layers per shot")
for ps in (0.5, 0.1, 0.01):
    print(f"  P*={ps:<5} TTS={tts(ps, layers):>9.0f}")

# A per-layer survival probability of 0.97 costs restarts and a lower joint success.
q = [0.97] * p
print(f"\nwith q_i=0.97: TTS={tts_approx(q, 0.1, fast, p):.0f} vs {tts(0.1, layers):.0f} without failures")
print(f"\ndepth matching a depth-one tree generator at N=16: p={qtg_matched_depth(16)}")
