"""Brute-forced diagonal tables over the computational basis.

Basis index ``x`` encodes variable ``i`` in bit ``i`` (little endian).  For the
slack method the problem bits occupy the low ``n`` bits and the slack bits the
high ``m`` bits, so ``index = x + (y << n)``.
"""

from __future__ import annotations

import enum
import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .instances import ConstrainedProblem

__all__ = [
    "Method",
    "DiagonalTables",
    "SlackEncoding",
    "PenaltyWarning",
    "MAX_QUBITS",
    "brute_force_linear",
    "indicator_cost",
    "feasibility_mask",
    "virtual_penalty_cost",
    "constant_penalty_cost",
    "slack_encoding",
    "slack_values",
    "slack_penalty_cost",
    "auto_penalty",
    "auto_constant_penalty",
    "normalize",
    "qpe_register_size",
    "build_tables",
    "dump_table",
    "load_table",
]

MAX_QUBITS = 26
PENALTY_FLOOR = 1e-9


class Method(str, enum.Enum):
    IF_EXACT = "if-exact"
    IF_APPROX = "if-approx"
    VIRTUAL_PENALTY = "virtual-penalty"
    SLACK_PENALTY = "slack-penalty"
    CONSTANT_PENALTY = "constant-penalty"

    @property
    def is_indicator(self) -> bool:
        return self in (Method.IF_EXACT, Method.IF_APPROX)


class PenaltyWarning(UserWarning):
    pass


def _check_size(n: int, max_qubits: int = MAX_QUBITS) -> None:
    if n < 0 or n > max_qubits:
        raise ValueError(f"size overflow: {n} qubits exceeds the limit of {max_qubits}")


def brute_force_linear(coeffs, offset=0.0, n: int | None = None, max_qubits: int = MAX_QUBITS):
    """Evaluate ``offset + coeffs @ x`` for every basis index ``x`` in O(2**n) additions.

    The table is grown by doubling: after handling variable ``i`` the first
    ``2**(i+1)`` entries are final.  Integer inputs stay integer.
    """
    coeffs = np.asarray(coeffs)
    if n is None:
        n = len(coeffs)
    if len(coeffs) != n:
        raise ValueError(f"expected {n} coefficients, got {len(coeffs)}")
    _check_size(n, max_qubits)
    dtype = np.result_type(coeffs.dtype if n else np.asarray(offset).dtype, np.asarray(offset).dtype)
    out = np.empty(1 << n, dtype=dtype)
    out[0] = offset
    for i in range(n):
        half = 1 << i
        np.add(out[:half], coeffs[i], out=out[half : 2 * half])
    return out


def indicator_cost(f: np.ndarray, g_list: Sequence[np.ndarray], epsilon: float = 0.0) -> np.ndarray:
    """``f * prod_i [g_i - epsilon >= 0]``; a zero constraint value counts as satisfied."""
    if not 0.0 <= epsilon < 1.0:
        raise ValueError("epsilon must lie in [0, 1)")
    return np.where(feasibility_mask(g_list, len(f), epsilon), f, 0.0).astype(float)


def feasibility_mask(g_list: Sequence[np.ndarray], size: int | None = None, epsilon: float = 0.0):
    if not g_list:
        raise ValueError("at least one constraint table is required")
    if size is None:
        size = len(g_list[0])
    mask = np.ones(size, dtype=bool)
    for g in g_list:
        if len(g) != size:
            raise ValueError(f"length mismatch: {len(g)} != {size}")
        mask &= (g - epsilon) >= 0
    return mask


def virtual_penalty_cost(f: np.ndarray, g: np.ndarray, lam: float) -> np.ndarray:
    if not lam > 0:
        raise ValueError("penalty coefficient must be positive")
    if len(f) != len(g):
        raise ValueError("length mismatch")
    g = np.asarray(g, dtype=float)
    return np.where(g < 0, f + lam * g * g, f)


def constant_penalty_cost(f: np.ndarray, g_list: Sequence[np.ndarray], lams) -> np.ndarray:
    lams = np.broadcast_to(np.asarray(lams, dtype=float), (len(g_list),))
    if np.any(lams <= 0):
        raise ValueError("penalty coefficients must be positive")
    out = np.array(f, dtype=float)
    for g, lam in zip(g_list, lams):
        if len(g) != len(f):
            raise ValueError("length mismatch")
        out[g < 0] += lam
    return out


@dataclass(frozen=True)
class SlackEncoding:
    m: int
    coeffs: tuple

    @property
    def capacity(self) -> int:
        return sum(self.coeffs)


def slack_encoding(W) -> SlackEncoding:
    """Logarithmic slack encoding of the interval ``[0, W]``.

    Uses ``m = ceil(log2(W + 1))`` bits with coefficients ``1, 2, ..., 2**(m-2)``
    and a final ``W - 2**(m-1) + 1``.  For ``W`` not a power of two this is the
    ``ceil(log2 W)`` register; powers of two need the extra bit to stay gap-free.
    """
    if isinstance(W, float):
        if not W.is_integer():
            raise ValueError(f"slack encoding needs an integer capacity, got {W}")
        W = int(W)
    if not isinstance(W, (int, np.integer)):
        raise ValueError(f"slack encoding needs an integer capacity, got {W!r}")
    W = int(W)
    if W < 1:
        raise ValueError("capacity must be >= 1")
    m = W.bit_length()
    coeffs = tuple(1 << j for j in range(m - 1)) + (W - (1 << (m - 1)) + 1,)
    return SlackEncoding(m=m, coeffs=coeffs)


def slack_values(enc: SlackEncoding) -> np.ndarray:
    return brute_force_linear(np.asarray(enc.coeffs, dtype=np.int64), 0, enc.m)


def slack_penalty_cost(f, g, enc: SlackEncoding, lam: float, max_qubits: int = MAX_QUBITS):
    """``f(x) + lam * (g(x) - s(y))**2`` over the joint register, problem bits low."""
    if not lam > 0:
        raise ValueError("penalty coefficient must be positive")
    n = int(len(f)).bit_length() - 1
    _check_size(n + enc.m, max_qubits)
    s = slack_values(enc).astype(float)
    diff = np.asarray(g, dtype=float)[None, :] - s[:, None]
    return (np.asarray(f, dtype=float)[None, :] + lam * diff * diff).ravel()


def auto_penalty(f: np.ndarray, g: np.ndarray, feasible: np.ndarray | None = None) -> float:
    """Quadratic penalty that lifts the best infeasible state onto the second-best feasible one.

    Returns ``max_{x infeasible} (f2 - f[x]) / g[x]**2`` floored at 1e-9, where
    ``f2`` is the lowest feasible value after removing one optimal assignment.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if feasible is None:
        feasible = g >= 0
    feas_f = f[feasible]
    if feas_f.size < 2:
        raise ValueError("auto_penalty needs at least two feasible states")
    f2 = np.partition(feas_f, 1)[1]
    bad = ~feasible
    if not bad.any():
        warnings.warn("no infeasible states; returning the penalty floor", PenaltyWarning)
        return PENALTY_FLOOR
    gb = g[bad]
    lam = float(np.max((f2 - f[bad]) / (gb * gb)))
    return max(lam, PENALTY_FLOOR)


def auto_constant_penalty(f, g_list, feasible=None) -> float:
    """Constant violation penalty with the same best-infeasible equals second-best-feasible rule.

    A single coefficient is shared by all constraints; it is chosen for
    states violating at least one constraint.
    """
    f = np.asarray(f, dtype=float)
    if feasible is None:
        feasible = feasibility_mask(g_list, len(f))
    feas_f = f[feasible]
    if feas_f.size < 2:
        raise ValueError("auto_constant_penalty needs at least two feasible states")
    f2 = np.partition(feas_f, 1)[1]
    bad = ~feasible
    if not bad.any():
        warnings.warn("no infeasible states; returning the penalty floor", PenaltyWarning)
        return PENALTY_FLOOR
    return max(float(np.max(f2 - f[bad])), PENALTY_FLOOR)


def normalize(phase_cost: np.ndarray, n: int):
    """Scale so that ``max - min == 2 n``; returns ``(scaled, scale)``."""
    span = float(np.max(phase_cost) - np.min(phase_cost))
    if not span > 0:
        raise ValueError("degenerate objective: constant diagonal cannot be normalized")
    scale = 2.0 * n / span
    return phase_cost * scale, scale


def _ceil_log2(v: int) -> int:
    v = int(v)
    return 0 if v <= 1 else (v - 1).bit_length()


def qpe_register_size(g_min, g_max) -> int:
    """Two's-complement register width resolving every integer in ``[g_min, g_max]``."""
    g_min = math.floor(g_min)
    g_max = math.ceil(g_max)
    neg = _ceil_log2(-g_min) if g_min < 0 else 0
    return max(neg, _ceil_log2(max(g_max, 0) + 1)) + 1


@dataclass
class DiagonalTables:
    method: Method
    n: int
    n_total: int
    f: np.ndarray
    g: list
    train_cost: np.ndarray
    phase_cost: np.ndarray
    feasible: np.ndarray
    scale: float
    lam: float | None = None
    slack: SlackEncoding | None = None
    theta_vals: np.ndarray | None = None
    qpe_bits: int | None = None
    epsilon: float = 0.0
    g_int: list | None = None
    extra: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return 1 << self.n_total

    @property
    def approximate(self) -> bool:
        return self.method is Method.IF_APPROX

    def problem_train_cost(self) -> np.ndarray:
        """Training cost restricted to the problem register (slack bits dropped)."""
        return self.train_cost[: 1 << self.n]

    def problem_feasible(self) -> np.ndarray:
        return self.feasible[: 1 << self.n]


def build_tables(
    problem: ConstrainedProblem,
    method: Method | str,
    *,
    epsilon: float = 0.5,
    qpe_bits: int | None = None,
    lam: float | None = None,
    supersample: int = 3,
    normalized: bool = True,
    max_qubits: int = MAX_QUBITS,
) -> DiagonalTables:
    """Brute-force every diagonal a run of ``method`` needs and normalize it.

    The training cost is always the exact indicator cost; ``epsilon`` and
    ``qpe_bits`` only shape the approximate oracle's sign-function lookup.
    """
    method = Method(method)
    n = problem.n
    _check_size(n, max_qubits)
    f = brute_force_linear(np.asarray(problem.objective, dtype=float), float(problem.offset), n)
    g_list, g_int = [], None
    if problem.integral:
        g_int = []
        for a, b in problem.constraints:
            gi = brute_force_linear(-np.asarray(a, dtype=np.int64), int(b), n)
            g_int.append(gi)
            g_list.append(gi.astype(float))
    else:
        for a, b in problem.constraints:
            g_list.append(brute_force_linear(-np.asarray(a, dtype=float), float(b), n))
    feasible = feasibility_mask(g_list, 1 << n)
    train = indicator_cost(f, g_list, 0.0)

    n_total = n
    slack = None
    theta_vals = None
    if method is Method.IF_EXACT:
        phase, reference = train, train
    elif method is Method.IF_APPROX:
        from .theta import build_theta_table, theta_lookup

        if len(g_list) != 1:
            raise ValueError("the approximate indicator supports a single constraint")
        if qpe_bits is None:
            raise ValueError("if-approx requires qpe_bits")
        table = build_theta_table(qpe_bits, supersample)
        theta_vals = theta_lookup(table, g_list[0] - epsilon)
        phase, reference = f, train
    elif method is Method.VIRTUAL_PENALTY:
        if len(g_list) != 1:
            raise ValueError("the virtual penalty supports a single constraint")
        if lam is None:
            lam = auto_penalty(f, g_list[0], feasible)
        phase = virtual_penalty_cost(f, g_list[0], lam)
        reference = phase
    elif method is Method.CONSTANT_PENALTY:
        if lam is None:
            lam = auto_constant_penalty(f, g_list, feasible)
        phase = constant_penalty_cost(f, g_list, lam)
        reference = phase
    elif method is Method.SLACK_PENALTY:
        if len(problem.constraints) != 1:
            raise ValueError("the slack penalty supports a single constraint")
        slack = slack_encoding(problem.constraints[0][1])
        n_total = n + slack.m
        _check_size(n_total, max_qubits)
        if lam is None:
            lam = auto_penalty(f, g_list[0], feasible)
        phase = slack_penalty_cost(f, g_list[0], slack, lam, max_qubits)
        reference = phase
        reps = 1 << slack.m
        train = np.tile(train, reps)
        feasible = np.tile(feasible, reps)
    else:  # pragma: no cover
        raise ValueError(method)

    scale = 1.0
    if normalized:
        _, scale = normalize(reference, n_total)
    return DiagonalTables(
        method=method,
        n=n,
        n_total=n_total,
        f=f,
        g=g_list,
        train_cost=train * scale,
        phase_cost=np.asarray(phase, dtype=float) * scale,
        feasible=feasible,
        scale=scale,
        lam=lam,
        slack=slack,
        theta_vals=theta_vals,
        qpe_bits=qpe_bits if method is Method.IF_APPROX else None,
        epsilon=epsilon if method is Method.IF_APPROX else 0.0,
        g_int=g_int,
    )


# -- debug dumps --------------------------------------------------------------

_MAGIC = b"IFQTBL01"
_HEADER = struct.Struct("<8sII")


def dump_table(path: str | Path, values: np.ndarray, n_total: int, kind: int = 0) -> None:
    """Write ``values`` as little-endian float64 after a 16-byte header."""
    values = np.asarray(values, dtype="<f8")
    if values.size != 1 << n_total:
        raise ValueError("table length does not match n_total")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, n_total, kind))
        fh.write(values.tobytes())


def load_table(path: str | Path):
    data = Path(path).read_bytes()
    magic, n_total, kind = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise ValueError("not a table dump")
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if values.size != 1 << n_total:
        raise ValueError("truncated table dump")
    return values.copy(), n_total, kind
