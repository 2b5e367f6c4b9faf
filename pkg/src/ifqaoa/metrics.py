"""Solution-quality and runtime figures of merit, and the per-depth run record."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .diagonals import DiagonalTables, Method, qpe_register_size, slack_encoding

__all__ = [
    "ResourceKind",
    "ResourceModel",
    "RunRecord",
    "TrivialInstanceError",
    "problem_probabilities",
    "raar",
    "p_star",
    "feasibility_rate",
    "clops_cost_layer",
    "gate_count",
    "clops_total",
    "expected_layers",
    "tts",
    "tts_approx",
    "tts_star",
    "qtg_matched_depth",
    "resource_model",
    "QTG_MATCHED_DEPTHS",
]


class TrivialInstanceError(ValueError):
    pass


def problem_probabilities(probs: np.ndarray, n: int) -> np.ndarray:
    """Marginalize any high-order slack bits away, leaving a length ``2**n`` vector."""
    probs = np.asarray(probs, dtype=float)
    size = 1 << n
    if probs.size == size:
        return probs
    return probs.reshape(-1, size).sum(axis=0)


def _optimum(train: np.ndarray, feasible: np.ndarray) -> float:
    if not feasible.any():
        raise ValueError("no feasible state")
    return float(train[feasible].min())


def raar(probs, train_cost, feasible) -> float:
    """Random-adjusted approximation ratio: 0 for uniform sampling, 1 for always optimal."""
    train_cost = np.asarray(train_cost, dtype=float)
    feasible = np.asarray(feasible, dtype=bool)
    n = train_cost.size.bit_length() - 1
    probs = problem_probabilities(probs, n)
    rand = float(train_cost.mean())
    best = _optimum(train_cost, feasible)
    denom = rand - best
    if not abs(denom) > 1e-15 * max(1.0, abs(best)):
        raise TrivialInstanceError("trivial instance: optimum equals the random average")
    return (rand - float(np.dot(probs, train_cost))) / denom


def p_star(probs, train_cost, feasible) -> float:
    """Total probability of every feasible assignment attaining the optimum."""
    train_cost = np.asarray(train_cost, dtype=float)
    feasible = np.asarray(feasible, dtype=bool)
    n = train_cost.size.bit_length() - 1
    probs = problem_probabilities(probs, n)
    best = _optimum(train_cost, feasible)
    tol = 1e-9 * max(1.0, abs(best))
    hit = feasible & (np.abs(train_cost - best) <= tol)
    return float(probs[hit].sum())


def feasibility_rate(probs, feasible) -> float:
    feasible = np.asarray(feasible, dtype=bool)
    n = feasible.size.bit_length() - 1
    return float(problem_probabilities(probs, n)[feasible].sum())


# -- circuit resources ----------------------------------------------------------


class ResourceKind(str, enum.Enum):
    QUBO_PENALTY = "qubo"
    INDICATOR_FAST = "if-fast"
    INDICATOR_SEQUENTIAL = "if-sequential"


def _ceil_log2(v: int) -> int:
    return 0 if v <= 1 else (int(v) - 1).bit_length()


def clops_cost_layer(n: int, m: int, kind: ResourceKind | str) -> int:
    """Circuit layers of one cost operator under all-to-all connectivity."""
    kind = ResourceKind(kind)
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    if kind is ResourceKind.QUBO_PENALTY:
        # complete graph on n + m vertices is (n+m-1)-edge-colourable when n + m is even
        return n + m - 1 if (n + m) % 2 == 0 else n + m
    qpe = 2 * max(n, m) + 2 * (2 * m - 1)
    if kind is ResourceKind.INDICATOR_FAST:
        return qpe + 2 * _ceil_log2(n) + 1
    return qpe + n


def gate_count(n: int, m: int, kind: ResourceKind | str) -> int:
    kind = ResourceKind(kind)
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    if kind is ResourceKind.QUBO_PENALTY:
        q = n + m
        return q * (q - 1) // 2 + n
    return 2 * (n * m + m * (m + 1) // 2) + n


@dataclass(frozen=True)
class ResourceModel:
    n: int
    m: int
    kind: ResourceKind
    l_init: int = 1
    l_mixer: int = 1

    @property
    def l_cost(self) -> int:
        return clops_cost_layer(self.n, self.m, self.kind)

    @property
    def l_layer(self) -> int:
        return self.l_cost + self.l_mixer

    @property
    def gates(self) -> int:
        return gate_count(self.n, self.m, self.kind)


def clops_total(resource: ResourceModel, p: int) -> int:
    if p < 1:
        raise ValueError("p must be >= 1")
    return resource.l_init + p * resource.l_layer


def resource_model(tables: DiagonalTables) -> ResourceModel:
    """Resource model the benchmark charges to a method.

    Penalty methods are charged the slack QUBO circuit (the virtual penalty
    borrows it); indicator methods the fast indicator variant with a register
    sized to the constraint's range, or the configured register in approximate mode.
    """
    n = tables.n
    if tables.method in (Method.VIRTUAL_PENALTY, Method.SLACK_PENALTY):
        g = tables.g[0]
        capacity = max(1, int(math.floor(float(g[0]))))
        m = tables.slack.m if tables.slack is not None else slack_encoding(capacity).m
        return ResourceModel(n, m, ResourceKind.QUBO_PENALTY)
    if tables.method is Method.IF_APPROX:
        return ResourceModel(n, int(tables.qpe_bits), ResourceKind.INDICATOR_FAST)
    m = max(qpe_register_size(float(g.min()), float(g.max())) for g in tables.g)
    return ResourceModel(n, m, ResourceKind.INDICATOR_FAST)


# -- time to solution -------------------------------------------------------------


def _shots(success: float, threshold: float) -> float:
    if not success > 0:
        return math.inf
    if success >= 1:
        return 1.0
    return float(math.ceil(math.log(1.0 - threshold) / math.log1p(-success)))


def tts(p_star: float, clops: float, success_threshold: float = 0.99) -> float:
    """Layer operations until an optimum is seen with the given confidence."""
    return clops * _shots(p_star, success_threshold)


def expected_layers(q_list, resource: ResourceModel, p: int) -> float:
    """Expected layer count when a failed post-selection restarts the circuit."""
    q = np.asarray(q_list[: p - 1], dtype=float)
    if q.size < p - 1:
        raise ValueError("q_list shorter than p - 1")
    return resource.l_init + resource.l_layer * (1.0 + float(np.cumprod(q).sum()))


def tts_approx(q_list, p_star: float, resource: ResourceModel, p: int, success_threshold: float = 0.99) -> float:
    q_total = float(np.prod(q_list[:p]))
    return expected_layers(q_list, resource, p) * _shots(p_star * q_total, success_threshold)


def tts_star(records):
    """``(depth, TTS)`` of the fastest depth; ties go to the smaller depth."""
    records = list(records)
    if not records:
        raise ValueError("no records")
    best = min(records, key=lambda r: (r.tts, r.p))
    return best.p, best.tts


QTG_MATCHED_DEPTHS = {
    5: 15, 6: 20, 7: 22, 8: 28, 9: 28, 10: 40, 11: 41, 12: 45, 13: 52,
    14: 46, 15: 50, 16: 61, 17: 57, 18: 70, 19: 64, 20: 64, 21: 69, 22: 69,
}


def qtg_matched_depth(n: int) -> int:
    """Indicator QAOA depth whose layer count matches a depth-one tree-generator QAOA."""
    try:
        return QTG_MATCHED_DEPTHS[n]
    except KeyError:
        raise ValueError(f"no matched depth for n={n}; table covers 5..22") from None


# -- records ------------------------------------------------------------------------


def _encode(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


def _decode(x):
    if isinstance(x, str) and x in ("inf", "-inf", "nan"):
        return float(x)
    return x


@dataclass
class RunRecord:
    instance_id: str
    method: str
    p: int
    n: int
    betas: list
    gammas: list
    objective: float
    raar: float
    p_star: float
    q_list: list
    q_total: float
    clops: int
    tts: float
    gates: int
    qpe_bits: int | None = None
    feasibility: float | None = None
    iterations: int = 0
    trace: list = field(default_factory=list)
    stage: str = "sequential"
    status: str = "ok"

    @property
    def key(self) -> tuple:
        return (self.instance_id, self.method, self.p, self.qpe_bits, self.stage)

    def to_dict(self) -> dict:
        return {k: _encode(v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(**{k: _decode(v) for k, v in d.items()})
