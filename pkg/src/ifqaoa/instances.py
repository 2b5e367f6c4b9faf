"""Knapsack instances, their generation, and the line-delimited JSON dataset format.

Random instances use numpy's PCG64 bit generator seeded through
``numpy.random.SeedSequence(seed)``.  Uniform variates are formed directly
from the raw 64-bit outputs as ``((r >> 11) + 0.5) / 2**53``, which lies in
the open interval (0, 1).  Draw order is fixed: ``n`` weights, then ``n``
values, then one capacity ratio.  Only the bit generator's raw stream is
used, so datasets do not depend on numpy's distribution code.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Kind",
    "KnapsackInstance",
    "ConstrainedProblem",
    "DatasetError",
    "uniform_stream",
    "generate_real",
    "to_integer",
    "to_problem",
    "save_dataset",
    "load_dataset",
    "dumps_instance",
    "parse_instance",
    "knapsack_from_lists",
]

_INV_2_53 = 1.0 / (1 << 53)


class Kind(str, enum.Enum):
    REAL = "real"
    INTEGER = "integer"


class DatasetError(ValueError):
    """A dataset record could not be parsed or violates an instance invariant."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class KnapsackInstance:
    weights: tuple
    values: tuple
    capacity: float | int
    kind: Kind = Kind.REAL
    seed: int | None = None
    id: str = ""

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def weight_ratio(self) -> float:
        return float(self.capacity) / float(sum(self.weights))

    def validate(self) -> None:
        """Raise :class:`DatasetError` naming the first violated invariant."""
        if self.n < 1:
            raise DatasetError("empty instance: n must be >= 1")
        if len(self.values) != self.n:
            raise DatasetError(
                f"length mismatch: {self.n} weights but {len(self.values)} values"
            )
        if any(w < 0 for w in self.weights) or any(v < 0 for v in self.values):
            raise DatasetError("negative weight or value")
        if not self.capacity > 0:
            raise DatasetError("non-positive capacity")
        if not self.capacity < sum(self.weights):
            raise DatasetError("non-binding constraint: capacity >= sum of weights")
        if self.kind is Kind.INTEGER:
            numbers = (*self.weights, *self.values, self.capacity)
            if not all(isinstance(a, int) for a in numbers):
                raise DatasetError("integer instance holds non-integer data")


@dataclass(frozen=True)
class ConstrainedProblem:
    """Minimise ``c @ x + c0`` over binary ``x`` subject to ``b - a @ x >= 0`` per constraint."""

    objective: np.ndarray
    offset: float = 0.0
    constraints: list = field(default_factory=list)
    integral: bool = False

    def __post_init__(self):
        if not self.constraints:
            raise ValueError("a constrained problem needs at least one constraint")
        for a, _ in self.constraints:
            if len(a) != len(self.objective):
                raise ValueError("constraint and objective dimensions differ")

    @property
    def n(self) -> int:
        return len(self.objective)

    def g_bounds(self, index: int = 0) -> tuple[float, float]:
        """Exact (min, max) of the linear constraint function over all assignments."""
        a, b = self.constraints[index]
        a = np.asarray(a, dtype=float)
        return b - np.maximum(a, 0).sum(), b - np.minimum(a, 0).sum()


def uniform_stream(seed: int, size: int) -> np.ndarray:
    bitgen = np.random.PCG64(np.random.SeedSequence(seed))
    raw = bitgen.random_raw(size)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53


def generate_real(n: int, seed: int, id: str | None = None) -> KnapsackInstance:
    """Draw weights and values from U(0, 1) and the capacity from U(0.2, 0.8) * sum(w)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    u = uniform_stream(seed, 2 * n + 1)
    weights = tuple(float(w) for w in u[:n])
    values = tuple(float(v) for v in u[n : 2 * n])
    ratio = 0.2 + 0.6 * float(u[2 * n])
    capacity = ratio * math.fsum(weights)
    return KnapsackInstance(
        weights=weights,
        values=values,
        capacity=capacity,
        kind=Kind.REAL,
        seed=seed,
        id=id if id is not None else f"real-n{n}-s{seed}",
    )


def _round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def to_integer(inst: KnapsackInstance, id: str | None = None) -> KnapsackInstance:
    """Rescale a real instance to capacity ``10 n`` and round weights and values.

    Both weights and values use the factor ``10 n / W``; results are clamped to >= 1.
    """
    if inst.kind is not Kind.REAL:
        raise ValueError("to_integer expects a real-valued instance")
    factor = 10.0 * inst.n / inst.capacity
    weights = tuple(max(1, _round_half_away(w * factor)) for w in inst.weights)
    values = tuple(max(1, _round_half_away(v * factor)) for v in inst.values)
    if id is None:
        id = inst.id.replace("real-", "int-", 1) if inst.id.startswith("real-") else f"{inst.id}-int"
    return KnapsackInstance(
        weights=weights,
        values=values,
        capacity=10 * inst.n,
        kind=Kind.INTEGER,
        seed=inst.seed,
        id=id,
    )


def to_problem(inst: KnapsackInstance) -> ConstrainedProblem:
    return ConstrainedProblem(
        objective=-np.asarray(inst.values, dtype=float),
        offset=0.0,
        constraints=[(np.asarray(inst.weights, dtype=float), float(inst.capacity))],
        integral=inst.kind is Kind.INTEGER,
    )


# -- dataset files ----------------------------------------------------------


def _num_to_str(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _str_to_num(s, kind: Kind):
    if not isinstance(s, str):
        raise DatasetError(f"expected a decimal string, got {type(s).__name__}")
    if kind is Kind.INTEGER:
        try:
            return int(s)
        except ValueError:
            raise DatasetError(f"integer instance holds non-integer data: {s!r}") from None
    try:
        value = float(s)
    except ValueError:
        raise DatasetError(f"not a number: {s!r}") from None
    if not math.isfinite(value):
        raise DatasetError(f"non-finite number: {s!r}")
    return value


def dumps_instance(inst: KnapsackInstance) -> str:
    record = {
        "id": inst.id,
        "kind": inst.kind.value,
        "n": inst.n,
        "weights": [_num_to_str(w) for w in inst.weights],
        "values": [_num_to_str(v) for v in inst.values],
        "capacity": _num_to_str(inst.capacity),
        "seed": inst.seed,
    }
    return json.dumps(record, separators=(",", ":"))


def parse_instance(text: str, line: int | None = None) -> KnapsackInstance:
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"invalid JSON ({exc.msg})", line) from None
    try:
        kind = Kind(record["kind"])
        inst = KnapsackInstance(
            weights=tuple(_str_to_num(w, kind) for w in record["weights"]),
            values=tuple(_str_to_num(v, kind) for v in record["values"]),
            capacity=_str_to_num(record["capacity"], kind),
            kind=kind,
            seed=record.get("seed"),
            id=str(record["id"]),
        )
        if int(record["n"]) != inst.n:
            raise DatasetError(f"declared n={record['n']} but {inst.n} weights")
        inst.validate()
    except DatasetError as exc:
        if exc.line is None and line is not None:
            raise DatasetError(str(exc), line) from None
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"malformed record ({exc!r})", line) from None
    return inst


def save_dataset(path: str | Path, instances: Iterable[KnapsackInstance]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for inst in instances:
            fh.write(dumps_instance(inst) + "\n")


def load_dataset(path: str | Path) -> list[KnapsackInstance]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, text in enumerate(fh, start=1):
            if text.strip():
                out.append(parse_instance(text, lineno))
    return out


def knapsack_from_lists(
    weights: Sequence, values: Sequence, capacity, id: str = "custom"
) -> KnapsackInstance:
    """Build and validate an instance by hand; integer data yields an integer instance."""
    integral = all(isinstance(a, (int, np.integer)) for a in (*weights, *values, capacity))
    if integral:
        weights, values, capacity = map(int, weights), map(int, values), int(capacity)
    inst = KnapsackInstance(
        weights=tuple(weights),
        values=tuple(values),
        capacity=capacity,
        kind=Kind.INTEGER if integral else Kind.REAL,
        id=id,
    )
    inst.validate()
    return inst
