"""Reference simulation of the literal indicator circuit with explicit ancilla registers.

The main register holds the problem variables; each constraint gets its own
phase-estimation register.  Amplitudes are stored with shape
``(2**M_1, ..., 2**M_k, 2**n)``.  QFTs are dense matrices on an ancilla axis.
Nothing in here reads the sign-function tables, so agreement with the fast
simulator is an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FullState",
    "MAX_ORACLE_QUBITS",
    "full_state",
    "qpe_forward",
    "qpe_inverse",
    "controlled_cost",
    "measure_ancilla_zero",
    "oracle_mixer",
    "oracle_layer",
    "full_layer_oracle",
]

MAX_ORACLE_QUBITS = 14


@dataclass
class FullState:
    n_main: int
    n_anc: tuple
    amplitudes: np.ndarray

    @property
    def main_size(self) -> int:
        return 1 << self.n_main


def full_state(main: np.ndarray, n_anc) -> FullState:
    """Embed a main-register state with every ancilla register in ``|0>``."""
    main = np.asarray(main, dtype=np.complex128)
    n_main = main.size.bit_length() - 1
    n_anc = tuple(int(m) for m in np.atleast_1d(n_anc))
    if n_main + sum(n_anc) > MAX_ORACLE_QUBITS:
        raise ValueError(f"oracle limited to {MAX_ORACLE_QUBITS} qubits")
    amps = np.zeros(tuple(1 << m for m in n_anc) + (main.size,), dtype=np.complex128)
    amps[(0,) * len(n_anc)] = main
    return FullState(n_main, n_anc, amps)


def _dft(M: int, inverse: bool) -> np.ndarray:
    K = 1 << M
    z = np.arange(K)
    sign = -1.0 if inverse else 1.0
    return np.exp(sign * 2j * np.pi * np.outer(z, z) / K) / np.sqrt(K)


def _hadamards(M: int) -> np.ndarray:
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
    out = np.ones((1, 1))
    for _ in range(M):
        out = np.kron(out, h)
    return out


def _on_axis(amps: np.ndarray, mat: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(mat, amps, axes=([1], [axis])), 0, axis)


def _phase_ladder(state: FullState, g_table, reg: int, sign: float) -> None:
    M = state.n_anc[reg]
    K = 1 << M
    k = np.arange(K)
    phases = np.exp(sign * 2j * np.pi * np.outer(k, np.asarray(g_table, dtype=float)) / K)
    shape = [1] * state.amplitudes.ndim
    shape[reg] = K
    shape[-1] = state.main_size
    state.amplitudes *= phases.reshape(shape)


def qpe_forward(state: FullState, g_table, reg: int = 0) -> None:
    """Write ``g(x)`` into ancilla register ``reg`` in two's complement.

    Hadamards, the controlled powers of ``exp(2 pi i H_g / 2**M)`` and an inverse QFT.
    """
    M = state.n_anc[reg]
    state.amplitudes = _on_axis(state.amplitudes, _hadamards(M), reg)
    _phase_ladder(state, g_table, reg, +1.0)
    state.amplitudes = _on_axis(state.amplitudes, _dft(M, inverse=True), reg)


def qpe_inverse(state: FullState, g_table, reg: int = 0) -> None:
    M = state.n_anc[reg]
    state.amplitudes = _on_axis(state.amplitudes, _dft(M, inverse=False), reg)
    _phase_ladder(state, g_table, reg, -1.0)
    state.amplitudes = _on_axis(state.amplitudes, _hadamards(M), reg)


def controlled_cost(state: FullState, f_table, gamma: float, regs=None) -> None:
    """Apply ``exp(-i gamma f(x))`` where every selected register's sign bit is 0."""
    if regs is None:
        regs = range(len(state.n_anc))
    mask = np.ones(state.amplitudes.shape[:-1], dtype=bool)
    for reg in regs:
        K = 1 << state.n_anc[reg]
        sign_clear = np.arange(K) < K // 2
        shape = [1] * mask.ndim
        shape[reg] = K
        mask = mask & sign_clear.reshape(shape)
    phase = np.exp(-1j * gamma * np.asarray(f_table, dtype=float))
    state.amplitudes = np.where(mask[..., None], state.amplitudes * phase, state.amplitudes)


def measure_ancilla_zero(state: FullState):
    """Post-select all ancillas on ``|0>``; return the normalized main state and probability."""
    branch = state.amplitudes[(0,) * len(state.n_anc)]
    prob = float(np.vdot(branch, branch).real)
    if prob < 1e-15:
        raise RuntimeError(f"post-selection probability {prob:.3e} too small")
    return branch / np.sqrt(prob), prob


def oracle_mixer(main: np.ndarray, beta: float) -> np.ndarray:
    """``prod_k RX_k(2 beta)`` through per-qubit tensor contractions."""
    n = main.size.bit_length() - 1
    rx = np.array([[np.cos(beta), -1j * np.sin(beta)], [-1j * np.sin(beta), np.cos(beta)]])
    psi = main.reshape((2,) * n)
    for axis in range(n):
        psi = np.moveaxis(np.tensordot(rx, psi, axes=([1], [axis])), 0, axis)
    return psi.reshape(-1)


def oracle_layer(main: np.ndarray, f_table, g_tables, n_anc, gamma: float):
    """One indicator cost layer; returns ``(post-selected main state, probability)``."""
    g_tables = [np.asarray(g) for g in g_tables]
    state = full_state(main, n_anc)
    for reg, g in enumerate(g_tables):
        qpe_forward(state, g, reg)
    controlled_cost(state, f_table, gamma)
    for reg in reversed(range(len(g_tables))):
        qpe_inverse(state, g_tables[reg], reg)
    return measure_ancilla_zero(state)


def full_layer_oracle(f_table, g_table, params, M):
    """Run the whole QAOA circuit with explicit registers.

    ``g_table`` may be one array or a list (one register per constraint, with
    ``M`` an int or matching list).  Returns ``(final main state, per-layer probabilities)``.
    """
    f_table = np.asarray(f_table, dtype=float)
    g_tables = [g_table] if np.ndim(g_table) == 1 else list(g_table)
    n_anc = tuple(np.broadcast_to(np.atleast_1d(M), (len(g_tables),)).tolist())
    size = f_table.size
    n = size.bit_length() - 1
    if n + sum(n_anc) > MAX_ORACLE_QUBITS:
        raise ValueError(f"oracle limited to {MAX_ORACLE_QUBITS} qubits")
    main = np.full(size, size**-0.5, dtype=np.complex128)
    probs = []
    for beta, gamma in zip(params.betas, params.gammas):
        main, prob = oracle_layer(main, f_table, g_tables, n_anc, gamma)
        probs.append(prob)
        main = oracle_mixer(main, beta)
    return main, probs
