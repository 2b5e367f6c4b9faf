"""Statevector QAOA on precomputed diagonals.

Cost layers multiply the state pointwise by a cached diagonal.  In the
approximate indicator mode the layer is the non-unitary projection factor of
the post-selected phase-estimation oracle, followed by renormalization; the
success probability of every layer is recorded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diagonals import DiagonalTables

__all__ = [
    "QaoaState",
    "QaoaParams",
    "VanishingSuccessError",
    "MAX_QUBITS",
    "Q_ABORT",
    "init_state",
    "apply_phase",
    "apply_projection",
    "apply_mixer",
    "apply_x_sum",
    "evolve",
    "expectation",
    "probabilities",
    "value_and_gradient",
    "gradient",
]

MAX_QUBITS = 26
Q_ABORT = 1e-12


class VanishingSuccessError(RuntimeError):
    """The post-selection probability of a projective layer fell below ``Q_ABORT``."""

    def __init__(self, layer: int, q: float):
        self.layer = layer
        self.q = q
        super().__init__(f"vanishing success probability {q:.3e} in layer {layer}")


@dataclass
class QaoaParams:
    betas: np.ndarray
    gammas: np.ndarray

    def __post_init__(self):
        self.betas = np.asarray(self.betas, dtype=float).ravel()
        self.gammas = np.asarray(self.gammas, dtype=float).ravel()
        if self.betas.shape != self.gammas.shape:
            raise ValueError("betas and gammas must have equal length")
        if self.betas.size < 1:
            raise ValueError("at least one layer is required")

    @property
    def p(self) -> int:
        return self.betas.size

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.betas, self.gammas])

    @classmethod
    def from_vector(cls, v) -> "QaoaParams":
        v = np.asarray(v, dtype=float)
        p = v.size // 2
        return cls(v[:p], v[p:])


@dataclass
class QaoaState:
    n: int
    amplitudes: np.ndarray
    layer_success: list = field(default_factory=list)

    @property
    def q_total(self) -> float:
        return float(np.prod(self.layer_success)) if self.layer_success else 1.0

    def probabilities(self) -> np.ndarray:
        return probabilities(self.amplitudes)


def probabilities(amplitudes: np.ndarray) -> np.ndarray:
    return amplitudes.real**2 + amplitudes.imag**2


def init_state(n: int) -> QaoaState:
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"qubit count {n} outside [1, {MAX_QUBITS}]")
    size = 1 << n
    return QaoaState(n, np.full(size, size**-0.5, dtype=np.complex128))


def _check_len(state: QaoaState, table) -> None:
    if len(table) != state.amplitudes.size:
        raise ValueError(f"length mismatch: table {len(table)} vs state {state.amplitudes.size}")


def apply_phase(state: QaoaState, phase_cost: np.ndarray, gamma: float) -> None:
    _check_len(state, phase_cost)
    state.amplitudes *= np.exp(-1j * gamma * phase_cost)


def apply_projection(state: QaoaState, f_table: np.ndarray, theta_vals: np.ndarray, gamma: float) -> float:
    """Multiply by the projection factor, renormalize, and return the success probability."""
    _check_len(state, f_table)
    e = np.exp(-1j * gamma * f_table)
    state.amplitudes *= 0.5 * ((e + 1) + (e - 1) * theta_vals)
    q = float(np.sum(probabilities(state.amplitudes)))
    if q < Q_ABORT:
        raise VanishingSuccessError(len(state.layer_success) + 1, q)
    state.amplitudes *= 1.0 / np.sqrt(q)
    state.layer_success.append(q)
    return q


def _mix(amps: np.ndarray, n: int, beta: float) -> None:
    c = np.cos(beta)
    s = -1j * np.sin(beta)
    size = amps.size
    for k in range(n):
        view = amps.reshape(size >> (k + 1), 2, 1 << k)
        a0 = view[:, 0, :].copy()
        a1 = view[:, 1, :]
        view[:, 0, :] = c * a0 + s * a1
        view[:, 1, :] = s * a0 + c * a1


def apply_mixer(state: QaoaState, beta: float) -> None:
    """Apply ``prod_k RX_k(2 beta)`` in place."""
    _mix(state.amplitudes, state.n, beta)


def apply_x_sum(amps: np.ndarray, n: int) -> np.ndarray:
    """Return ``sum_k X_k |amps>``."""
    out = np.zeros_like(amps)
    size = amps.size
    for k in range(n):
        src = amps.reshape(size >> (k + 1), 2, 1 << k)
        dst = out.reshape(size >> (k + 1), 2, 1 << k)
        dst[:, 0, :] += src[:, 1, :]
        dst[:, 1, :] += src[:, 0, :]
    return out


def evolve(tables: DiagonalTables, params: QaoaParams) -> QaoaState:
    state = init_state(tables.n_total)
    approx = tables.approximate
    for beta, gamma in zip(params.betas, params.gammas):
        if approx:
            apply_projection(state, tables.phase_cost, tables.theta_vals, gamma)
        else:
            apply_phase(state, tables.phase_cost, gamma)
            state.layer_success.append(1.0)
        apply_mixer(state, beta)
    return state


def expectation(state: QaoaState, train_cost: np.ndarray) -> float:
    _check_len(state, train_cost)
    return float(np.dot(probabilities(state.amplitudes), train_cost))


def _vdot_im(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.vdot(a, b).imag)


def _grad_exact(tables: DiagonalTables, params: QaoaParams):
    state = evolve(tables, params)
    n = tables.n_total
    h = tables.train_cost
    phase = tables.phase_cost
    value = expectation(state, h)
    phi = state.amplitudes.copy()
    lam = h * phi
    p = params.p
    d_beta = np.empty(p)
    d_gamma = np.empty(p)
    for i in range(p - 1, -1, -1):
        # d/dbeta <phi|U^dag H U|phi> = 2 Im <lam| B |phi>
        d_beta[i] = 2.0 * _vdot_im(lam, apply_x_sum(phi, n))
        _mix(phi, n, -params.betas[i])
        _mix(lam, n, -params.betas[i])
        d_gamma[i] = 2.0 * _vdot_im(lam, phase * phi)
        undo = np.exp(1j * params.gammas[i] * phase)
        phi *= undo
        lam *= undo
    return value, d_beta, d_gamma, state


def _grad_projective(tables: DiagonalTables, params: QaoaParams):
    n = tables.n_total
    h = tables.train_cost
    f = tables.phase_cost
    theta = tables.theta_vals
    p = params.p
    state = init_state(n)
    before = []   # normalized state entering each cost layer
    after = []    # normalized state after each full layer
    for beta, gamma in zip(params.betas, params.gammas):
        before.append(state.amplitudes.copy())
        apply_projection(state, f, theta, gamma)
        apply_mixer(state, beta)
        after.append(state.amplitudes.copy())
    q = state.layer_success
    value = expectation(state, h)

    d_beta = np.empty(p)
    d_gamma = np.empty(p)
    omega = (h - value) * state.amplitudes
    for i in range(p - 1, -1, -1):
        d_beta[i] = 2.0 * _vdot_im(omega, apply_x_sum(after[i], n))
        _mix(omega, n, -params.betas[i])
        e = np.exp(-1j * params.gammas[i] * f)
        dP = -0.5j * f * e * (1.0 + theta)
        d_gamma[i] = 2.0 * float(np.vdot(omega, dP * before[i]).real) / np.sqrt(q[i])
        if i:
            P = 0.5 * ((e + 1) + (e - 1) * theta)
            omega = np.conj(P) * omega / np.sqrt(q[i])
    return value, d_beta, d_gamma, state


def value_and_gradient(tables: DiagonalTables, params: QaoaParams):
    """Return ``(C, dC/dbeta, dC/dgamma, final_state)`` for the training expectation ``C``."""
    if tables.approximate:
        return _grad_projective(tables, params)
    return _grad_exact(tables, params)


def gradient(tables: DiagonalTables, params: QaoaParams):
    _, d_beta, d_gamma, _ = value_and_gradient(tables, params)
    return d_beta, d_gamma
