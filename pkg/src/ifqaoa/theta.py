r"""Approximate sign function of an M-qubit phase-estimation register.

With ``K = 2**M`` ancilla states, post-selecting the register on ``|0>`` after
QPE, a sign-controlled phase ``exp(-i gamma f)`` and inverse QPE multiplies
``|x>`` by

.. math::

    \mathcal{P}_M = \frac{e^{-i\gamma f} + 1}{2} + \frac{e^{-i\gamma f} - 1}{2}\,\vartheta_M(g),

    \vartheta_M(g) = \frac{8}{K}\,\mathrm{Re}\sum_{k\ \mathrm{odd}} \Big(1 - \frac{k}{K}\Big)
        \frac{e^{2\pi i g k / K}}{1 - e^{-2\pi i k / K}}, \qquad 0 < k < K.

``theta_M`` equals ``sign(l)`` (with ``sign(0) = +1``) at every integer in the
two's-complement range and is periodic in ``g`` with period ``K``.  Tables are
sampled on a grid of ``2**m`` offsets per unit interval with one FFT per offset.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fft import ifft

__all__ = [
    "ThetaTable",
    "phi",
    "sign_weights",
    "build_theta_table",
    "theta_lookup",
    "theta_direct",
    "projection_factor",
]


def phi(k: int, M: int, gamma_f: float) -> complex:
    """Fourier coefficient of the sign-controlled phase over the ancilla register."""
    K = 1 << M
    if not -K < k < K:
        raise ValueError(f"k={k} outside (-{K}, {K})")
    e = np.exp(-1j * gamma_f)
    if k == 0:
        return complex((e + 1) / 2)
    if k % 2:
        return complex(2.0 / (K * (1 - np.exp(-2j * np.pi * k / K))) * (e - 1))
    return 0j


def sign_weights(M: int) -> np.ndarray:
    """``(1 - k/K) * phi(k) / ((e - 1)/2)`` for ``k = 0..K-1``; the k = 0 term is dropped."""
    K = 1 << M
    k = np.arange(K)
    w = np.zeros(K, dtype=np.complex128)
    odd = k[1::2]
    w[1::2] = (1 - odd / K) * 4.0 / (K * (1 - np.exp(-2j * np.pi * odd / K)))
    return w


@dataclass(frozen=True)
class ThetaTable:
    m_qpe: int
    supersample: int
    values: np.ndarray

    @property
    def period(self) -> int:
        return 1 << self.m_qpe


@lru_cache(maxsize=64)
def _cached_table(M: int, m: int) -> ThetaTable:
    K = 1 << M
    S = 1 << m
    k = np.arange(K)
    deltas = np.arange(S) / S
    spectra = sign_weights(M)[None, :] * np.exp(2j * np.pi * np.outer(deltas, k) / K)
    # ifft carries 1/K; the sum over k needs none
    grid = 2.0 * K * ifft(spectra).real
    values = np.ascontiguousarray(grid.T).ravel()
    values.setflags(write=False)
    return ThetaTable(m_qpe=M, supersample=m, values=values)


def build_theta_table(M: int, m: int = 3) -> ThetaTable:
    """Sample ``theta_M(l + j / 2**m)`` for all ``l mod 2**M`` and ``j < 2**m``.

    Entry ``(l mod 2**M) * 2**m + j`` holds the sample; cost is O(M 2**(M+m)).
    """
    if not 2 <= M <= 20:
        raise ValueError("M must lie in [2, 20]")
    if not 0 <= m <= 6:
        raise ValueError("supersampling exponent must lie in [0, 6]")
    return _cached_table(int(M), int(m))


def theta_lookup(table: ThetaTable, g):
    """Linearly interpolate the table at ``g``, wrapping modulo ``2**M``.

    Wraparound reproduces the modular arithmetic of the phase register: a value
    just above the largest representable integer reads as the most negative one.
    """
    S = 1 << table.supersample
    size = table.values.size
    t = np.asarray(g, dtype=float) * S
    i0 = np.floor(t)
    frac = t - i0
    i0 = i0.astype(np.int64) % size
    i1 = (i0 + 1) % size
    vals = table.values
    out = vals[i0] * (1.0 - frac) + vals[i1] * frac
    return out if out.ndim else float(out)


def theta_direct(g, M: int):
    """Evaluate the defining sum directly, O(2**M) per point; used as a reference."""
    K = 1 << M
    k = np.arange(1, K, 2)
    g = np.asarray(g, dtype=float)
    terms = (1 - k / K) * np.exp(2j * np.pi * np.multiply.outer(g, k) / K) / (
        1 - np.exp(-2j * np.pi * k / K)
    )
    out = 8.0 / K * terms.sum(axis=-1).real
    return out if out.ndim else float(out)


def projection_factor(gamma_f, theta_val):
    e = np.exp(-1j * np.asarray(gamma_f, dtype=float))
    return (e + 1) / 2 + (e - 1) / 2 * np.asarray(theta_val, dtype=float)
