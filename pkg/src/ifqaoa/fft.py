"""Iterative radix-2 FFT for power-of-two lengths, batched over leading axes."""

from __future__ import annotations

import numpy as np

__all__ = ["fft", "ifft", "bit_reverse_permutation"]


def bit_reverse_permutation(size: int) -> np.ndarray:
    bits = size.bit_length() - 1
    idx = np.arange(size)
    rev = np.zeros(size, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def _transform(a: np.ndarray, sign: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    size = a.shape[-1]
    if size < 1 or size & (size - 1):
        raise ValueError(f"length must be a power of two, got {size}")
    out = a[..., bit_reverse_permutation(size)].copy()
    lead = out.shape[:-1]
    half = 1
    while half < size:
        twiddle = np.exp(sign * 1j * np.pi * np.arange(half) / half)
        blocks = out.reshape(*lead, size // (2 * half), 2, half)
        even = blocks[..., 0, :].copy()
        odd = blocks[..., 1, :] * twiddle
        blocks[..., 0, :] = even + odd
        blocks[..., 1, :] = even - odd
        half *= 2
    return out


def fft(a: np.ndarray) -> np.ndarray:
    """Forward DFT along the last axis, ``sum_n a[n] exp(-2 pi i k n / N)``."""
    return _transform(a, -1)


def ifft(a: np.ndarray) -> np.ndarray:
    """Inverse DFT along the last axis, including the ``1/N`` factor."""
    a = np.asarray(a)
    return _transform(a, +1) / a.shape[-1]
