"""Real-vector convolution kernels and the per-processor cost model.

Three kernels compute the same linear convolution: a direct O(n*m) sum
used as the test oracle, a zero-padded FFT product, and overlap-add for a
long vector against a short one. ``shift_add_combine`` stitches piece
convolutions back into the full result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError

LOG_BASES = {"2": 2.0, "e": math.e}


def as_vector(values, name: str = "vector") -> np.ndarray:
    """Coerce ``values`` to a finite, non-empty 1-D float64 array."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidArgumentError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains NaN or Inf")
    return arr


@dataclass(frozen=True)
class CostModel:
    """Computational cost constant ``c`` and the log base used with it.

    ``log_base`` is 2 (default, butterfly count) or e. Pass ``"e"`` or
    ``math.e`` for the natural log.
    """

    c: float = 1.0
    log_base: float = 2.0

    def __post_init__(self):
        base = self.log_base
        if isinstance(base, str):
            if base not in LOG_BASES:
                raise InvalidArgumentError(f"log_base must be '2' or 'e', got {base!r}")
            base = LOG_BASES[base]
        base = float(base)
        if base not in (2.0, math.e):
            raise InvalidArgumentError(f"log_base must be 2 or e, got {base!r}")
        object.__setattr__(self, "log_base", base)
        if not (self.c > 0 and math.isfinite(self.c)):
            raise InvalidArgumentError(f"cost constant c must be positive, got {self.c!r}")

    @property
    def base_name(self) -> str:
        return "2" if self.log_base == 2.0 else "e"

    def log(self, x):
        # log2 keeps powers of two exact
        if self.log_base == 2.0:
            return np.log2(x)
        return np.log(x)


def convolve_direct(a, x) -> np.ndarray:
    """Linear convolution by the defining sum; the reference oracle."""
    a = as_vector(a, "a")
    x = as_vector(x, "x")
    return np.convolve(a, x)


def _fft_len(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def convolve_fft(a, x) -> np.ndarray:
    """Linear convolution through a real FFT of power-of-two length."""
    a = as_vector(a, "a")
    x = as_vector(x, "x")
    out_len = a.size + x.size - 1
    nfft = _fft_len(out_len)
    spec = np.fft.rfft(a, nfft) * np.fft.rfft(x, nfft)
    return np.fft.irfft(spec, nfft)[:out_len]


def convolve_overlap_add(a, x, block: int) -> np.ndarray:
    """Overlap-add convolution of ``a`` against the (short) vector ``x``.

    ``a`` is cut into blocks of ``block`` samples; each block is convolved
    with ``x`` by FFT and added in at its offset.
    """
    a = as_vector(a, "a")
    x = as_vector(x, "x")
    if int(block) != block or block < 1:
        raise InvalidArgumentError(f"block must be a positive integer, got {block!r}")
    block = int(block)
    out = np.zeros(a.size + x.size - 1)
    for start in range(0, a.size, block):
        piece = convolve_fft(a[start:start + block], x)
        out[start:start + piece.size] += piece
    return out


def shift_add_combine(pieces: Sequence, shift_step: int, total_len: int) -> np.ndarray:
    """Sum the pieces after shifting piece ``i`` right by ``i * shift_step``.

    Each piece is zero padded to ``total_len``. A piece that would run past
    ``total_len`` is an error rather than being truncated.
    """
    if shift_step < 1 or total_len < 1:
        raise InvalidArgumentError("shift_step and total_len must be positive")
    out = np.zeros(int(total_len))
    for i, piece in enumerate(pieces):
        piece = as_vector(piece, f"piece {i}")
        start = i * shift_step
        if start + piece.size > total_len:
            raise InvalidArgumentError(
                f"piece {i} (length {piece.size}) shifted by {start} overflows total_len={total_len}"
            )
        out[start:start + piece.size] += piece
    return out


def cost_scenario1(m1: int, m2: int, model: CostModel = CostModel()) -> float:
    """FFT cost C*(m1+m2)*log(m1+m2) for comparable lengths."""
    if m1 < 1 or m2 < 1:
        raise InvalidArgumentError("lengths must be at least 1")
    n = m1 + m2
    return float(model.c * n * model.log(n))


def cost_scenario2(m1: int, m2: int, model: CostModel = CostModel()) -> float:
    """Overlap-add cost 2*C*m1*(log(2*m2)+1), with m2 the short length."""
    if m1 < 1 or m2 < 1:
        raise InvalidArgumentError("lengths must be at least 1")
    if m2 > m1:
        raise InvalidArgumentError(f"m2={m2} must not exceed m1={m1} (m2 is the short vector)")
    return float(2.0 * model.c * m1 * (model.log(2 * m2) + 1.0))
