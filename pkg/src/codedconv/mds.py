"""Real-field (n, k) MDS code built from a Vandermonde generator.

Coded piece ``r`` is the polynomial with coefficients ``a_1..a_k`` evaluated
at node ``g_r``, so any ``k`` coded pieces determine the sources. Coded
indices are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .conv import as_vector
from .errors import IllConditionedError, InvalidArgumentError

NODE_SCHEMES = ("chebyshev", "uniform", "integer_grid")
MAX_CODE_LENGTH = 64
COND_LIMIT = 1e12


def make_nodes(n: int, scheme: str = "chebyshev") -> np.ndarray:
    if scheme == "chebyshev":
        r = np.arange(1, n + 1)
        return np.cos((2 * r - 1) * np.pi / (2 * n))
    if scheme == "uniform":
        return np.linspace(-1.0, 1.0, n) if n > 1 else np.zeros(1)
    if scheme == "integer_grid":
        return np.arange(n, dtype=np.float64)
    raise InvalidArgumentError(f"unknown node scheme {scheme!r}; choose one of {NODE_SCHEMES}")


@dataclass(frozen=True, eq=False)
class VandermondeCode:
    """An (n, k) code; ``generator[r] = [1, g_r, g_r**2, ..., g_r**(k-1)]``."""

    n: int
    k: int
    nodes: np.ndarray
    generator: np.ndarray
    scheme: str = "chebyshev"

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.generator.setflags(write=False)


def make_code(n: int, k: int, node_scheme: str = "chebyshev") -> VandermondeCode:
    if k < 1 or n < 1:
        raise InvalidArgumentError(f"n and k must be positive, got n={n}, k={k}")
    if k > n:
        raise InvalidArgumentError(f"k={k} exceeds n={n}; an (n, k) code needs n >= k")
    if n > MAX_CODE_LENGTH:
        raise InvalidArgumentError(f"n={n} exceeds the supported code length {MAX_CODE_LENGTH}")
    nodes = make_nodes(n, node_scheme)
    if np.unique(nodes).size != n:
        raise InvalidArgumentError("evaluation nodes are not pairwise distinct")
    generator = np.vander(nodes, k, increasing=True)
    return VandermondeCode(int(n), int(k), nodes, generator, node_scheme)


def encode(code: VandermondeCode, pieces: Sequence) -> np.ndarray:
    """Encode ``k`` equal-length source pieces into an ``(n, s)`` array.

    Row ``r`` of the result is ``sum_i g_r**i * pieces[i]``.
    """
    if len(pieces) != code.k:
        raise InvalidArgumentError(f"expected {code.k} pieces, got {len(pieces)}")
    rows = [as_vector(p, f"piece {i}") for i, p in enumerate(pieces)]
    if len({r.size for r in rows}) != 1:
        raise InvalidArgumentError("source pieces must all have the same length")
    return code.generator @ np.vstack(rows)


@dataclass(frozen=True, eq=False)
class DecoderMatrix:
    """Inverse of the generator rows selected by ``indices``."""

    indices: tuple
    inverse: np.ndarray
    condition: float

    def __post_init__(self):
        self.inverse.setflags(write=False)


def make_decoder(code: VandermondeCode, finished_indices: Sequence[int]) -> DecoderMatrix:
    """Build the decoder for the coded pieces listed in ``finished_indices``.

    Raises
    ------
    InvalidArgumentError
        Wrong count, duplicates or out-of-range indices.
    IllConditionedError
        The selected square submatrix has condition number above 1e12.
    """
    idx = [int(i) for i in finished_indices]
    if len(idx) != code.k:
        raise InvalidArgumentError(f"decoder needs exactly k={code.k} indices, got {len(idx)}")
    if len(set(idx)) != len(idx):
        raise InvalidArgumentError(f"duplicate coded indices in {idx}")
    bad = [i for i in idx if not 0 <= i < code.n]
    if bad:
        raise InvalidArgumentError(f"coded indices {bad} outside 0..{code.n - 1}")
    idx = sorted(idx)
    sub = code.generator[idx]
    cond = float(np.linalg.cond(sub))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditionedError(
            f"decode submatrix for indices {idx} has condition number {cond:.3e} > {COND_LIMIT:.0e}"
        )
    lu, piv = scipy.linalg.lu_factor(sub)
    inverse = scipy.linalg.lu_solve((lu, piv), np.eye(code.k))
    return DecoderMatrix(tuple(idx), inverse, cond)


def decode_group(decoder: DecoderMatrix, coded_outputs: Sequence) -> np.ndarray:
    """Recover the ``k`` source-piece outputs from coded outputs.

    ``coded_outputs[m]`` must belong to coded index ``decoder.indices[m]``.
    Works for any linear map applied to the pieces (here, convolution
    with a piece of ``x``), since decoding is linear.
    """
    k = len(decoder.indices)
    if len(coded_outputs) != k:
        raise InvalidArgumentError(f"expected {k} coded outputs, got {len(coded_outputs)}")
    rows = [as_vector(v, f"coded output {m}") for m, v in enumerate(coded_outputs)]
    if len({r.size for r in rows}) != 1:
        raise InvalidArgumentError("coded outputs must all have the same length")
    return decoder.inverse @ np.vstack(rows)
