"""Haar-random unitaries, submatrix extraction and unitary file I/O.

Haar sampling uses QR decomposition of a complex Ginibre matrix with the
R-diagonal phase correction (plain QR is not Haar distributed; correcting each
column by the phase of the corresponding R diagonal entry restores invariance,
which the test suite checks through eigenphase statistics).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError
from .streams import GENERATOR_NAME, make_rng

__all__ = [
    "Interferometer",
    "haar_random",
    "from_matrix",
    "balanced_coupler",
    "submatrix",
    "save_unitary",
    "load_unitary",
]

UNITARITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Interferometer:
    """An M x M unitary transfer matrix between input and output ports."""

    matrix: np.ndarray
    seed: int | None = None
    generator: str | None = None
    _skip_check: bool = field(default=False, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError(f"matrix must be square, got shape {m.shape}")
        if m.shape[0] < 1:
            raise DomainError("interferometer dimension must be at least 1")
        if not self._skip_check:
            defect = unitarity_defect(m)
            if defect > UNITARITY_TOL:
                raise DomainError(f"matrix is not unitary: max |U^dag U - I| = {defect:.3e}")
        m = np.ascontiguousarray(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


def unitarity_defect(matrix: np.ndarray) -> float:
    """Max elementwise deviation of U^dag U from the identity."""
    m = np.asarray(matrix)
    gram = m.conj().T @ m
    return float(np.max(np.abs(gram - np.eye(m.shape[0]))))


def haar_random(dimension: int, seed: int | np.random.Generator) -> Interferometer:
    """Draw an M x M unitary from the Haar measure.

    ``seed`` may be an integer master seed (a dedicated Philox stream is
    derived from it) or an already-constructed numpy Generator.
    """
    if dimension < 1:
        raise DomainError(f"dimension must be >= 1, got {dimension}")
    if isinstance(seed, np.random.Generator):
        rng, seed_label = seed, None
    else:
        rng, seed_label = make_rng(int(seed), "unitary"), int(seed)
    ginibre = (rng.standard_normal((dimension, dimension))
               + 1j * rng.standard_normal((dimension, dimension))) / np.sqrt(2.0)
    q, r = np.linalg.qr(ginibre)
    diag = np.diagonal(r).copy()
    # Zero diagonal entries occur with probability zero; keep the column as-is.
    diag[diag == 0] = 1.0
    q = q * (diag / np.abs(diag))
    return Interferometer(q, seed=seed_label, generator=GENERATOR_NAME)


def from_matrix(matrix: np.ndarray, seed: int | None = None,
                generator: str | None = None) -> Interferometer:
    """Wrap an explicit matrix, validating unitarity."""
    return Interferometer(np.asarray(matrix, dtype=np.complex128), seed=seed, generator=generator)


def balanced_coupler() -> Interferometer:
    """The 50:50 two-port coupler [[1, 1], [1, -1]]/sqrt(2)."""
    return from_matrix(np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0))


def submatrix(interf: Interferometer, outputs: Sequence[int], inputs: Sequence[int]) -> np.ndarray:
    """Extract the transfer submatrix with entry (i, j) = U[outputs[i], inputs[j]].

    Repeated indices are allowed and produce repeated rows/columns, which is
    how multiply occupied ports enter the permanent formalism.
    """
    out_idx = np.asarray(outputs, dtype=np.intp)
    in_idx = np.asarray(inputs, dtype=np.intp)
    if out_idx.shape != in_idx.shape or out_idx.ndim != 1:
        raise DomainError(f"outputs and inputs must be equal-length 1-d sequences, "
                          f"got {out_idx.shape} and {in_idx.shape}")
    m = interf.dimension
    for name, idx in (("output", out_idx), ("input", in_idx)):
        if idx.size and (idx.min() < 0 or idx.max() >= m):
            raise DomainError(f"{name} port index out of range [0, {m})")
    return interf.matrix[np.ix_(out_idx, in_idx)]


_BINARY_FORMAT = "c128-le-interleaved"
_SCHEMA_VERSION = 1


def save_unitary(interf: Interferometer, path: str | Path, binary: bool = True) -> None:
    """Write a unitary to disk.

    Binary layout: one JSON header line ``{M, seed, generator, format,
    schema_version}`` followed by 2*M^2 little-endian float64 values
    (interleaved real/imaginary, row-major).  The JSON variant stores ``re``
    and ``im`` as nested lists and is meant for hand-edited fixtures.
    """
    path = Path(path)
    header = {
        "M": interf.dimension,
        "seed": interf.seed,
        "generator": interf.generator,
        "schema_version": _SCHEMA_VERSION,
    }
    if binary:
        header["format"] = _BINARY_FORMAT
        payload = np.ascontiguousarray(interf.matrix, dtype="<c16").tobytes()
        with open(path, "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
            fh.write(b"\n")
            fh.write(payload)
    else:
        header["re"] = interf.matrix.real.tolist()
        header["im"] = interf.matrix.imag.tolist()
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(header, fh, sort_keys=True)
            fh.write("\n")


def load_unitary(path: str | Path) -> Interferometer:
    """Read a unitary written by :func:`save_unitary` (either variant)."""
    path = Path(path)
    raw = path.read_bytes()
    try:
        data = json.loads(raw.decode("utf-8"))
        is_full_json = True
    except (UnicodeDecodeError, json.JSONDecodeError):
        is_full_json = False
    if is_full_json:
        matrix = np.asarray(data["re"], dtype=np.float64) + 1j * np.asarray(data["im"], dtype=np.float64)
        return Interferometer(matrix, seed=data.get("seed"), generator=data.get("generator"))
    newline = raw.index(b"\n")
    header = json.loads(raw[:newline].decode("utf-8"))
    m = int(header["M"])
    payload = raw[newline + 1:]
    expected = 16 * m * m
    if len(payload) != expected:
        raise DomainError(f"unitary payload has {len(payload)} bytes, expected {expected}")
    matrix = np.frombuffer(payload, dtype="<c16").reshape(m, m).astype(np.complex128)
    return Interferometer(matrix, seed=header.get("seed"), generator=header.get("generator"))
