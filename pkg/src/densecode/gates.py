"""Unitaries used by the coding protocol: generalized Paulis, GXOR, Fourier."""

from __future__ import annotations

import numpy as np

from .tensor_core import Operator


def pauli_x(d: int) -> Operator:
    """Cyclic shift X|l> = |l+1 mod d>."""
    if d < 2:
        raise ValueError("pauli_x requires dimension >= 2")
    mat = np.zeros((d, d), dtype=complex)
    mat[(np.arange(d) + 1) % d, np.arange(d)] = 1.0
    return Operator(mat)


def pauli_z(rank: int, d: int) -> Operator:
    """Phase operator Z|l> = exp(2*pi*i*l/rank)|l> on the leading `rank` levels.

    Acts as the identity on levels >= rank, which keeps it unitary on the full
    space; valid states never carry amplitude there.
    """
    if rank < 1:
        raise ValueError("rank must be positive")
    if rank > d:
        raise ValueError(f"rank {rank} exceeds ambient dimension {d}")
    phases = np.ones(d, dtype=complex)
    levels = np.arange(rank)
    phases[:rank] = np.exp(2j * np.pi * levels / rank)
    return Operator(np.diag(phases))


def gxor(d1: int, d2: int) -> Operator:
    """GXOR gate |m>|n> -> |m>|m - n mod d2>, control first, target second.

    Defined for unequal cardinalities too; the control index enters the target
    arithmetic reduced mod d2. Hermitian unitary involution.
    """
    if d1 < 2 or d2 < 2:
        raise ValueError("gxor requires both dimensions >= 2")
    mat = np.zeros((d1 * d2, d1 * d2), dtype=complex)
    for m in range(d1):
        for n in range(d2):
            mat[m * d2 + (m - n) % d2, m * d2 + n] = 1.0
    return Operator(mat)


def fourier(rank: int, d: int) -> Operator:
    """Discrete Fourier transform on the leading `rank` levels, identity above."""
    if rank < 1:
        raise ValueError("rank must be positive")
    if rank > d:
        raise ValueError(f"rank {rank} exceeds ambient dimension {d}")
    mat = np.eye(d, dtype=complex)
    grid = np.outer(np.arange(rank), np.arange(rank))
    mat[:rank, :rank] = np.exp(2j * np.pi * grid / rank) / np.sqrt(rank)
    return Operator(mat)
