"""Two-atom Hilbert space: lowering operators, Dicke basis, collective jumps."""
from typing import Tuple

import numpy as np

from app.models.physics import PureState

SQRT2 = np.sqrt(2.0)

# single-atom |1><2| in the (|1>, |2>) basis
_SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
_IDENTITY_2 = np.eye(2, dtype=complex)

IDENTITY = np.eye(4, dtype=complex)

# Columns are |g>, |s>, |a>, |e> written in the product basis (|11>, |12>, |21>, |22>)
DICKE_MATRIX = np.array(
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0 / SQRT2, 1.0 / SQRT2, 0.0],
        [0.0, 1.0 / SQRT2, -1.0 / SQRT2, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ],
    dtype=complex,
)


def lowering_operator(atom_index: int) -> np.ndarray:
    """S^-_i in the product basis; S^+_i is its conjugate transpose"""
    if atom_index == 1:
        return np.kron(_SIGMA_MINUS, _IDENTITY_2)
    if atom_index == 2:
        return np.kron(_IDENTITY_2, _SIGMA_MINUS)
    raise ValueError(f"atom_index must be 1 or 2, got {atom_index}")


S1_MINUS = lowering_operator(1)
S2_MINUS = lowering_operator(2)
S1_PLUS = S1_MINUS.conj().T
S2_PLUS = S2_MINUS.conj().T

# S+_i S-_i excitation projectors and the exchange operator S+_2 S-_1
EXCITED_1 = S1_PLUS @ S1_MINUS
EXCITED_2 = S2_PLUS @ S2_MINUS
EXCHANGE_21 = S2_PLUS @ S1_MINUS


def dicke_transform(state) -> np.ndarray:
    """Coordinates (g, s, a, e) of a product-basis 4-vector"""
    amps = state.amplitudes if isinstance(state, PureState) else np.asarray(state, dtype=complex)
    return DICKE_MATRIX.conj().T @ amps


def inverse_dicke_transform(coords) -> np.ndarray:
    """Product-basis amplitudes of a vector given in Dicke coordinates"""
    return DICKE_MATRIX @ np.asarray(coords, dtype=complex)


def to_dicke_operator(operator: np.ndarray) -> np.ndarray:
    """Matrix of a product-basis operator in the Dicke basis"""
    return DICKE_MATRIX.conj().T @ operator @ DICKE_MATRIX


def symmetric_jump_operators() -> Tuple[np.ndarray, np.ndarray]:
    """R+ and R- = (S-_1 +/- S-_2)/sqrt(2)"""
    return (S1_MINUS + S2_MINUS) / SQRT2, (S1_MINUS - S2_MINUS) / SQRT2


R_PLUS, R_MINUS = symmetric_jump_operators()
