import hashlib

import numpy as np


def hash_state(amplitudes: np.ndarray) -> str:
    """Create a digest of a state vector for compact trajectory records"""
    data = np.ascontiguousarray(np.asarray(amplitudes, dtype=np.complex128))
    return hashlib.sha256(data.tobytes()).hexdigest()[:16]


def hash_config(payload: str) -> str:
    """Digest of a canonical config serialization, written into output metadata"""
    return hashlib.sha256(payload.encode()).hexdigest()
