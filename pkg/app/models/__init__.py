from app.models.physics import (
    BASIS_LABELS,
    DICKE_LABELS,
    DensityMatrix,
    Direction,
    PhysicalParams,
    PureState,
)

__all__ = [
    "BASIS_LABELS",
    "DICKE_LABELS",
    "DensityMatrix",
    "Direction",
    "PhysicalParams",
    "PureState",
]
