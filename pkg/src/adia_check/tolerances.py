"""Package-wide numerical tolerances.

Mutate the attributes of :data:`TOL` to change a tolerance everywhere, e.g.
``adia_check.tolerances.TOL.gap_floor = 1e-10``.
"""

from dataclasses import dataclass


@dataclass
class Tolerances:
    normalized: float = 1e-12
    unitary: float = 1e-8
    hermitian: float = 1e-12
    unit_vector: float = 1e-9
    gap_floor: float = 1e-12
    max_unitarity_drift: float = 1e-8


TOL = Tolerances()
