"""Latin Hypercube sampling of the designable geometry."""

import numpy as np
from scipy.stats import qmc

from ..exceptions import DomainError
from ..lattice import DESIGN_BOUNDS, DESIGN_ORDER

# (h, r, e, mu) bounds in mm
GEOMETRY_BOUNDS_MM = np.array([[DESIGN_BOUNDS[k][0] * 1e3,
                                DESIGN_BOUNDS[k][1] * 1e3]
                               for k in DESIGN_ORDER])


def lhs_sample(bounds, n, seed):
    """n points, one per stratum along every dimension; shape (n, d)."""
    bounds = np.asarray(bounds, dtype=float)
    if bounds.ndim != 2 or bounds.shape[1] != 2:
        raise DomainError("bounds must have shape (d, 2)")
    if np.any(bounds[:, 0] >= bounds[:, 1]):
        raise DomainError("each bound needs lo < hi")
    if int(n) < 1:
        raise DomainError("n must be >= 1")
    sampler = qmc.LatinHypercube(d=bounds.shape[0], seed=seed)
    unit = sampler.random(int(n))
    return qmc.scale(unit, bounds[:, 0], bounds[:, 1])
