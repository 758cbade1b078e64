"""Unit-cell geometry, its lumped mass-in-mass chain, and chain dispersion.

Every constant of the geometry-to-chain reduction lives at the top of this
module.  Lengths are SI metres internally; ``UnitCellGeometry.from_mm`` is
the convenience entry point for millimetre inputs.
"""

import csv
import io
import json
from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import check_nonnegative, check_positive, check_range
from .exceptions import DomainError

# --- reduction constants -----------------------------------------------------
# Fraction of the plate volume a*a*e removed by the spiral groove.
GROOVE_FRACTION = 0.10
# Effective cantilever length of the spiral beam relative to its
# Archimedean arc length.  Chosen so the reference cell's decision point
# sits near 23.3 Hz.
SPIRAL_LENGTH_FACTOR = 1.0144
# k_p = PLATE_STRIP_FACTOR * E * e^3 / a^2, giving k_p / k_r ~ 15 for the
# reference cell.
PLATE_STRIP_FACTOR = 0.0902

# Designable ranges in metres.
DESIGN_BOUNDS = {
    "cylinder_height": (5e-3, 20e-3),
    "cylinder_radius": (1e-3, 5e-3),
    "plate_thickness": (2e-3, 5e-3),
    "groove_width": (0.5e-3, 2e-3),
}
DESIGN_ORDER = ("cylinder_height", "cylinder_radius", "plate_thickness",
                "groove_width")


@dataclass(frozen=True)
class MaterialProperties:
    density: float
    elastic_modulus: float
    poisson_ratio: float
    name: str = ""

    def __post_init__(self):
        check_positive("density", self.density)
        check_positive("elastic_modulus", self.elastic_modulus)
        if not 0.0 <= self.poisson_ratio < 0.5:
            raise DomainError("poisson_ratio must lie in [0, 0.5)")


PLA = MaterialProperties(1520.0, 2.5e9, 0.36, "PLA")
STEEL = MaterialProperties(7780.0, 210e9, 0.30, "steel")


@dataclass(frozen=True)
class UnitCellGeometry:
    """Unit-cell dimensions in metres (angle in radians)."""

    lattice_constant: float
    plate_thickness: float
    groove_width: float
    beam_width: float
    spiral_angle: float
    cylinder_radius: float
    cylinder_height: float

    def __post_init__(self):
        for name in ("lattice_constant", "plate_thickness", "groove_width",
                     "beam_width", "spiral_angle", "cylinder_radius",
                     "cylinder_height"):
            check_positive(name, getattr(self, name))
        half = self.lattice_constant / 2
        if self.cylinder_radius >= half:
            raise DomainError("cylinder_radius must be < lattice_constant/2")
        if self.groove_width >= half:
            raise DomainError("groove_width must be < lattice_constant/2")
        for name, (lo, hi) in DESIGN_BOUNDS.items():
            check_range(name, getattr(self, name) * 1e3, lo * 1e3, hi * 1e3,
                        " mm")

    @classmethod
    def from_mm(cls, a=30.0, e=2.0, mu=1.5, w=1.51, phi=4 * np.pi, r=5.0,
                h=10.0):
        return cls(a * 1e-3, e * 1e-3, mu * 1e-3, w * 1e-3, float(phi),
                   r * 1e-3, h * 1e-3)

    def design_vector_mm(self):
        """(h, r, e, mu) in mm."""
        return np.array([getattr(self, k) * 1e3 for k in DESIGN_ORDER])

    def with_design_mm(self, g):
        h, r, e, mu = (float(v) * 1e-3 for v in g)
        return replace(self, cylinder_height=h, cylinder_radius=r,
                       plate_thickness=e, groove_width=mu)


REFERENCE_GEOMETRY = UnitCellGeometry.from_mm()


@dataclass(frozen=True)
class LumpedChain:
    """Finite mass-in-mass chain; plate i carries resonator i.

    Coordinate order is (plate_1, resonator_1, plate_2, ...).  Plate 1 is
    tied to the moving base by k_p.
    """

    n_cells: int
    m_p: float
    m_r: float
    k_p: float
    k_r: float
    zeta: float = 0.01

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise DomainError("n_cells must be a positive integer")
        for name in ("m_p", "m_r", "k_p", "k_r"):
            check_positive(name, getattr(self, name))
        check_nonnegative("zeta", self.zeta)
        if self.zeta >= 1.0:
            raise DomainError("zeta must be < 1")

    @property
    def n_dof(self):
        return 2 * self.n_cells

    @property
    def omega_r(self):
        return np.sqrt(self.k_r / self.m_r)

    def scaled(self, stiffness=1.0):
        return replace(self, k_p=self.k_p * stiffness,
                       k_r=self.k_r * stiffness)

    def matrices(self):
        """Return (M, C, K) of the fixed-base chain.

        Damping is stiffness proportional, C = beta K with beta chosen so the
        local resonance has damping ratio zeta.
        """
        n = self.n_dof
        M = np.zeros((n, n))
        K = np.zeros((n, n))
        for i in range(self.n_cells):
            p, r = 2 * i, 2 * i + 1
            M[p, p] = self.m_p
            M[r, r] = self.m_r
            K[p, p] += self.k_p
            if i > 0:
                q = 2 * (i - 1)
                K[q, q] += self.k_p
                K[q, p] -= self.k_p
                K[p, q] -= self.k_p
            K[p, p] += self.k_r
            K[r, r] += self.k_r
            K[p, r] -= self.k_r
            K[r, p] -= self.k_r
        C = self.damping_beta * K
        return M, C, K

    @property
    def damping_beta(self):
        return 2.0 * self.zeta / self.omega_r

    def probe_default(self):
        return self.n_dof - 1

    def to_dict(self):
        return {"n_cells": int(self.n_cells), "m_p": self.m_p,
                "m_r": self.m_r, "k_p": self.k_p, "k_r": self.k_r,
                "zeta": self.zeta}


def spiral_arc_length(geom):
    """Length of an Archimedean spiral wound from the centre over spiral_angle.

    The radial pitch per turn is one beam plus one groove width, so
    rho(theta) = pitch * theta / (2 pi) and the arc length is close to
    pitch * phi^2 / (4 pi) once phi spans more than a turn.
    """
    pitch = geom.beam_width + geom.groove_width
    return pitch * geom.spiral_angle ** 2 / (4 * np.pi)


def reduce_geometry(geom, plate_material=PLA, resonator_material=STEEL,
                    n_cells=5, zeta=0.01):
    """Map a unit cell to equivalent lumped chain parameters."""
    a, e = geom.lattice_constant, geom.plate_thickness
    m_r = resonator_material.density * np.pi * geom.cylinder_radius ** 2 \
        * geom.cylinder_height
    m_p = plate_material.density * a * a * e * (1.0 - GROOVE_FRACTION)
    L_s = SPIRAL_LENGTH_FACTOR * spiral_arc_length(geom)
    inertia = geom.beam_width * e ** 3 / 12.0
    k_r = 3.0 * plate_material.elastic_modulus * inertia / L_s ** 3
    k_p = PLATE_STRIP_FACTOR * plate_material.elastic_modulus * e ** 3 / a ** 2
    return LumpedChain(n_cells, m_p, m_r, k_p, k_r, zeta)


def local_resonance_frequency(chain):
    return np.sqrt(chain.k_r / chain.m_r) / (2 * np.pi)


@dataclass(frozen=True)
class DispersionResult:
    wavenumber_grid: np.ndarray
    branch_frequencies: np.ndarray  # (n_q, 2), ascending per row
    bandgaps: list = field(default_factory=list)

    def to_csv(self):
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["qa", "branch1_hz", "branch2_hz"])
        for qa, (f1, f2) in zip(self.wavenumber_grid, self.branch_frequencies):
            w.writerow([format(qa, ".12g"), format(f1, ".12g"),
                        format(f2, ".12g")])
        return buf.getvalue()

    def gaps_to_json(self):
        return json.dumps([{"f_low_hz": lo, "f_high_hz": hi}
                           for lo, hi in self.bandgaps], indent=2)


def branch_omegas(chain, qa):
    """Both angular-frequency roots of the dispersion relation at qa.

    Clearing the resonator denominator gives a quadratic in w^2:
    m_p m_r w^4 - (m_p k_r + m_r k_r + s m_r) w^2 + s k_r = 0,
    s = 2 k_p (1 - cos qa).
    """
    qa = np.asarray(qa, dtype=float)
    mp, mr, kp, kr = chain.m_p, chain.m_r, chain.k_p, chain.k_r
    s = 2 * kp * (1 - np.cos(qa))
    a2 = mp * mr
    a1 = mp * kr + mr * kr + s * mr
    a0 = s * kr
    disc = np.sqrt(np.maximum(a1 * a1 - 4 * a2 * a0, 0.0))
    hi = (a1 + disc) / (2 * a2)
    # small root via the product of roots to avoid cancellation
    lo = np.where(hi > 0, a0 / (a2 * hi), 0.0)
    return np.sqrt(np.maximum(lo, 0.0)), np.sqrt(hi)


def _bisect(fun, lo, hi, tol):
    flo = fun(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _omega2_meff(chain, f):
    w2 = (2 * np.pi * f) ** 2
    return w2 * (chain.m_p + chain.m_r * chain.k_r / (chain.k_r - chain.m_r * w2))


def gap_edges(chain, tol=1e-9):
    """First bandgap (f_low, f_high) in Hz by bisection on the relation."""
    fr = local_resonance_frequency(chain)
    target = 4 * chain.k_p
    # acoustic edge at qa = pi: w^2 m_eff(w) = 4 k_p, increasing on (0, f_r)
    f_low = _bisect(lambda f: _omega2_meff(chain, f) - target, 0.0,
                    fr * (1 - 1e-15), tol)
    # optical edge at qa = 0: m_eff(w) = 0, increasing on (f_r, inf)
    f_top = fr * np.sqrt(1 + chain.m_r / chain.m_p) * 2.0
    f_high = _bisect(
        lambda f: chain.m_p + chain.m_r * chain.k_r
        / (chain.k_r - chain.m_r * (2 * np.pi * f) ** 2),
        fr * (1 + 1e-15), f_top, tol)
    return f_low, f_high


def dispersion(chain, n_q=201):
    if n_q < 16:
        raise DomainError("n_q must be >= 16")
    qa = np.linspace(0.0, np.pi, int(n_q))
    w_lo, w_hi = branch_omegas(chain, qa)
    branches = np.column_stack([w_lo, w_hi]) / (2 * np.pi)
    f_low, f_high = gap_edges(chain)
    gaps = [(f_low, f_high)] if f_high > f_low else []
    return DispersionResult(qa, branches, gaps)
