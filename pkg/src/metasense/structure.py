"""Monitored-structure responses: multi-harmonic signals and shear chains."""

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from ._validation import check_finite_array, check_positive
from .exceptions import DomainError
from .integrate import IntegratorConfig, PiecewisePolynomial, integrate_linear


@dataclass(frozen=True)
class SignalTrace:
    """Uniformly sampled signal; sample k sits at t0 + k*dt."""

    dt: float
    samples: np.ndarray
    label: str = ""
    unit: str = "m"
    t0: float = 0.0

    def __post_init__(self):
        check_positive("dt", self.dt)
        s = check_finite_array("samples", self.samples)
        object.__setattr__(self, "samples", s)

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.samples.size)

    @property
    def duration(self):
        return self.dt * (self.samples.size - 1)

    def scaled(self, factor, unit=None):
        return replace(self, samples=self.samples * factor,
                       unit=unit or self.unit)

    def to_csv(self, header="value", scale=1.0):
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t_s", header])
        for t, v in zip(self.times, self.samples * scale):
            w.writerow([format(t, ".12g"), format(v, ".12g")])
        return buf.getvalue()


@dataclass(frozen=True)
class HarmonicSpec:
    """Sum of sines; amplitudes in mm, frequencies in Hz."""

    components: tuple
    duration: float = 10.0
    sample_rate: float = 1000.0

    def __post_init__(self):
        comps = tuple((float(a), float(f)) for a, f in self.components)
        if not 1 <= len(comps) <= 5:
            raise DomainError("between 1 and 5 components are allowed")
        for a, f in comps:
            if a < 0 or not np.isfinite(a):
                raise DomainError("amplitudes must be >= 0")
            if f <= 0 or not np.isfinite(f):
                raise DomainError("frequencies must be > 0")
        check_positive("duration", self.duration)
        check_positive("sample_rate", self.sample_rate)
        fmax = max(f for _, f in comps)
        if self.sample_rate <= 2 * fmax:
            raise DomainError(
                f"sample_rate {self.sample_rate:g} Hz violates Nyquist for "
                f"{fmax:g} Hz")
        object.__setattr__(self, "components", comps)

    def amplitudes_m(self):
        return np.array([a for a, _ in self.components]) * 1e-3

    def omegas(self):
        return 2 * np.pi * np.array([f for _, f in self.components])

    def displacement(self, t):
        t = np.asarray(t, dtype=float)
        return np.sin(np.multiply.outer(t, self.omegas())) @ self.amplitudes_m()

    def acceleration(self, t):
        w = self.omegas()
        return -np.sin(np.multiply.outer(t, w)) @ (self.amplitudes_m() * w ** 2)

    def jerk(self, t):
        w = self.omegas()
        return -np.cos(np.multiply.outer(t, w)) @ (self.amplitudes_m() * w ** 3)


def synthesize_harmonic(spec):
    """Sample Disp(t) = sum A_i sin(2 pi f_i t); returns metres."""
    n = int(round(spec.duration * spec.sample_rate)) + 1
    t = np.arange(n) / spec.sample_rate
    return SignalTrace(1.0 / spec.sample_rate, spec.displacement(t),
                       "structure displacement", "m")


# Three emulated structural responses: amplitudes (mm), healthy and damaged
# modal frequencies (Hz).
TABLE3 = {
    1: {"amplitudes": (1.10, 0.13, 0.05, 0.02, 0.01),
        "healthy": (23.71, 45.16, 68.97, 91.33, 115.16),
        "damaged": (22.41, 44.82, 67.27, 89.69, 112.09)},
    2: {"amplitudes": (1.16, 1.04, 0.29, 0.03, 0.02),
        "healthy": (23.65, 25.34, 50.77, 91.69, 135.49),
        "damaged": (22.46, 24.63, 49.28, 90.60, 133.11)},
    3: {"amplitudes": (0.12, 0.26, 0.53, 1.03, 0.15),
        "healthy": (23.74, 68.39, 82.50, 91.87, 154.61),
        "damaged": (22.48, 67.99, 80.12, 90.33, 150.66)},
}


def case_spec(case, state, duration=10.0, sample_rate=1000.0, scale=1.0):
    """HarmonicSpec for one of the three emulated cases ("healthy"/"damaged")."""
    row = TABLE3[int(case)]
    if state not in ("healthy", "damaged"):
        raise DomainError("state must be 'healthy' or 'damaged'")
    comps = [(a * scale, f) for a, f in zip(row["amplitudes"], row[state])]
    return HarmonicSpec(tuple(comps), duration, sample_rate)


@dataclass(frozen=True)
class StructuralModel:
    """Shear chain: spring/damper i ties mass i to mass i-1 (mass 0 to ground).

    ``damage_schedule`` holds (time, spring_index, new_stiffness) events.
    """

    masses: np.ndarray
    stiffnesses: np.ndarray
    dampers: np.ndarray
    damage_schedule: tuple = field(default_factory=tuple)

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        k = np.asarray(self.stiffnesses, dtype=float)
        c = np.asarray(self.dampers, dtype=float)
        if not (m.ndim == k.ndim == c.ndim == 1) or not (
                m.size == k.size == c.size >= 1):
            raise DomainError("masses, stiffnesses and dampers need equal length")
        if np.any(m <= 0) or np.any(k <= 0) or np.any(c < 0):
            raise DomainError("masses and stiffnesses must be > 0, dampers >= 0")
        sched = tuple((float(t), int(i), float(kn))
                      for t, i, kn in self.damage_schedule)
        times = [t for t, _, _ in sched]
        if times != sorted(times):
            raise DomainError("damage events must be time-sorted")
        for _, i, kn in sched:
            if not 0 <= i < m.size or kn <= 0:
                raise DomainError("bad damage event")
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "stiffnesses", k)
        object.__setattr__(self, "dampers", c)
        object.__setattr__(self, "damage_schedule", sched)

    @property
    def n_dof(self):
        return self.masses.size

    @classmethod
    def uniform(cls, n=6, mass=50.0, stiffness=1.89e7, damper=10.0):
        return cls(np.full(n, mass), np.full(n, stiffness), np.full(n, damper))

    @classmethod
    def from_dict(cls, d):
        sched = [(e["time"], e["spring"], e["stiffness"])
                 for e in d.get("damage_schedule", [])]
        return cls(d["masses"], d["stiffnesses"], d["dampers"], tuple(sched))

    def to_dict(self):
        return {"masses": self.masses.tolist(),
                "stiffnesses": self.stiffnesses.tolist(),
                "dampers": self.dampers.tolist(),
                "damage_schedule": [{"time": t, "spring": i, "stiffness": k}
                                    for t, i, k in self.damage_schedule]}

    def scaled(self, factor):
        """Uniformly scale all springs (global stiffness loss 1 - factor)."""
        return replace(self, stiffnesses=self.stiffnesses * factor)

    def with_abrupt_damage(self, time, fraction):
        """Schedule every spring to drop by ``fraction`` at ``time``."""
        ev = tuple((time, i, k * (1 - fraction))
                   for i, k in enumerate(self.stiffnesses))
        return replace(self, damage_schedule=self.damage_schedule + ev)

    def stiffness_at(self, time):
        k = self.stiffnesses.copy()
        for t, i, kn in self.damage_schedule:
            if t <= time:
                k[i] = kn
        return k

    def matrices(self, stiffnesses=None):
        k = self.stiffnesses if stiffnesses is None else stiffnesses
        return (np.diag(self.masses), _chain_matrix(self.dampers),
                _chain_matrix(k))

    def state_matrices(self, stiffnesses=None):
        """First-order form y = (x, v): y' = A y + b F with F on mass 1."""
        M, C, K = self.matrices(stiffnesses)
        n = self.n_dof
        minv = 1.0 / self.masses
        A = np.zeros((2 * n, 2 * n))
        A[:n, n:] = np.eye(n)
        A[n:, :n] = -minv[:, None] * K
        A[n:, n:] = -minv[:, None] * C
        b = np.zeros(2 * n)
        b[n] = minv[0]
        return A, b

    def events(self):
        """(time, stiffness vector) after each distinct event time."""
        out = []
        for t in sorted({t for t, _, _ in self.damage_schedule}):
            out.append((t, self.stiffness_at(t)))
        return out


def _chain_matrix(k):
    n = k.size
    K = np.zeros((n, n))
    for i in range(n):
        K[i, i] += k[i]
        if i > 0:
            K[i - 1, i - 1] += k[i]
            K[i, i - 1] -= k[i]
            K[i - 1, i] -= k[i]
    return K


def reference_structure():
    """Six 50 kg floors, 1.89e7 N/m springs, 10 N s/m dashpots."""
    return StructuralModel.uniform()


def eigenfrequencies(model, time=None):
    """Natural frequencies (Hz, ascending) of the model at ``time``."""
    k = model.stiffnesses if time is None else model.stiffness_at(time)
    M, _, K = model.matrices(k)
    try:
        lam = scipy.linalg.eigh(K, M, eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise DomainError(str(exc)) from exc
    if np.any(lam <= 0):
        raise DomainError("stiffness matrix is not positive definite")
    return np.sqrt(np.sort(lam)) / (2 * np.pi)


def white_noise(std, duration, rate, seed):
    """Zero-mean Gaussian force samples, held for 1/rate each."""
    check_positive("rate", rate)
    if std < 0:
        raise DomainError("std must be >= 0")
    n = int(round(duration * rate)) + 1
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) * std
    return SignalTrace(1.0 / rate, x, "white-noise force", "N")


def force_hold(excitation):
    """Zero-order hold of a force trace over its own sample intervals."""
    t = excitation.times
    return PiecewisePolynomial.zero_order_hold(t, excitation.samples[:-1])


def simulate(model, excitation, config=None, y0=None, return_velocity=False):
    """Integrate the structure under a force on mass 1.

    Returns one displacement SignalTrace per floor on the excitation grid.
    """
    config = config or IntegratorConfig()
    if excitation.samples.size < 2:
        raise DomainError("excitation needs at least two samples")
    A, b = model.state_matrices()
    events = [(t, model.state_matrices(k)[0]) for t, k in model.events()]
    t = excitation.times
    Y = integrate_linear(A, b, force_hold(excitation), t, y0=y0,
                         config=config, events=events)
    n = model.n_dof
    traces = [SignalTrace(excitation.dt, Y[:, i], f"floor {i + 1} displacement",
                          "m", excitation.t0) for i in range(n)]
    if return_velocity:
        vel = [SignalTrace(excitation.dt, Y[:, n + i],
                           f"floor {i + 1} velocity", "m/s", excitation.t0)
               for i in range(n)]
        return traces, vel
    return traces
