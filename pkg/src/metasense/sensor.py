"""Sensor chain driven by structural motion, and the classification measures.

The chain is integrated in coordinates relative to its moving base, so the
only input is the base acceleration.  All reported lengths are mm.
"""

import csv
import io
import json
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from ._validation import check_positive
from .exceptions import DegenerateClassificationError, DomainError
from .integrate import IntegratorConfig, PiecewisePolynomial, integrate_linear
from .structure import HarmonicSpec, SignalTrace, force_hold, white_noise

STEADY_FRACTION = 0.2


def _to_mm(trace):
    if trace.unit == "m":
        return trace.samples * 1e3
    if trace.unit == "mm":
        return trace.samples
    raise DomainError(f"expected a length trace, got unit {trace.unit!r}")


def chain_state_matrices(chain):
    """Relative-coordinate state form z = (x_r, v_r), z' = A z + b a_base."""
    M, C, K = chain.matrices()
    n = chain.n_dof
    minv = 1.0 / np.diag(M)
    A = np.zeros((2 * n, 2 * n))
    A[:n, n:] = np.eye(n)
    A[n:, :n] = -minv[:, None] * K
    A[n:, n:] = -minv[:, None] * C
    b = np.zeros(2 * n)
    b[n:] = -1.0
    return A, b


def _harmonic_acceleration(spec, t):
    """Piecewise cubic Hermite interpolant of the exact base acceleration."""
    a = spec.acceleration(t)
    j = spec.jerk(t)
    h = np.diff(t)
    a0, a1, j0, j1 = a[:-1], a[1:], j[:-1], j[1:]
    d = (a1 - a0) / h
    c2 = (3 * d - 2 * j0 - j1) / h
    c3 = (j0 + j1 - 2 * d) / h ** 2
    return PiecewisePolynomial(t, np.column_stack([a0, j0, c2, c3]))


def _trace_acceleration(trace):
    """Second derivative of a cubic spline through displacement samples (m)."""
    spline = CubicSpline(trace.times, trace.samples)
    acc = spline.derivative(2)
    # acc.c holds (linear, constant) coefficients in descending order
    return PiecewisePolynomial(acc.x, np.column_stack([acc.c[1], acc.c[0]]))


def sensor_states(chain, base_motion, config=None, duration=None,
                  sample_rate=None):
    """Absolute displacement (m) of every chain coordinate.

    ``base_motion`` is a SignalTrace of base displacement in m or mm, or a
    HarmonicSpec whose acceleration is then used exactly at the samples.
    """
    config = config or IntegratorConfig()
    A, b = chain_state_matrices(chain)
    if isinstance(base_motion, HarmonicSpec):
        rate = sample_rate or base_motion.sample_rate
        dur = duration or base_motion.duration
        t = np.arange(int(round(dur * rate)) + 1) / rate
        forcing = _harmonic_acceleration(base_motion, t)
        w = base_motion.displacement(t)
        dt = 1.0 / rate
        t0 = 0.0
    else:
        w = _to_mm(base_motion) * 1e-3
        t = base_motion.times
        if t.size < 4:
            raise DomainError("base motion needs at least four samples")
        forcing = _trace_acceleration(SignalTrace(base_motion.dt, w, "", "m",
                                                  base_motion.t0))
        dt = base_motion.dt
        t0 = base_motion.t0
    Y = integrate_linear(A, b, forcing, t, config=config)
    n = chain.n_dof
    return [SignalTrace(dt, Y[:, i] + w, f"sensor coordinate {i}", "m", t0)
            for i in range(n)]


def sensor_response(chain, base_motion, config=None, probe=None, **kw):
    """Probe absolute displacement (defaults to the last resonator)."""
    probe = chain.probe_default() if probe is None else probe
    tr = sensor_states(chain, base_motion, config, **kw)[probe]
    return SignalTrace(tr.dt, tr.samples, "probe displacement", "m", tr.t0)


@dataclass
class CoupledRun:
    structure: list      # floor displacements (m)
    sensor: list         # absolute sensor coordinates (m)
    probe_index: int

    @property
    def probe(self):
        return self.sensor[self.probe_index]

    @property
    def top(self):
        return self.structure[-1]


def coupled_matrices(model, chain, stiffnesses=None):
    """Structure plus sensor mounted on the top floor, one-way coupled."""
    As, bs = model.state_matrices(stiffnesses)
    Ac, bc = chain_state_matrices(chain)
    ns, nc = As.shape[0], Ac.shape[0]
    top = model.n_dof - 1
    acc_row = As[model.n_dof + top]
    acc_b = bs[model.n_dof + top]
    A = np.zeros((ns + nc, ns + nc))
    A[:ns, :ns] = As
    A[ns:, ns:] = Ac
    A[ns:, :ns] = np.outer(bc, acc_row)
    b = np.concatenate([bs, bc * acc_b])
    return A, b


def coupled_response(model, chain, excitation, config=None):
    """Run the structure under a force trace and the sensor on its top floor."""
    config = config or IntegratorConfig()
    A, b = coupled_matrices(model, chain)
    events = [(t, coupled_matrices(model, chain, k)[0])
              for t, k in model.events()]
    t = excitation.times
    Y = integrate_linear(A, b, force_hold(excitation), t, config=config,
                         events=events)
    n = model.n_dof
    dt, t0 = excitation.dt, excitation.t0
    structure = [SignalTrace(dt, Y[:, i], f"floor {i + 1} displacement", "m",
                             t0) for i in range(n)]
    top = Y[:, n - 1]
    sensor = [SignalTrace(dt, Y[:, 2 * n + i] + top, f"sensor coordinate {i}",
                          "m", t0) for i in range(chain.n_dof)]
    return CoupledRun(structure, sensor, chain.probe_default())


def _window_mask(trace, window):
    t = trace.times
    if window is None:
        return np.ones(t.size, dtype=bool)
    lo, hi = window
    eps = 1e-9 * max(trace.dt, 1.0)
    if lo < t[0] - eps or hi > t[-1] + eps or hi <= lo:
        raise DomainError(f"window {window} outside trace span")
    return (t >= lo - eps) & (t <= hi + eps)


def rmsd(trace, window=None):
    """Root mean square displacement in mm over samples inside window."""
    mask = _window_mask(trace, window)
    if mask.sum() < 2:
        raise DomainError("window holds fewer than two samples")
    x = _to_mm(trace)[mask]
    return float(np.sqrt(np.mean(x * x)))


def short_time_rmsd(trace, window_length=0.1):
    """RMSD over consecutive non-overlapping windows, stamped at window end."""
    if window_length < 2 * trace.dt * (1 - 1e-9):
        raise DomainError("window_length must be >= 2 dt")
    nw = int(round(window_length / trace.dt))
    nwin = trace.samples.size // nw
    if nwin < 1:
        raise DomainError("trace shorter than one window")
    x = _to_mm(trace)[:nwin * nw].reshape(nwin, nw)
    vals = np.sqrt(np.mean(x * x, axis=1))
    return SignalTrace(nw * trace.dt, vals, "short-time rmsd", "mm",
                       trace.t0 + nw * trace.dt)


def steady_amplitude(trace, fraction=STEADY_FRACTION):
    """max |x| (mm) over the final ``fraction`` of the trace."""
    if not 0 < fraction <= 1:
        raise DomainError("fraction must lie in (0, 1]")
    x = _to_mm(trace)
    start = int(np.floor(x.size * (1 - fraction)))
    return float(np.max(np.abs(x[start:])))


@dataclass(frozen=True)
class ClassificationResult:
    healthy_measure: float
    damaged_measure: float
    metric: tuple

    def to_dict(self):
        return {"healthy": self.healthy_measure,
                "damaged": self.damaged_measure,
                "metric": list(self.metric)}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def normalize_measures(h, d):
    if h < 0 or d < 0:
        raise DomainError("measures must be non-negative")
    total = h + d
    if total == 0:
        raise DegenerateClassificationError("both measures are zero")
    return ClassificationResult(float(h), float(d),
                                (float(h / total), float(d / total)))


def classify(healthy_probe, damaged_probe, measure="steady-amplitude",
             window=None):
    if measure == "steady-amplitude":
        if window is None:
            h = steady_amplitude(healthy_probe)
            d = steady_amplitude(damaged_probe)
        else:
            h = float(np.max(np.abs(_to_mm(healthy_probe)[
                _window_mask(healthy_probe, window)])))
            d = float(np.max(np.abs(_to_mm(damaged_probe)[
                _window_mask(damaged_probe, window)])))
    elif measure == "rmsd":
        h = rmsd(healthy_probe, window)
        d = rmsd(damaged_probe, window)
    else:
        raise DomainError(f"unknown measure {measure!r}")
    return normalize_measures(h, d)


def sensitivity_curve(model, chain, damage_levels, seed, duration=20.0,
                      noise_std=1000.0, rate=1000.0, config=None):
    """Sensor RMSD (mm) for each global stiffness-loss fraction.

    The same force realisation drives every level.
    """
    levels = [float(d) for d in damage_levels]
    for d in levels:
        if not 0 <= d <= 0.5:
            raise DomainError("damage levels must lie in [0, 0.5]")
    force = white_noise(noise_std, duration, rate, seed)
    out = []
    for d in levels:
        run = coupled_response(model.scaled(1 - d), chain, force, config)
        out.append((d, rmsd(run.probe)))
    return out


def table_csv(header, rows):
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([format(v, ".12g") for v in r])
    return buf.getvalue()


@dataclass(frozen=True)
class PiezoConfig:
    """Strain-proxy voltage: V = coupling * (x_j - x_i) / cell_pitch.

    ``element_location`` None means the last two plates of the chain, the
    free end where the element is bonded.
    """

    coupling_coefficient: float = 60.0
    element_location: tuple = None
    cell_pitch: float = 0.03

    def __post_init__(self):
        check_positive("coupling_coefficient", self.coupling_coefficient)
        check_positive("cell_pitch", self.cell_pitch)
        if self.element_location is not None:
            i, j = (int(v) for v in self.element_location)
            if i == j or min(i, j) < 0:
                raise DomainError(
                    "element_location needs two distinct coordinates")
            object.__setattr__(self, "element_location", (i, j))

    def resolve(self, n_coords):
        if self.element_location is not None:
            return self.element_location
        if n_coords < 4:
            raise DomainError("default location needs at least two cells")
        return (n_coords - 4, n_coords - 2)


def piezo_voltage(chain_response, config=None):
    """Voltage trace from the relative motion of the configured coordinates."""
    config = config or PiezoConfig()
    i, j = config.resolve(len(chain_response))
    if max(i, j) >= len(chain_response):
        raise DomainError("element_location outside the chain response")
    a, b = chain_response[i], chain_response[j]
    rel = (b.samples - a.samples) * (1e-3 if a.unit == "mm" else 1.0)
    v = config.coupling_coefficient * rel / config.cell_pitch
    return SignalTrace(a.dt, v, "piezo voltage", "V", a.t0)


def voltage_summary(volts, fraction=STEADY_FRACTION):
    """Peak |V| and RMS over the final ``fraction`` of the trace."""
    x = volts.samples[int(np.floor(volts.samples.size * (1 - fraction))):]
    return {"peak": float(np.max(np.abs(x))),
            "rms": float(np.sqrt(np.mean(x * x)))}
