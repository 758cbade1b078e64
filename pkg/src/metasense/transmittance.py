"""Finite-chain transmittance under base motion and band segmentation."""

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from ._validation import check_finite_array, check_positive
from .exceptions import DomainError, NoBDPError, SingularSystemError

PASS_MARGIN_DB = 3.0
ATTEN_MARGIN_DB = -10.0


def default_grid():
    """1 to 200 Hz at 0.05 Hz spacing."""
    return np.linspace(1.0, 200.0, 3981)


@dataclass(frozen=True)
class TransmittanceCurve:
    freq_grid: np.ndarray
    tau_db: np.ndarray
    probe_index: object = None

    def __post_init__(self):
        f = check_finite_array("freq_grid", self.freq_grid, min_len=2)
        tau = check_finite_array("tau_db", self.tau_db, min_len=2)
        if f.shape != tau.shape:
            raise DomainError("freq_grid and tau_db differ in length")
        if np.any(np.diff(f) <= 0):
            raise DomainError("freq_grid must be strictly increasing")
        object.__setattr__(self, "freq_grid", f)
        object.__setattr__(self, "tau_db", tau)

    def at(self, f):
        return np.interp(f, self.freq_grid, self.tau_db)

    def to_csv(self):
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["freq_hz", "tau_db"])
        for f, t in zip(self.freq_grid, self.tau_db):
            w.writerow([format(f, ".12g"), format(t, ".12g")])
        return buf.getvalue()


@dataclass(frozen=True)
class BandSegmentation:
    f1: float
    f_d: float
    f_h: float
    f2: float
    bdp: float

    @property
    def pass_band(self):
        return (self.f1, self.f_d)

    @property
    def transition_zone(self):
        return (self.f_d, self.f_h)

    @property
    def attenuation_band(self):
        return (self.f_h, self.f2)

    def to_dict(self):
        return {"f1": self.f1, "f_d": self.f_d, "f_h": self.f_h,
                "f2": self.f2, "bdp": self.bdp}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def _undamped_frequencies(M, K):
    from scipy.linalg import eigh
    return np.sqrt(np.abs(eigh(K, M, eigvals_only=True))) / (2 * np.pi)


def complex_response(chain, freq_grid):
    """Absolute displacement per unit base amplitude, shape (n_f, n_dof).

    Relative coordinates x_r = x - w obey M x_r'' + C x_r' + K x_r = -M 1 w''.
    With C proportional to K and dashpots parallel to the springs this is
    exactly the base-driven chain.
    """
    M, C, K = chain.matrices()
    w = 2 * np.pi * np.asarray(freq_grid, dtype=float)
    if chain.zeta == 0:
        fn = _undamped_frequencies(M, K)
        hit = np.isclose(np.asarray(freq_grid)[:, None], fn[None, :],
                         rtol=1e-12, atol=0.0)
        if np.any(hit):
            raise SingularSystemError(
                "undamped chain driven at a natural frequency")
    Z = (K[None, :, :] + 1j * w[:, None, None] * C[None, :, :]
         - (w ** 2)[:, None, None] * M[None, :, :])
    rhs = (w ** 2)[:, None] * np.diag(M)[None, :]
    try:
        xr = np.linalg.solve(Z, rhs[..., None].astype(complex))[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    X = xr + 1.0
    if not np.all(np.isfinite(X)):
        raise SingularSystemError("non-finite response")
    return X


def frequency_response(chain, freq_grid=None, base_amplitude=1.0, probe=None):
    """Transmittance curve tau = 20 log10 |X_probe| / |W0| on freq_grid.

    ``probe`` is a chain coordinate index, or "base" for the driven end.
    The system is linear so base_amplitude only needs to be non-zero.
    """
    check_positive("base_amplitude", abs(base_amplitude))
    if freq_grid is None:
        freq_grid = default_grid()
    freq_grid = check_finite_array("freq_grid", freq_grid, min_len=2)
    if np.any(freq_grid <= 0):
        raise DomainError("frequencies must be positive")
    if probe is None:
        probe = chain.probe_default()
    if probe == "base":
        return TransmittanceCurve(freq_grid, np.zeros_like(freq_grid), "base")
    if not 0 <= int(probe) < chain.n_dof:
        raise DomainError(f"probe index {probe} outside chain")
    X = complex_response(chain, freq_grid)
    tau = 20 * np.log10(np.abs(X[:, int(probe)]))
    return TransmittanceCurve(freq_grid, tau, int(probe))


def extract_bdp(curve):
    """Segment a curve and locate the binary decision point.

    bdp   first downward 0 dB crossing after the global maximum, by linear
          interpolation between the bracketing grid points.
    f1    start of the contiguous tau >= 0 region that holds the maximum.
    f_d   last grid point before the crossing with tau >= +3 dB (falls back
          to the last non-negative point when the peak is lower than that).
    f_h   first grid point after the crossing with tau <= -10 dB, else the
          grid point of the minimum after the crossing.
    f2    grid end.
    """
    f, tau = curve.freq_grid, curve.tau_db
    imax = int(np.argmax(tau))
    if tau[imax] <= 0:
        raise NoBDPError("curve never rises above 0 dB")
    down = np.nonzero((tau[imax:-1] > 0) & (tau[imax + 1:] <= 0))[0]
    if down.size == 0:
        raise NoBDPError("no downward 0 dB crossing after the peak")
    i = imax + int(down[0])
    bdp = f[i] + tau[i] / (tau[i] - tau[i + 1]) * (f[i + 1] - f[i])

    j = imax
    while j > 0 and tau[j - 1] >= 0:
        j -= 1
    f1 = f[j]

    above = np.nonzero(tau[imax:i + 1] >= PASS_MARGIN_DB)[0]
    f_d = f[imax + int(above[-1])] if above.size else f[i]

    after = np.nonzero(tau[i + 1:] <= ATTEN_MARGIN_DB)[0]
    if after.size:
        f_h = f[i + 1 + int(after[0])]
    else:
        f_h = f[i + 1 + int(np.argmin(tau[i + 1:]))]
    return BandSegmentation(float(f1), float(f_d), float(f_h), float(f[-1]),
                            float(bdp))


def chain_bdp(chain, freq_grid=None):
    return extract_bdp(frequency_response(chain, freq_grid)).bdp
