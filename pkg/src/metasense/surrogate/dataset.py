"""Label geometry samples with the decision point of their lumped chain."""

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array

from .. import __version__
from ..exceptions import MetasenseError
from ..lattice import PLA, REFERENCE_GEOMETRY, STEEL, reduce_geometry
from ..transmittance import default_grid, extract_bdp, frequency_response

COLUMNS = ("h_mm", "r_mm", "e_mm", "mu_mm")


def label_geometry(g_mm, base_geometry=REFERENCE_GEOMETRY, plate=PLA,
                   resonator=STEEL, n_cells=5, zeta=0.01, grid=None):
    """Decision point (Hz) for one (h, r, e, mu) vector in mm."""
    geom = base_geometry.with_design_mm(g_mm)
    chain = reduce_geometry(geom, plate, resonator, n_cells, zeta)
    return extract_bdp(frequency_response(chain, grid)).bdp


@dataclass
class Dataset:
    X: np.ndarray                      # (n, 4) geometry in mm
    bdp: np.ndarray                    # (n,) Hz, nan where unlabeled
    status: list                       # "ok" or a failure tag per row
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return self.X.shape[0]

    @property
    def ok(self):
        return np.array([s == "ok" for s in self.status], dtype=bool)

    def usable(self):
        m = self.ok
        return self.X[m], self.bdp[m]

    def to_csv(self):
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(COLUMNS) + ["bdp_hz", "status"])
        for g, y, s in zip(self.X, self.bdp, self.status):
            w.writerow([format(v, ".12g") for v in g]
                       + ["" if np.isnan(y) else format(y, ".12g"), s])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, provenance=None):
        rows = list(csv.DictReader(io.StringIO(text)))
        X = np.array([[float(r[c]) for c in COLUMNS] for r in rows]).reshape(
            -1, len(COLUMNS))
        y = np.array([float(r["bdp_hz"]) if r["bdp_hz"] else np.nan
                      for r in rows])
        return cls(X, y, [r["status"] for r in rows], provenance or {})


def generate_dataset(samples, base_geometry=REFERENCE_GEOMETRY, plate=PLA,
                     resonator=STEEL, n_cells=5, zeta=0.01, grid=None,
                     provenance=None):
    """Label every sample; failures are flagged, never raised."""
    X = np.asarray(samples, dtype=float).reshape(-1, len(COLUMNS))
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    bdp = np.full(X.shape[0], np.nan)
    status = []
    for i, g in enumerate(X):
        try:
            bdp[i] = label_geometry(g, base_geometry, plate, resonator,
                                    n_cells, zeta, grid)
            status.append("ok")
        except MetasenseError as exc:
            status.append(type(exc).__name__)
    prov = {"package_version": __version__, "n_cells": int(n_cells),
            "zeta": float(zeta),
            "grid": {"start_hz": float(grid[0]), "stop_hz": float(grid[-1]),
                     "points": int(grid.size)},
            "plate": plate.name, "resonator": resonator.name}
    prov.update(provenance or {})
    return Dataset(X, bdp, status, prov)


class BDPLabeler(TransformerMixin, BaseEstimator):
    """Transformer mapping (h, r, e, mu) rows in mm to decision points.

    Rows without a decision point come back as nan.
    """

    def __init__(self, n_cells=5, zeta=0.01, grid=None):
        self.n_cells = n_cells
        self.zeta = zeta
        self.grid = grid

    def fit(self, X, y=None):
        X = check_array(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        X = check_array(X)
        ds = generate_dataset(X, n_cells=self.n_cells, zeta=self.zeta,
                              grid=self.grid)
        return ds.bdp[:, None]
