"""Gradient-based geometry recovery through a frozen surrogate."""

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import DomainError, NonConvergenceError
from .optim import Adam

DEFAULT_THRESHOLD = 1e-3


@dataclass
class InverseConfig:
    target_bdp: float
    trials: int = 5
    iterations: int = 2000
    learning_rate: float = 1e-3
    fixed: dict = field(default_factory=dict)   # feature index -> value (mm)
    bounds: tuple = None                        # (lo, hi) scaled arrays
    threshold: float = DEFAULT_THRESHOLD
    seed: int = 0

    def __post_init__(self):
        if int(self.trials) < 1 or int(self.iterations) < 1:
            raise DomainError("trials and iterations must be >= 1")
        if self.learning_rate <= 0:
            raise DomainError("learning_rate must be > 0")


@dataclass
class InverseResult:
    geometry_mm: np.ndarray
    loss: float
    best_trial: int
    trials: list        # per trial: loss history, final geometry, final loss

    def to_dict(self):
        return {"geometry_mm": self.geometry_mm.tolist(), "loss": self.loss,
                "best_trial": self.best_trial,
                "trials": [{"final_loss": t["final_loss"],
                            "geometry_mm": t["geometry_mm"].tolist(),
                            "loss_history": t["loss_history"].tolist()}
                           for t in self.trials]}


def inverse_design(model, config):
    """Minimise (f(g) - y*)^2 over the free inputs, several random restarts.

    Loss and bounds are in scaled units.  Raises NonConvergenceError (with
    ``best`` set) when no trial ends below ``config.threshold``.
    """
    d = model.n_features_in_
    fixed = {int(k): float(v) for k, v in config.fixed.items()}
    if any(not 0 <= k < d for k in fixed):
        raise DomainError("fixed index outside the model input dimension")
    free = np.array([k not in fixed for k in range(d)])
    if not free.any():
        raise DomainError("no free parameter left to design")
    if config.bounds is None:
        lo, hi = model.x_min_scaled_.copy(), model.x_max_scaled_.copy()
    else:
        lo, hi = (np.asarray(b, dtype=float) for b in config.bounds)
    y_lo, y_hi = model.y_range_
    if not y_lo <= config.target_bdp <= y_hi:
        warnings.warn(f"target {config.target_bdp:g} Hz lies outside the "
                      f"training label range [{y_lo:g}, {y_hi:g}]")
    y_t = model.scale_target(config.target_bdp)

    base = np.zeros(d)
    if fixed:
        raw = np.zeros((1, d))
        for k, v in fixed.items():
            raw[0, k] = v
        scaled = model.scale_inputs(raw)[0]
        for k in fixed:
            base[k] = scaled[k]

    seeds = np.random.SeedSequence(config.seed).spawn(int(config.trials))
    trials = []
    for ss in seeds:
        rng = np.random.default_rng(ss)
        g = base.copy()
        g[free] = np.clip(rng.standard_normal(int(free.sum())), lo[free],
                          hi[free])
        opt = Adam(int(free.sum()), lr=config.learning_rate)
        hist = np.empty(int(config.iterations))
        x = g[free].copy()
        for it in range(int(config.iterations)):
            g[free] = x
            r = model.predict_scaled(g[None, :])[0] - y_t
            hist[it] = r * r
            grad = 2 * r * model.input_gradient(g[None, :])[0]
            opt.step(x, grad[free])
            np.clip(x, lo[free], hi[free], out=x)
        g[free] = x
        r = model.predict_scaled(g[None, :])[0] - y_t
        final = float(r * r)
        trials.append({"final_loss": final, "scaled": g.copy(),
                       "geometry_mm": model.unscale_inputs(g)[0],
                       "loss_history": hist})

    # lowest loss wins, ties go to the earlier trial
    best = min(range(len(trials)), key=lambda i: (trials[i]["final_loss"], i))
    res = InverseResult(trials[best]["geometry_mm"], trials[best]["final_loss"],
                        best, trials)
    if res.loss > config.threshold:
        raise NonConvergenceError(
            f"best inverse-design loss {res.loss:.3g} above threshold "
            f"{config.threshold:.3g}", best=res)
    return res
