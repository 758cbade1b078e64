"""Forward surrogate: geometry (mm) -> decision point (Hz)."""

import json

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.preprocessing import StandardScaler
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..exceptions import DomainError, TrainingDivergenceError
from .network import ResidualMLP
from .optim import Adam, ReduceLROnPlateau

FORMAT_NAME = "metasense-surrogate"
FORMAT_VERSION = 1


def _scaler_from(mean, scale):
    s = StandardScaler()
    s.mean_ = np.asarray(mean, dtype=float)
    s.scale_ = np.asarray(scale, dtype=float)
    s.var_ = s.scale_ ** 2
    s.n_features_in_ = s.mean_.size
    s.n_samples_seen_ = 0
    return s


class SurrogateRegressor(RegressorMixin, BaseEstimator):
    """Residual MLP regressor trained with Adam on standardised data.

    Inputs get fresh Gaussian noise (``noise_std``, scaled units) every
    epoch.  The returned model is the checkpoint with the lowest loss on the
    held-out split.
    """

    def __init__(self, width=64, n_blocks=2, epochs=5000, batch_size=32,
                 learning_rate=1e-3, l2_lambda=1e-3, noise_std=0.01,
                 plateau_factor=0.5, plateau_patience=50, val_fraction=0.2,
                 random_state=0):
        self.width = width
        self.n_blocks = n_blocks
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.l2_lambda = l2_lambda
        self.noise_std = noise_std
        self.plateau_factor = plateau_factor
        self.plateau_patience = plateau_patience
        self.val_fraction = val_fraction
        self.random_state = random_state

    def _validate_params(self):
        for name in ("width", "n_blocks", "epochs", "batch_size"):
            if int(getattr(self, name)) < 1:
                raise DomainError(f"{name} must be >= 1")
        for name in ("learning_rate", "plateau_factor"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be > 0")
        if self.l2_lambda < 0 or self.noise_std < 0:
            raise DomainError("l2_lambda and noise_std must be >= 0")
        if not 0 < self.val_fraction < 1:
            raise DomainError("val_fraction must lie in (0, 1)")

    def split_indices(self, n):
        rng = np.random.default_rng(self.random_state)
        perm = rng.permutation(n)
        n_val = max(1, int(round(self.val_fraction * n)))
        return np.sort(perm[n_val:]), np.sort(perm[:n_val])

    def fit(self, X, y):
        self._validate_params()
        X, y = check_X_y(X, y, y_numeric=True)
        y = y.astype(float)
        n = X.shape[0]
        if n < 2:
            raise DomainError("need at least two samples")
        tr, va = self.split_indices(n)
        self.train_index_, self.val_index_ = tr, va
        self.x_scaler_ = StandardScaler().fit(X[tr])
        self.y_scaler_ = StandardScaler().fit(y[tr, None])
        Xs = self.x_scaler_.transform(X)
        ys = self.y_scaler_.transform(y[:, None])[:, 0]
        Xt, yt, Xv, yv = Xs[tr], ys[tr], Xs[va], ys[va]

        rng = np.random.default_rng(self.random_state)
        net = ResidualMLP(X.shape[1], self.width, self.n_blocks).init(rng)
        opt = Adam(net.size, lr=self.learning_rate)
        sched = ReduceLROnPlateau(opt, self.plateau_factor,
                                  self.plateau_patience)
        hist = {"train_loss": [], "val_loss": [], "lr": []}
        best_val, best_theta, best_epoch = np.inf, net.theta.copy(), -1
        bs = int(self.batch_size)
        for epoch in range(int(self.epochs)):
            Xn = Xt + rng.standard_normal(Xt.shape) * self.noise_std
            order = rng.permutation(Xt.shape[0])
            tot = 0.0
            for start in range(0, order.size, bs):
                idx = order[start:start + bs]
                loss, grad = net.loss_and_grad(Xn[idx], yt[idx],
                                               self.l2_lambda)
                if not np.isfinite(loss):
                    raise TrainingDivergenceError(
                        f"non-finite training loss in epoch {epoch}", epoch)
                opt.step(net.theta, grad)
                tot += loss * idx.size
            train_loss = tot / order.size
            r = net.predict(Xv) - yv
            val_loss = float(np.mean(r * r))
            if not np.isfinite(val_loss):
                raise TrainingDivergenceError(
                    f"non-finite validation loss in epoch {epoch}", epoch)
            hist["train_loss"].append(train_loss)
            hist["val_loss"].append(val_loss)
            hist["lr"].append(opt.lr)
            if val_loss < best_val:
                best_val, best_theta, best_epoch = val_loss, net.theta.copy(), epoch
            sched.step(val_loss)

        net.theta = best_theta
        self.net_ = net
        self.n_features_in_ = X.shape[1]
        self.x_min_scaled_ = Xt.min(axis=0)
        self.x_max_scaled_ = Xt.max(axis=0)
        self.y_range_ = (float(y[tr].min()), float(y[tr].max()))

        def rmse(idx, scaled):
            p = self.predict_scaled(Xs[idx])
            if scaled:
                return float(np.sqrt(np.mean((p - ys[idx]) ** 2)))
            pu = self.y_scaler_.inverse_transform(p[:, None])[:, 0]
            return float(np.sqrt(np.mean((pu - y[idx]) ** 2)))

        self.report_ = {
            "history": hist, "best_epoch": best_epoch,
            "best_val_loss": best_val, "n_train": int(tr.size),
            "n_val": int(va.size),
            "train_rmse": rmse(tr, False), "test_rmse": rmse(va, False),
            "train_rmse_scaled": rmse(tr, True),
            "test_rmse_scaled": rmse(va, True),
        }
        return self

    def predict_scaled(self, Xs):
        check_is_fitted(self, "net_")
        return self.net_.predict(np.atleast_2d(Xs))

    def predict(self, X):
        check_is_fitted(self, "net_")
        X = check_array(X)
        p = self.predict_scaled(self.x_scaler_.transform(X))
        return self.y_scaler_.inverse_transform(p[:, None])[:, 0]

    def input_gradient(self, Xs):
        """Gradient of the scaled output w.r.t. scaled inputs, per row."""
        check_is_fitted(self, "net_")
        return self.net_.input_gradient(Xs)

    def scale_inputs(self, X):
        return self.x_scaler_.transform(np.atleast_2d(X))

    def unscale_inputs(self, Xs):
        return self.x_scaler_.inverse_transform(np.atleast_2d(Xs))

    def scale_target(self, y):
        return float(self.y_scaler_.transform([[y]])[0, 0])

    # --- persistence -------------------------------------------------------
    def to_dict(self):
        check_is_fitted(self, "net_")
        return {
            "format": FORMAT_NAME, "version": FORMAT_VERSION,
            "params": self.get_params(),
            "architecture": self.net_.descriptor(),
            "x_scaler": {"mean": self.x_scaler_.mean_.tolist(),
                         "scale": self.x_scaler_.scale_.tolist()},
            "y_scaler": {"mean": self.y_scaler_.mean_.tolist(),
                         "scale": self.y_scaler_.scale_.tolist()},
            "x_bounds_scaled": {"min": self.x_min_scaled_.tolist(),
                                "max": self.x_max_scaled_.tolist()},
            "y_range": list(self.y_range_),
            "theta": self.net_.theta.tolist(),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != FORMAT_NAME or d.get("version") != FORMAT_VERSION:
            raise DomainError("unrecognised surrogate file format")
        model = cls(**d["params"])
        arch = d["architecture"]
        net = ResidualMLP(arch["input_dim"], arch["width"], arch["n_blocks"])
        if net.descriptor()["layers"] != [[n, list(s)] for n, s in arch["layers"]]:
            raise DomainError("architecture descriptor does not match layout")
        theta = np.asarray(d["theta"], dtype=float)
        if theta.size != net.size:
            raise DomainError("weight vector does not match architecture")
        net.theta = theta
        model.net_ = net
        model.n_features_in_ = net.input_dim
        model.x_scaler_ = _scaler_from(**d["x_scaler"])
        model.y_scaler_ = _scaler_from(**d["y_scaler"])
        if np.any(model.x_scaler_.scale_ <= 0) or np.any(
                model.y_scaler_.scale_ <= 0):
            raise DomainError("scaler scales must be > 0")
        model.x_min_scaled_ = np.asarray(d["x_bounds_scaled"]["min"])
        model.x_max_scaled_ = np.asarray(d["x_bounds_scaled"]["max"])
        model.y_range_ = tuple(d["y_range"])
        return model

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))
