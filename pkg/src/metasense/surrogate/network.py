"""Residual tanh network with hand-written backpropagation.

Layout: x -> tanh(W0 x + b0) -> n_blocks x [h + Wb tanh(Wa h + ba) + bb]
-> wo h + bo.  Parameters live in one flat float64 vector so optimisers and
finite-difference checks can treat them uniformly.
"""

import numpy as np


class ResidualMLP:
    def __init__(self, input_dim=4, width=64, n_blocks=2):
        self.input_dim = int(input_dim)
        self.width = int(width)
        self.n_blocks = int(n_blocks)
        self._layout = self._build_layout()
        self.size = sum(int(np.prod(s)) for _, s in self._layout)
        self.theta = np.zeros(self.size)

    def _build_layout(self):
        d, w = self.input_dim, self.width
        layout = [("W0", (w, d)), ("b0", (w,))]
        for k in range(self.n_blocks):
            layout += [(f"Wa{k}", (w, w)), (f"ba{k}", (w,)),
                       (f"Wb{k}", (w, w)), (f"bb{k}", (w,))]
        layout += [("wo", (1, w)), ("bo", (1,))]
        return layout

    def descriptor(self):
        return {"input_dim": self.input_dim, "width": self.width,
                "n_blocks": self.n_blocks, "activation": "tanh",
                "layers": [[name, list(shape)] for name, shape in self._layout]}

    def views(self, theta=None):
        """Dict of named array views into a flat parameter vector."""
        theta = self.theta if theta is None else theta
        out, i = {}, 0
        for name, shape in self._layout:
            n = int(np.prod(shape))
            out[name] = theta[i:i + n].reshape(shape)
            i += n
        return out

    def residual_mask(self):
        """True for parameters that belong to the residual blocks."""
        mask = np.zeros(self.size, dtype=bool)
        i = 0
        for name, shape in self._layout:
            n = int(np.prod(shape))
            if name[:2] in ("Wa", "ba", "Wb", "bb"):
                mask[i:i + n] = True
            i += n
        return mask

    def init(self, rng):
        p = self.views()
        d, w = self.input_dim, self.width
        p["W0"][:] = rng.standard_normal((w, d)) / np.sqrt(d)
        for k in range(self.n_blocks):
            p[f"Wa{k}"][:] = rng.standard_normal((w, w)) / np.sqrt(w)
            # small second layer so each block starts near the identity
            p[f"Wb{k}"][:] = rng.standard_normal((w, w)) * 0.1 / np.sqrt(w)
        p["wo"][:] = rng.standard_normal((1, w)) / np.sqrt(w)
        return self

    def forward(self, X, theta=None):
        """Return (predictions (n,), cache for backward)."""
        p = self.views(theta)
        h = np.tanh(X @ p["W0"].T + p["b0"])
        cache = [h]
        for k in range(self.n_blocks):
            z = np.tanh(h @ p[f"Wa{k}"].T + p[f"ba{k}"])
            h = h + z @ p[f"Wb{k}"].T + p[f"bb{k}"]
            cache += [z, h]
        y = (h @ p["wo"].T)[:, 0] + p["bo"][0]
        return y, cache

    def predict(self, X, theta=None):
        return self.forward(X, theta)[0]

    def backward(self, X, cache, dy, theta=None, want_input=False):
        """Gradient w.r.t. parameters (and optionally inputs) given dL/dy."""
        p = self.views(theta)
        grad = np.zeros(self.size)
        g = self.views(grad)
        hs = cache
        h_last = hs[-1]
        dy = dy[:, None]
        g["wo"][:] = dy.T @ h_last
        g["bo"][0] = dy.sum()
        dh = dy @ p["wo"]
        for k in reversed(range(self.n_blocks)):
            z = hs[1 + 2 * k]
            h_in = hs[2 * k]
            g[f"Wb{k}"][:] = dh.T @ z
            g[f"bb{k}"][:] = dh.sum(axis=0)
            dz = (dh @ p[f"Wb{k}"]) * (1 - z * z)
            g[f"Wa{k}"][:] = dz.T @ h_in
            g[f"ba{k}"][:] = dz.sum(axis=0)
            dh = dh + dz @ p[f"Wa{k}"]
        h0 = hs[0]
        da = dh * (1 - h0 * h0)
        g["W0"][:] = da.T @ X
        g["b0"][:] = da.sum(axis=0)
        if want_input:
            return grad, da @ p["W0"]
        return grad

    def input_gradient(self, X, theta=None):
        """d y / d x for each row of X, shape (n, input_dim)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        _, cache = self.forward(X, theta)
        _, dx = self.backward(X, cache, np.ones(X.shape[0]), theta,
                              want_input=True)
        return dx

    def loss_and_grad(self, X, y, l2, theta=None):
        """Mean squared error plus l2 * ||residual params||^2."""
        theta = self.theta if theta is None else theta
        pred, cache = self.forward(X, theta)
        r = pred - y
        n = X.shape[0]
        mask = self.residual_mask()
        reg = theta[mask]
        loss = float(np.mean(r * r) + l2 * np.dot(reg, reg))
        grad = self.backward(X, cache, 2.0 * r / n, theta)
        grad[mask] += 2.0 * l2 * reg
        return loss, grad
