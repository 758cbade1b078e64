"""Dormand-Prince 5(4) integration of linear systems y' = A y + b u(t).

The forcing u(t) is a scalar piecewise polynomial of degree <= 3 defined on
breakpoint intervals.  Steps never cross a breakpoint, so discontinuities in
u (zero-order hold) or in A (damage events) are resolved exactly.  The hot
loop is compiled with numba.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .exceptions import DomainError, IntegrationError

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.zeros((7, 7))
_A[1, 0] = 1 / 5
_A[2, :2] = [3 / 40, 9 / 40]
_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
_B5 = _A[6].copy()
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 10.0


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and step controls. ``fixed_step`` disables adaptivity."""

    rtol: float = 1e-8
    atol: float = 1e-10
    max_steps: int = 10_000_000
    fixed_step: float = 0.0

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise DomainError("rtol and atol must be positive")
        if self.fixed_step < 0:
            raise DomainError("fixed_step must be >= 0")
        if self.max_steps < 1:
            raise DomainError("max_steps must be >= 1")


@dataclass(frozen=True)
class PiecewisePolynomial:
    """Scalar forcing u(t) = sum_j coef[k, j] (t - t[k])^j on [t[k], t[k+1]]."""

    t: np.ndarray
    coef: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        coef = np.asarray(self.coef, dtype=float)
        if coef.ndim == 1:
            coef = coef[:, None]
        if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
            raise DomainError("breakpoints must be strictly increasing, >= 2")
        if coef.shape[0] != t.size - 1 or coef.shape[1] > 4:
            raise DomainError("coef must have shape (len(t) - 1, <= 4)")
        padded = np.zeros((coef.shape[0], 4))
        padded[:, :coef.shape[1]] = coef
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "coef", padded)

    @classmethod
    def zero_order_hold(cls, t, values):
        """Hold values[k] on [t[k], t[k+1]); len(values) == len(t) - 1."""
        return cls(t, np.asarray(values, dtype=float)[:, None])

    @classmethod
    def zeros(cls, t):
        t = np.asarray(t, dtype=float)
        return cls(t, np.zeros((t.size - 1, 1)))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(self.t, t, side="right") - 1,
                    0, self.coef.shape[0] - 1)
        s = t - self.t[k]
        c = self.coef[k]
        return c[..., 0] + s * (c[..., 1] + s * (c[..., 2] + s * c[..., 3]))


@njit(cache=True)
def _rhs(A, b, c, s, y, out):
    u = c[0] + s * (c[1] + s * (c[2] + s * c[3]))
    n = y.shape[0]
    for i in range(n):
        acc = b[i] * u
        for j in range(n):
            acc += A[i, j] * y[j]
        out[i] = acc


@njit(cache=True)
def _err_norm(y, ynew, errv, rtol, atol):
    n = y.shape[0]
    tot = 0.0
    for i in range(n):
        sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
        tot += (errv[i] / sc) ** 2
    return np.sqrt(tot / n)


@njit(cache=True)
def _dp45(A, b, tb, coef, record, y0, rtol, atol, fixed_h, max_steps,
          ca, cc, b5, e, h_init, out):
    """Integrate over all breakpoint intervals; returns (status, t_fail, h).

    ``y0`` is overwritten with the final state.
    status 0 ok, 1 step underflow, 2 step budget exhausted.  ``record[k]``
    gives the output row for breakpoint k, or -1.
    """
    n = y0.shape[0]
    y = y0.copy()
    ynew = np.empty(n)
    ytmp = np.empty(n)
    errv = np.empty(n)
    K = np.zeros((7, n))
    n_int = tb.shape[0] - 1
    if record[0] >= 0:
        out[record[0], :] = y
    h = h_init
    steps = 0
    eps = 2.220446049250313e-16
    for k in range(n_int):
        t0 = tb[k]
        t1 = tb[k + 1]
        c = coef[k]
        t = t0
        _rhs(A, b, c, 0.0, y, K[0])
        if fixed_h > 0.0:
            h = fixed_h
        elif h <= 0.0:
            # simple starting-step heuristic
            d0 = 0.0
            d1 = 0.0
            for i in range(n):
                sc = atol + rtol * abs(y[i])
                d0 += (y[i] / sc) ** 2
                d1 += (K[0, i] / sc) ** 2
            d0 = np.sqrt(d0 / n)
            d1 = np.sqrt(d1 / n)
            if d0 < 1e-5 or d1 < 1e-5:
                h = 1e-6
            else:
                h = 0.01 * d0 / d1
            h = min(h, t1 - t0)
        last_ok = True
        while t < t1:
            remaining = t1 - t
            final = False
            hs = h
            if hs >= remaining * (1.0 - 1e-12):
                hs = remaining
                final = True
            if hs < 16.0 * eps * max(abs(t), 1.0) and not final:
                return 1, t, h
            steps += 1
            if steps > max_steps:
                return 2, t, h
            s0 = t - t0
            for st in range(1, 7):
                for i in range(n):
                    acc = y[i]
                    for j in range(st):
                        acc += hs * ca[st, j] * K[j, i]
                    ytmp[i] = acc
                _rhs(A, b, c, s0 + cc[st] * hs, ytmp, K[st])
            # stage 7 evaluates at the 5th-order solution (FSAL)
            for i in range(n):
                ynew[i] = ytmp[i]
                acc = 0.0
                for j in range(7):
                    acc += e[j] * K[j, i]
                errv[i] = hs * acc
            if fixed_h > 0.0:
                err = 0.0
            else:
                err = _err_norm(y, ynew, errv, rtol, atol)
            if err <= 1.0:
                if final:
                    t = t1
                else:
                    t = t + hs
                for i in range(n):
                    y[i] = ynew[i]
                    K[0, i] = K[6, i]
                if fixed_h <= 0.0:
                    if err == 0.0:
                        fac = _FAC_MAX
                    else:
                        fac = min(_FAC_MAX, max(_FAC_MIN, _SAFETY * err ** -0.2))
                    if not last_ok:
                        fac = min(fac, 1.0)
                    # a step clipped to the interval end says little about h
                    if not (final and hs < h):
                        h = hs * fac
                last_ok = True
            else:
                fac = max(_FAC_MIN, _SAFETY * err ** -0.2)
                h = hs * fac
                last_ok = False
        if record[k + 1] >= 0:
            out[record[k + 1], :] = y
    for i in range(n):
        y0[i] = y[i]
    return 0, 0.0, h


def _check_system(A, b, y0):
    A = np.ascontiguousarray(A, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or b.shape != (n,):
        raise DomainError("A must be (n, n) and b must be (n,)")
    y0 = np.zeros(n) if y0 is None else np.asarray(y0, dtype=float).copy()
    if y0.shape != (n,):
        raise DomainError("y0 has the wrong shape")
    return A, b, y0


def integrate_linear(A, b, forcing, t_out, y0=None, config=None, events=()):
    """Integrate y' = A y + b u(t) and return y at the times ``t_out``.

    ``forcing`` is a PiecewisePolynomial covering [t_out[0], t_out[-1]].
    ``events`` is a sequence of (time, A_new) pairs; A switches to A_new at
    that time and the step restarts there.  Output times, forcing breakpoints
    and event times are all merged into the breakpoint set.
    """
    config = config or IntegratorConfig()
    A, b, y = _check_system(A, b, y0)
    t_out = np.asarray(t_out, dtype=float)
    if t_out.ndim != 1 or t_out.size < 1 or np.any(np.diff(t_out) <= 0):
        raise DomainError("t_out must be strictly increasing")
    events = sorted(((float(te), np.ascontiguousarray(Ae, dtype=float))
                     for te, Ae in events), key=lambda ev: ev[0])
    for te, Ae in events:
        if Ae.shape != A.shape:
            raise DomainError("event matrix shape mismatch")
    t_start, t_end = t_out[0], t_out[-1]
    if forcing.t[0] > t_start + 1e-12 or forcing.t[-1] < t_end - 1e-12:
        raise DomainError("forcing does not cover the output span")

    inner = forcing.t[(forcing.t > t_start) & (forcing.t < t_end)]
    ev_t = np.array([te for te, _ in events if t_start < te < t_end])
    tb = np.unique(np.concatenate([t_out, inner, ev_t]))
    # merge breakpoints closer than round-off onto a single node
    keep = np.concatenate([[True], np.diff(tb) > 1e-12 * max(1.0, abs(t_end))])
    tb = tb[keep]
    out_rows = np.searchsorted(tb, t_out)
    if np.any(np.abs(tb[np.minimum(out_rows, tb.size - 1)] - t_out) > 1e-9):
        raise DomainError("output times could not be aligned to breakpoints")

    # forcing coefficients re-expanded about each breakpoint interval start
    kidx = np.clip(np.searchsorted(forcing.t, tb[:-1], side="right") - 1,
                   0, forcing.coef.shape[0] - 1)
    shift = tb[:-1] - forcing.t[kidx]
    c = forcing.coef[kidx]
    coef = np.empty_like(c)
    coef[:, 0] = c[:, 0] + shift * (c[:, 1] + shift * (c[:, 2] + shift * c[:, 3]))
    coef[:, 1] = c[:, 1] + shift * (2 * c[:, 2] + 3 * shift * c[:, 3])
    coef[:, 2] = c[:, 2] + 3 * shift * c[:, 3]
    coef[:, 3] = c[:, 3]

    record = np.full(tb.size, -1, dtype=np.int64)
    record[out_rows] = np.arange(t_out.size)
    out = np.zeros((t_out.size, A.shape[0]))

    # split into segments at event times, each with its own A
    seg_mats = [A]
    cuts = [0]
    for te, Ae in events:
        if te <= t_start:
            seg_mats[0] = Ae
            continue
        if te >= t_end:
            break
        cuts.append(int(np.searchsorted(tb, te)))
        seg_mats.append(Ae)
    cuts.append(tb.size - 1)

    h = 0.0
    for si, Aseg in enumerate(seg_mats):
        i0, i1 = cuts[si], cuts[si + 1]
        rec = record[i0:i1 + 1].copy()
        if si > 0:
            rec[0] = -1  # already written by the previous segment
        status, t_fail, h = _dp45(
            Aseg, b, tb[i0:i1 + 1], coef[i0:i1], rec, y,
            config.rtol, config.atol, config.fixed_step, config.max_steps,
            _A, _C, _B5, _E, 0.0 if si == 0 else h, out)
        if status == 1:
            raise IntegrationError(f"step size underflow at t={t_fail:.9g} s",
                                   time=t_fail)
        if status == 2:
            raise IntegrationError(f"step budget exhausted at t={t_fail:.9g} s",
                                   time=t_fail)
    return out
