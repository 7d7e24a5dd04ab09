"""First-order Sugeno ANFIS with two inputs and three Gaussian sets per input.

Rule ``r = 3*i + j`` pairs temperature set ``i`` with water-content set
``j``.  Training uses the hybrid rule: consequents by batch least squares
with the antecedents frozen, then one gradient step on the Gaussian centers
and widths.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .oracle import NormSpec, denormalize, normalize

log = logging.getLogger(__name__)

N_MF = 3
N_RULES = N_MF * N_MF
DENOM_EPS = 1e-12


@dataclass(frozen=True)
class GaussianMf:
    center: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def __call__(self, x):
        return np.exp(-0.5 * ((np.asarray(x, dtype=float) - self.center) / self.sigma) ** 2)


@dataclass(frozen=True)
class AnfisModel:
    """Antecedent grid, linear consequents and the normalization used in training.

    ``centers`` and ``sigmas`` have shape (2, 3): row 0 is temperature,
    row 1 water content.  ``consequents`` has shape (9, 3) holding
    (p, q, r) of ``p*t + q*l + r`` per rule.  ``norm`` is the
    (T, lambda, V_max) triple of NormSpec.
    """

    centers: np.ndarray
    sigmas: np.ndarray
    consequents: np.ndarray
    norm: tuple = None

    def __post_init__(self):
        c = np.array(self.centers, dtype=float).reshape(2, N_MF)
        s = np.array(self.sigmas, dtype=float).reshape(2, N_MF)
        q = np.array(self.consequents, dtype=float).reshape(N_RULES, 3)
        if np.any(s <= 0):
            raise ValueError("all Gaussian sigmas must be positive")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "sigmas", s)
        object.__setattr__(self, "consequents", q)

    @classmethod
    def initial(cls, norm=None):
        centers = np.tile([0.0, 0.5, 1.0], (2, 1))
        return cls(centers, np.full((2, N_MF), 0.25), np.zeros((N_RULES, 3)), norm)

    @property
    def input_mfs(self):
        return [[GaussianMf(c, s) for c, s in zip(cr, sr)]
                for cr, sr in zip(self.centers, self.sigmas)]

    def v_max(self, temp_T, lambda_m):
        """Estimated MPP voltage in volts for physical (T, lambda)."""
        if self.norm is None:
            raise ValueError("model has no normalization spec")
        t_spec, l_spec, v_spec = self.norm
        y = anfis_forward(self, normalize(temp_T, t_spec), normalize(lambda_m, l_spec))
        return denormalize(y, v_spec) if np.ndim(y) else float(denormalize(y, v_spec))

    __call__ = v_max


def _memberships(model, t, l):
    mu_t = np.exp(-0.5 * ((t[:, None] - model.centers[0]) / model.sigmas[0]) ** 2)
    mu_l = np.exp(-0.5 * ((l[:, None] - model.centers[1]) / model.sigmas[1]) ** 2)
    return mu_t, mu_l


def firing_strengths(model: AnfisModel, t, l):
    """Raw and normalized rule firing strengths, each of shape (n, 9)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    l = np.atleast_1d(np.asarray(l, dtype=float))
    mu_t, mu_l = _memberships(model, t, l)
    w = (mu_t[:, :, None] * mu_l[:, None, :]).reshape(len(t), N_RULES)
    total = w.sum(axis=1)
    small = total < DENOM_EPS
    if np.any(small):
        log.warning("ANFIS firing strengths underflow at %d inputs", int(small.sum()))
        total = np.where(small, total + DENOM_EPS, total)
    return w, w / total[:, None]


def anfis_forward(model: AnfisModel, t_norm, l_norm):
    """Normalized V_max for normalized inputs (scalars or arrays)."""
    scalar = np.ndim(t_norm) == 0 and np.ndim(l_norm) == 0
    t = np.atleast_1d(np.asarray(t_norm, dtype=float))
    l = np.atleast_1d(np.asarray(l_norm, dtype=float))
    _, wbar = firing_strengths(model, t, l)
    p, q, r = model.consequents.T
    f = p * t[:, None] + q * l[:, None] + r
    out = np.sum(wbar * f, axis=1)
    return float(out[0]) if scalar else out


def _design(wbar, t, l):
    return np.concatenate([wbar * t[:, None], wbar * l[:, None], wbar], axis=1)


def _unpack(theta):
    # Design columns are [p_0..p_8, q_0..q_8, r_0..r_8].
    return theta.reshape(3, N_RULES).T


def solve_consequents(model: AnfisModel, x, y, ridge=1e-8):
    """Least-squares consequents for frozen antecedents."""
    t, l = x[:, 0], x[:, 1]
    _, wbar = firing_strengths(model, t, l)
    phi = _design(wbar, t, l)
    theta, _, rank, _ = np.linalg.lstsq(phi, y, rcond=None)
    if rank < phi.shape[1]:
        log.warning("ANFIS least-squares system is rank %d/%d; using ridge %g",
                    rank, phi.shape[1], ridge)
        theta = np.linalg.solve(phi.T @ phi + ridge * np.eye(phi.shape[1]), phi.T @ y)
    return replace(model, consequents=_unpack(theta))


def anfis_loss(model: AnfisModel, x, y):
    """Half mean squared error in normalized units."""
    res = anfis_forward(model, x[:, 0], x[:, 1]) - y
    return 0.5 * float(np.mean(res ** 2))


def anfis_gradients(model: AnfisModel, x, y):
    """Loss and its gradients w.r.t. centers and sigmas (each shape (2, 3))."""
    t, l = x[:, 0], x[:, 1]
    n = len(t)
    mu_t, mu_l = _memberships(model, t, l)
    w = (mu_t[:, :, None] * mu_l[:, None, :]).reshape(n, N_RULES)
    total = w.sum(axis=1)
    p, q, r = model.consequents.T
    f = p * t[:, None] + q * l[:, None] + r
    yhat = np.sum(w * f, axis=1) / total
    res = yhat - y
    # d yhat / d w_r, weighted by residual and by w_r itself
    g = (res / total)[:, None] * (f - yhat[:, None]) * w
    g = g.reshape(n, N_MF, N_MF)
    g_t = g.sum(axis=2)
    g_l = g.sum(axis=1)
    d_centers = np.empty((2, N_MF))
    d_sigmas = np.empty((2, N_MF))
    for row, (gx, xin) in enumerate(((g_t, t), (g_l, l))):
        diff = xin[:, None] - model.centers[row]
        sig = model.sigmas[row]
        d_centers[row] = np.mean(gx * diff / sig ** 2, axis=0)
        d_sigmas[row] = np.mean(gx * diff ** 2 / sig ** 3, axis=0)
    return 0.5 * float(np.mean(res ** 2)), d_centers, d_sigmas


def rmse(model: AnfisModel, x, y):
    return float(np.sqrt(np.mean((anfis_forward(model, x[:, 0], x[:, 1]) - y) ** 2)))


def anfis_train(x, y, epochs=70, model=None, learning_rate=0.01, decay=0.9,
                ridge=1e-8, norm=None, freeze_antecedents=False):
    """Hybrid-learning ANFIS fit on normalized data.

    Returns ``(model, trace)`` where ``trace[k]`` is the training RMSE right
    after the least-squares step of epoch ``k``.  The learning rate is
    multiplied by ``decay`` whenever the epoch error rises.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    model = model or AnfisModel.initial(norm)
    if norm is not None:
        model = replace(model, norm=norm)
    lr = learning_rate
    trace = []
    for epoch in range(epochs):
        if epoch and not freeze_antecedents:
            _, dc, ds = anfis_gradients(model, x, y)
            model = replace(model, centers=model.centers - lr * dc,
                            sigmas=np.maximum(model.sigmas - lr * ds, 1e-3))
        model = solve_consequents(model, x, y, ridge)
        err = rmse(model, x, y)
        if trace and err > trace[-1]:
            lr *= decay
        trace.append(err)
    return model, np.array(trace)
