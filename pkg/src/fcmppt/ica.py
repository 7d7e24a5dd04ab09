"""MLP weight search with the Imperialist Competitive Algorithm.

Each country is a flat weight vector of a 2-H-1 tanh network; its cost is
the training MSE.  The best countries become imperialists, the rest are
dealt out as colonies, and every decade colonies drift toward their
imperialist (assimilation), occasionally mutate (revolution), may overthrow
their imperialist (exchange), and the weakest empire loses its weakest
colony to a rival (competition).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metrics import mse
from .oracle import denormalize, normalize


def n_weights(hidden):
    return 4 * hidden + 1


def _split(weights, hidden):
    """Views (W1 (H,2), b1 (H,), w2 (H,), b2) of a flat weight vector."""
    w1 = weights[..., : 2 * hidden].reshape(weights.shape[:-1] + (hidden, 2))
    b1 = weights[..., 2 * hidden: 3 * hidden]
    w2 = weights[..., 3 * hidden: 4 * hidden]
    b2 = weights[..., 4 * hidden]
    return w1, b1, w2, b2


@dataclass(frozen=True)
class MlpNetwork:
    weights: np.ndarray
    hidden: int = 8
    norm: tuple = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if w.size != n_weights(self.hidden):
            raise ValueError(
                f"expected {n_weights(self.hidden)} weights for H={self.hidden}, got {w.size}")
        object.__setattr__(self, "weights", w)

    def v_max(self, temp_T, lambda_m):
        if self.norm is None:
            raise ValueError("network has no normalization spec")
        t_spec, l_spec, v_spec = self.norm
        y = mlp_forward(self, normalize(temp_T, t_spec), normalize(lambda_m, l_spec))
        return denormalize(y, v_spec) if np.ndim(y) else float(denormalize(y, v_spec))

    __call__ = v_max


def batch_forward(positions, x, hidden):
    """Outputs of many networks at once: positions (m, d), x (n, 2) -> (m, n)."""
    w1, b1, w2, b2 = _split(np.atleast_2d(positions), hidden)
    z = np.einsum("mhk,nk->mnh", w1, x) + b1[:, None, :]
    return np.einsum("mnh,mh->mn", np.tanh(z), w2) + b2[:, None]


def mlp_forward(net: MlpNetwork, t_norm, l_norm):
    scalar = np.ndim(t_norm) == 0 and np.ndim(l_norm) == 0
    x = np.column_stack([np.atleast_1d(t_norm), np.atleast_1d(l_norm)]).astype(float)
    out = batch_forward(net.weights, x, net.hidden)[0]
    return float(out[0]) if scalar else out


def cost(position, x, y, hidden=8):
    """Training MSE of the network encoded by ``position``."""
    return mse(batch_forward(position, x, hidden)[0], y)


@dataclass
class Country:
    position: np.ndarray
    cost: float


@dataclass
class Empire:
    imperialist: Country
    colonies: list = field(default_factory=list)
    total_cost: float = 0.0

    def update_total(self, xi):
        mean = np.mean([c.cost for c in self.colonies]) if self.colonies else 0.0
        self.total_cost = self.imperialist.cost + xi * float(mean)
        return self.total_cost

    def countries(self):
        return [self.imperialist, *self.colonies]


@dataclass(frozen=True)
class IcaConfig:
    n_countries: int = 75
    n_imperialists: int = 8
    n_decades: int = 65
    beta: float = 2.0
    revolution_rate: float = 0.1
    revolution_fraction: float = 0.3
    xi_weight: float = 0.1
    init_range: tuple = (-1.0, 1.0)
    rng_seed: int = 42
    hidden: int = 8

    def __post_init__(self):
        if not 0 < self.n_imperialists < self.n_countries:
            raise ValueError("need 0 < n_imperialists < n_countries")
        if not self.beta > 1:
            raise ValueError("beta must exceed 1")
        if not 0 <= self.revolution_rate <= 1:
            raise ValueError("revolution_rate must lie in [0, 1]")
        if not self.init_range[0] < self.init_range[1]:
            raise ValueError("init_range must be increasing")
        if self.n_decades < 1 or self.hidden < 1:
            raise ValueError("n_decades and hidden must be >= 1")


class _Evaluator:
    def __init__(self, x, y, hidden):
        self.x, self.y, self.hidden = x, y, hidden

    def __call__(self, positions):
        pred = batch_forward(positions, self.x, self.hidden)
        return np.mean((pred - self.y) ** 2, axis=1)


def _colony_counts(costs, n_colonies):
    """Largest-remainder split of colonies by normalized imperialist power."""
    costs = np.asarray(costs, dtype=float)
    normalized = costs - costs.max()
    total = normalized.sum()
    if total == 0:
        power = np.full(len(costs), 1.0 / len(costs))
    else:
        power = np.abs(normalized / total)
    share = power * n_colonies
    counts = np.floor(share).astype(int)
    left = n_colonies - counts.sum()
    # ties in the fractional part go to the stronger (lower-cost) imperialist
    order = sorted(range(len(costs)), key=lambda k: (-(share[k] - counts[k]), costs[k], k))
    for k in order[:left]:
        counts[k] += 1
    return counts


def initialize_empires(config: IcaConfig, x, y, rng):
    evaluate = _Evaluator(x, y, config.hidden)
    lo, hi = config.init_range
    pos = rng.uniform(lo, hi, size=(config.n_countries, n_weights(config.hidden)))
    costs = evaluate(pos)
    order = np.argsort(costs, kind="stable")
    imp_idx = order[: config.n_imperialists]
    col_idx = rng.permutation(order[config.n_imperialists:])
    counts = _colony_counts(costs[imp_idx], len(col_idx))
    empires = []
    start = 0
    for k, n in zip(imp_idx, counts):
        colonies = [Country(pos[j].copy(), float(costs[j])) for j in col_idx[start:start + n]]
        start += n
        emp = Empire(Country(pos[k].copy(), float(costs[k])), colonies)
        emp.update_total(config.xi_weight)
        empires.append(emp)
    return empires


def _recost(colonies, evaluate):
    if colonies:
        costs = evaluate(np.array([c.position for c in colonies]))
        for c, v in zip(colonies, costs):
            c.cost = float(v)


def assimilate(empire: Empire, beta, rng, evaluate):
    """Move every colony toward its imperialist by U(0, beta) per component."""
    imp = empire.imperialist.position
    for c in empire.colonies:
        c.position = c.position + rng.uniform(0.0, beta, size=c.position.shape) * (imp - c.position)
    _recost(empire.colonies, evaluate)
    return empire


def revolve(empire: Empire, rate, rng, evaluate, init_range=(-1.0, 1.0), fraction=0.3):
    """With probability ``rate`` redraw a random subset of a colony's weights."""
    lo, hi = init_range
    moved = []
    for c in empire.colonies:
        if rng.random() < rate:
            d = c.position.size
            k = max(1, int(round(fraction * d)))
            idx = rng.choice(d, size=k, replace=False)
            pos = c.position.copy()
            pos[idx] = rng.uniform(lo, hi, size=k)
            c.position = pos
            moved.append(c)
    _recost(moved, evaluate)
    return empire


def exchange(empire: Empire):
    """Swap the imperialist with its best colony if that colony is cheaper."""
    if not empire.colonies:
        return empire
    k = min(range(len(empire.colonies)), key=lambda j: empire.colonies[j].cost)
    if empire.colonies[k].cost < empire.imperialist.cost:
        empire.colonies[k], empire.imperialist = empire.imperialist, empire.colonies[k]
    return empire


def compete(empires, rng, xi=0.1):
    """The weakest empire cedes its weakest colony (or, if colony-less, itself)."""
    if len(empires) < 2:
        return empires
    totals = np.array([e.update_total(xi) for e in empires])
    weakest = int(np.argmax(totals))
    others = [k for k in range(len(empires)) if k != weakest]
    normalized = totals[others] - totals.max()
    s = normalized.sum()
    p = np.full(len(others), 1.0 / len(others)) if s == 0 else np.abs(normalized / s)
    winner = empires[others[int(rng.choice(len(others), p=p / p.sum()))]]
    loser = empires[weakest]
    if loser.colonies:
        j = max(range(len(loser.colonies)), key=lambda i: loser.colonies[i].cost)
        winner.colonies.append(loser.colonies.pop(j))
    else:
        winner.colonies.append(loser.imperialist)
        empires = [e for k, e in enumerate(empires) if k != weakest]
    for e in empires:
        e.update_total(xi)
    return empires


@dataclass
class IcaResult:
    network: MlpNetwork
    best_cost_trace: np.ndarray
    empire_counts: list
    population_counts: list


def ica_train(config: IcaConfig, x, y, norm=None):
    """Search MLP weights by ICA; returns the all-time best network and traces."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rng = np.random.default_rng(config.rng_seed)
    evaluate = _Evaluator(x, y, config.hidden)
    empires = initialize_empires(config, x, y, rng)
    best = min((c for e in empires for c in e.countries()), key=lambda c: c.cost)
    best = Country(best.position.copy(), best.cost)
    trace, n_emp, n_pop = [], [], []
    for _ in range(config.n_decades):
        for emp in empires:
            assimilate(emp, config.beta, rng, evaluate)
            revolve(emp, config.revolution_rate, rng, evaluate,
                    config.init_range, config.revolution_fraction)
            exchange(emp)
        empires = compete(empires, rng, config.xi_weight)
        champion = min((c for e in empires for c in e.countries()), key=lambda c: c.cost)
        if champion.cost < best.cost:
            best = Country(champion.position.copy(), champion.cost)
        trace.append(best.cost)
        n_emp.append(len(empires))
        n_pop.append(sum(1 + len(e.colonies) for e in empires))
    net = MlpNetwork(best.position, config.hidden, norm)
    return IcaResult(net, np.array(trace), n_emp, n_pop)
