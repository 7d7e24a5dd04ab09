"""Versioned plain-text storage for trained estimators.

Every line is ``key value...``; floats are written with ``repr`` so a
save/load round trip is exact.  Example::

    fcmppt-model 1
    kind anfis
    norm_T_K 293.0 363.0
    norm_lambda 9.0 14.0
    norm_V_max_V 51.2 73.9
    centers 0.0 0.5 1.0 0.0 0.5 1.0
    ...
"""

from __future__ import annotations

import csv
import io

import numpy as np

from .anfis import N_MF, N_RULES, AnfisModel
from .errors import ConfigError
from .ica import MlpNetwork, n_weights
from .oracle import NormSpec

MAGIC = "fcmppt-model"
VERSION = 1
NORM_KEYS = ("norm_T_K", "norm_lambda", "norm_V_max_V")


def _floats(values):
    return " ".join(repr(float(v)) for v in np.ravel(values))


def _norm_lines(norm):
    if norm is None:
        return []
    return [f"{k} {_floats([s.lo, s.hi])}" for k, s in zip(NORM_KEYS, norm)]


def dumps(model) -> str:
    lines = [f"{MAGIC} {VERSION}"]
    if isinstance(model, AnfisModel):
        lines.append("kind anfis")
        lines.append(f"architecture inputs 2 mfs {N_MF} rules {N_RULES} gaussian linear")
        lines += _norm_lines(model.norm)
        lines.append(f"centers {_floats(model.centers)}")
        lines.append(f"sigmas {_floats(model.sigmas)}")
        lines.append(f"consequents {_floats(model.consequents)}")
    elif isinstance(model, MlpNetwork):
        lines.append("kind mlp")
        lines.append(f"architecture 2 {model.hidden} 1 tanh linear")
        lines += _norm_lines(model.norm)
        lines.append(f"weights {_floats(model.weights)}")
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return "\n".join(lines) + "\n"


def loads(text):
    rows = {}
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0][0] != MAGIC:
        raise ConfigError("not an fcmppt model file")
    if len(lines[0]) < 2 or lines[0][1] != str(VERSION):
        raise ConfigError(f"unsupported model file version {lines[0][1:]}")
    for key, *vals in lines[1:]:
        rows[key] = vals
    try:
        kind = rows["kind"][0]
        norm = None
        if all(k in rows for k in NORM_KEYS):
            norm = tuple(NormSpec(*map(float, rows[k])) for k in NORM_KEYS)
        if kind == "anfis":
            return AnfisModel(np.array(rows["centers"], dtype=float),
                              np.array(rows["sigmas"], dtype=float),
                              np.array(rows["consequents"], dtype=float), norm)
        if kind == "mlp":
            arch = rows["architecture"]
            hidden = int(arch[1])
            weights = np.array(rows["weights"], dtype=float)
            if weights.size != n_weights(hidden):
                raise ConfigError("weight count does not match the architecture line")
            return MlpNetwork(weights, hidden, norm)
    except (KeyError, IndexError, ValueError) as exc:
        raise ConfigError(f"malformed model file: {exc}") from exc
    raise ConfigError(f"unknown model kind {kind!r}")


def save_model(model, path):
    with open(path, "w") as fh:
        fh.write(dumps(model))


def load_model(path):
    try:
        with open(path) as fh:
            return loads(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read model {path}: {exc}") from exc


def trace_csv(header, values, start=1):
    """Two-column CSV of an index and a per-iteration value."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for k, v in enumerate(values, start):
        w.writerow([k, repr(float(v))])
    return buf.getvalue()
