"""Ising model container, energy evaluation, field absorption, and file IO.

Energy convention: ``E(x) = sum_{i,j} J[i,j] x_i x_j + sum_i h[i] x_i`` as a
plain double sum over the stored matrix. The coupling felt by a spin pair
(i, j) is therefore ``J[i,j] + J[j,i]``; generators in this package populate
only the upper triangle, so stored instances behave like a single sum over
i < j. The asymmetric matrices produced by :func:`absorb_external_field`
use the same formula unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ContractViolation


@dataclass(eq=False)
class IsingModel:
    """n-spin pairwise model over configurations in {-1, +1}^n.

    Attributes:
        J: (n, n) float matrix of couplings, zero diagonal.
        h: (n,) float vector of external fields.
        beta: inverse temperature, > 0.
    """

    J: np.ndarray
    h: np.ndarray
    beta: float = 1.0

    def __post_init__(self):
        J = np.array(self.J, dtype=np.float64)
        h = np.array(self.h, dtype=np.float64)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise ContractViolation(f"J must be square, got shape {J.shape}")
        if h.shape != (J.shape[0],):
            raise ContractViolation(
                f"h must have length {J.shape[0]}, got shape {h.shape}"
            )
        if not (np.isfinite(J).all() and np.isfinite(h).all()):
            raise ContractViolation("J and h must be finite")
        if np.any(np.diag(J) != 0.0):
            raise ContractViolation("diagonal of J must be zero")
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise ContractViolation(f"beta must be positive, got {self.beta}")
        J.setflags(write=False)
        h.setflags(write=False)
        self.J = J
        self.h = h
        self.beta = float(self.beta)

    @property
    def n(self) -> int:
        return self.J.shape[0]


def as_spins(config, n: int | None = None) -> np.ndarray:
    """Validate a spin configuration and return it as a float64 vector.

    Entries must be exactly -1 or +1; length must equal ``n`` when given.
    """
    x = np.asarray(config, dtype=np.float64)
    if x.ndim != 1:
        raise ContractViolation(f"configuration must be 1-D, got shape {x.shape}")
    if n is not None and x.shape[0] != n:
        raise ContractViolation(f"configuration length {x.shape[0]} != model n = {n}")
    if not np.all(np.abs(x) == 1.0):
        raise ContractViolation("spins must be exactly -1 or +1")
    return x


def energy(model: IsingModel, config) -> float:
    """Energy of one configuration under the stored double-sum convention."""
    x = as_spins(config, model.n)
    return float(x @ model.J @ x + model.h @ x)


def energies(model: IsingModel, configs: np.ndarray) -> np.ndarray:
    """Vectorized energy for a (m, n) batch of ±1 rows."""
    X = np.asarray(configs, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n:
        raise ContractViolation(f"batch must be (m, {model.n}), got {X.shape}")
    return np.einsum("ki,ki->k", X @ model.J, X) + X @ model.h


def absorb_external_field(model: IsingModel) -> IsingModel:
    """Fold the field vector into one auxiliary spin.

    Returns an (n+1)-spin model with the old J in the interior, h as the last
    column, a zero last row, zero field, and the same beta. Its log partition
    function exceeds the original by exactly ln 2.
    """
    n = model.n
    J = np.zeros((n + 1, n + 1))
    J[:n, :n] = model.J
    J[:n, n] = model.h
    return IsingModel(J=J, h=np.zeros(n + 1), beta=model.beta)


@dataclass(eq=False)
class SampleSet:
    """A batch of ±1 configurations with optional per-sample log-probabilities."""

    configurations: np.ndarray
    log_probs: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.configurations)
        if X.ndim != 2:
            raise ContractViolation("configurations must be a (m, n) array")
        if not np.all(np.abs(X.astype(np.float64)) == 1.0):
            raise ContractViolation("sample entries must be ±1")
        self.configurations = X
        if self.log_probs is not None:
            lp = np.asarray(self.log_probs, dtype=np.float64)
            if lp.shape != (X.shape[0],):
                raise ContractViolation("log_probs must parallel configurations")
            if np.any(lp > 1e-12):
                raise ContractViolation("log-probabilities must be <= 0")
            self.log_probs = lp

    def __len__(self) -> int:
        return self.configurations.shape[0]


class Magnetization(NamedTuple):
    global_mean: float
    per_spin: np.ndarray
    stderr: float


def magnetization(samples: SampleSet) -> Magnetization:
    """Per-spin sample means, their grand mean, and the standard error.

    The standard error is that of the per-configuration mean (mean over spins
    of one sample), i.e. the noise on the reported global value.
    """
    X = samples.configurations
    if len(samples) == 0:
        raise ContractViolation("magnetization of an empty sample set")
    X = X.astype(np.float64)
    per_spin = X.mean(axis=0)
    per_config = X.mean(axis=1)
    m = len(samples)
    stderr = float(per_config.std(ddof=1) / np.sqrt(m)) if m > 1 else float("inf")
    return Magnetization(float(per_spin.mean()), per_spin, stderr)


# ---------------------------------------------------------------------------
# File formats: model JSON and sample CSV.

def model_to_dict(model: IsingModel) -> dict:
    return {
        "n": model.n,
        "beta": model.beta,
        "J": model.J.tolist(),
        "h": model.h.tolist(),
    }


def model_from_dict(payload: dict) -> IsingModel:
    model = IsingModel(
        J=np.array(payload["J"], dtype=np.float64),
        h=np.array(payload["h"], dtype=np.float64),
        beta=float(payload["beta"]),
    )
    if model.n != int(payload["n"]):
        raise ContractViolation(
            f"model file claims n={payload['n']} but J is {model.n}x{model.n}"
        )
    return model


def save_model(model: IsingModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def load_model(path) -> IsingModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def save_samples(samples: SampleSet, path) -> None:
    """Write one ±1 row per configuration with an x0..x{n-1} header."""
    X = samples.configurations
    n = X.shape[1]
    with open(path, "w") as fh:
        fh.write(",".join(f"x{i}" for i in range(n)) + "\n")
        for row in X:
            fh.write(",".join(str(int(v)) for v in row) + "\n")


def load_samples(path) -> SampleSet:
    with open(path) as fh:
        header = fh.readline()
        n = len(header.strip().split(","))
        rows = np.loadtxt(fh, delimiter=",", dtype=np.int8, ndmin=2)
    if rows.size and rows.shape[1] != n:
        raise ContractViolation("sample CSV row width disagrees with header")
    return SampleSet(configurations=rows)
