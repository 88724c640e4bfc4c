"""Matching recovered components to the truth and perturbation sweeps."""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import NumericalError, ValidationError
from .rng import stream
from .tensor import spectral_norm_estimate, symmetrize_tensor


@dataclass(frozen=True)
class MatchResult:
    """``est[:, permutation[j]]`` times ``signs[j]`` is matched to ``truth[:, j]``."""

    permutation: np.ndarray
    signs: np.ndarray
    errors: np.ndarray

    @property
    def max_error(self):
        return float(self.errors.max()) if self.errors.size else 0.0


def _pair(truth, est):
    truth = np.asarray(truth, dtype=np.float64)
    est = np.asarray(est, dtype=np.float64)
    if truth.ndim != 2 or truth.shape != est.shape:
        raise ValidationError(f"shape mismatch: {truth.shape} vs {est.shape}")
    return truth, est


def _finish(truth, est, perm):
    inner = np.einsum("ij,ij->j", truth, est[:, perm])
    signs = np.where(inner < 0, -1.0, 1.0)
    errors = np.linalg.norm(truth - est[:, perm] * signs, axis=0)
    return MatchResult(perm, signs, errors)


def match_components(truth, est):
    """Optimal assignment minimizing ``sum_j (1 - |cos(v_j, v̂_π(j))|)``."""
    truth, est = _pair(truth, est)
    nt = np.linalg.norm(truth, axis=0)
    ne = np.linalg.norm(est, axis=0)
    cos = (truth.T @ est) / np.outer(np.where(nt > 0, nt, 1.0), np.where(ne > 0, ne, 1.0))
    _, perm = linear_sum_assignment(1.0 - np.abs(cos))
    return _finish(truth, est, perm)


def match_by_distance(truth, est, ord=2, signed=False):
    """Assignment minimizing the total ``ord``-norm distance between columns.

    With ``signed=True`` each pair may also flip the estimate's sign.
    """
    truth, est = _pair(truth, est)
    diff = truth[:, :, None] - est[:, None, :]
    cost = np.linalg.norm(diff, ord=ord, axis=0)
    if signed:
        cost = np.minimum(cost, np.linalg.norm(truth[:, :, None] + est[:, None, :], ord=ord, axis=0))
    _, perm = linear_sum_assignment(cost)
    if signed:
        return _finish(truth, est, perm)
    errors = cost[np.arange(truth.shape[1]), perm]
    return MatchResult(perm, np.ones(truth.shape[1]), errors)


def symmetric_noise(shape, eps, seed, spectral_seed=0):
    """Symmetric Gaussian perturbation scaled to spectral-norm estimate ``eps``."""
    E = symmetrize_tensor(stream(seed, "perturb", len(shape)).standard_normal(shape))
    if eps == 0:
        return np.zeros(shape)
    if E.ndim == 2:
        norm = float(np.max(np.abs(np.linalg.eigvalsh(E))))
    else:
        norm = spectral_norm_estimate(E, seed=spectral_seed)
    return E * (eps / norm)


@dataclass
class SweepResult:
    rows: list
    slope: float
    monotone: bool


def _slope(rows):
    by_eps = {}
    for row in rows:
        if row["status"] == "ok" and row["eps"] > 0:
            by_eps.setdefault(row["eps"], []).append(row["vector_error"])
    eps = np.array(sorted(by_eps))
    mean = np.array([np.mean(by_eps[e]) for e in eps])
    monotone = bool(np.all(np.diff(mean) >= 0))
    if eps.size < 2 or np.any(mean <= 0):
        return float("nan"), monotone
    return float(np.polyfit(np.log(eps), np.log(mean), 1)[0]), monotone


def perturbation_sweep(builder, decomposer, epsilons, seeds, csv_path=None):
    """Decompose perturbed instances over an ``(ε, seed)`` grid.

    ``builder(seed)`` returns a dict with ``tensor``, ``vectors``, ``weights``
    and optionally ``second_moment``; both tensor and second moment get a
    symmetric perturbation of spectral-norm estimate ``ε``.
    ``decomposer(T, M)`` returns ``(vectors, weights)``.  Failures are
    recorded per cell.  Rows are ordered by ``(ε, seed)``.
    """
    epsilons, seeds = list(epsilons), list(seeds)
    if not epsilons or not seeds:
        raise ValidationError("sweep grids must be nonempty")
    rows = []
    for eps in sorted(epsilons):
        for seed in seeds:
            inst = builder(seed)
            T = inst["tensor"] + symmetric_noise(inst["tensor"].shape, eps, seed)
            M = inst.get("second_moment")
            if M is not None:
                M = M + symmetric_noise(M.shape, eps, seed + 7919)
            row = {"eps": float(eps), "seed": int(seed)}
            try:
                vectors, weights = decomposer(T, M)
                match = match_components(inst["vectors"], vectors)
                werr = np.abs(np.asarray(inst["weights"]) - np.asarray(weights)[match.permutation])
                row.update(vector_error=match.max_error, weight_error=float(werr.max()), status="ok")
            except (NumericalError, ValidationError) as exc:
                row.update(vector_error=float("nan"), weight_error=float("nan"),
                           status=f"failed: {exc}")
            rows.append(row)
    slope, monotone = _slope(rows)
    if csv_path is not None:
        write_sweep_csv(csv_path, rows)
    return SweepResult(rows, slope, monotone)


def write_sweep_csv(path, rows):
    fields = ["eps", "seed", "vector_error", "weight_error", "status"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
