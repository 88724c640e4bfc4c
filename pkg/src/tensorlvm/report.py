"""Diagnostics returned alongside every decomposition."""

from dataclasses import asdict, dataclass, field

import numpy as np


def plain_data(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {str(k): plain_data(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain_data(v) for v in value]
    return value


@dataclass
class DecompositionReport:
    method: str
    rank: int = 0
    eigenvalues: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    restarts: int = 0
    error_history: list = field(default_factory=list)
    reconstruction_error: float | None = None
    relative_error: float | None = None
    spectral_error_estimate: float | None = None
    sigma_min_M: float | None = None
    Lambda_min: float | None = None
    Lambda_max: float | None = None
    permutation: list | None = None
    vector_errors: list | None = None
    weight_errors: list | None = None
    timings: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return plain_data(asdict(self))
