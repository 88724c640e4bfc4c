"""Low-rank CP compression of an RGB image."""

import time

import numpy as np

from .direct import AlsConfig, als
from .errors import ValidationError
from .formats import read_ppm, write_factors, write_ppm
from .tensor import frobenius_norm, kruskal_to_tensor


def parameter_count(shape, rank):
    """Storage of a rank-``rank`` CP model: factor entries plus weights."""
    return rank * sum(shape) + rank


def to_image(T):
    """Shift to zero minimum, scale by the maximum, multiply by 255 and truncate."""
    T = np.asarray(T, dtype=np.float64)
    shifted = T - T.min()
    top = shifted.max()
    scaled = shifted / top if top > 0 else shifted
    return np.clip(np.floor(scaled * 255.0), 0, 255).astype(np.uint8)


def synthetic_image(height=768, width=1024, seed=0):
    """Smooth gradients, disks and stripes; a stand-in for a photograph."""
    rng = np.random.Generator(np.random.Philox(seed))
    y, x = np.mgrid[0:height, 0:width] / np.array([height, width])[:, None, None]
    img = np.stack([0.5 + 0.4 * np.sin(3 * x + 1), 0.5 + 0.4 * np.cos(2 * y), 0.3 + 0.5 * x * y], -1)
    for _ in range(12):
        cy, cx, r = rng.random(3) * [1, 1, 0.15] + [0, 0, 0.03]
        mask = (y - cy) ** 2 + ((x - cx) * width / height) ** 2 < r ** 2
        img[mask] = rng.random(3)
    img += 0.1 * np.sin(40 * (x + 0.3 * y))[..., None]
    return to_image(img)


def compress_array(image, rank, cfg=None):
    """Fit a rank-``rank`` CP model to an ``H × W × 3`` image."""
    if rank < 1:
        raise ValidationError("rank must be >= 1")
    T = np.asarray(image, dtype=np.float64)
    if T.ndim != 3:
        raise ValidationError("image must be H x W x channels")
    cfg = cfg or AlsConfig(rank=rank)
    if cfg.rank != rank:
        raise ValidationError("ALS config rank differs from the requested rank")
    started = time.perf_counter()
    K, report = als(T, cfg)
    approx = kruskal_to_tensor(K)
    elapsed = time.perf_counter() - started
    params = parameter_count(T.shape, rank)
    stats = {
        "shape": list(T.shape), "rank": rank, "parameters": params,
        "compression_ratio": T.size / params,
        "relative_error": frobenius_norm(T - approx) / max(frobenius_norm(T), 1e-300),
        "sweeps": len(report.error_history), "seconds": elapsed,
    }
    return K, to_image(approx), stats, report


def compress_image(ppm_in, rank, als_cfg=None, ppm_out=None, factors_out=None):
    """Read a P6 image, compress it, and write the tone-mapped reconstruction."""
    K, out, stats, report = compress_array(read_ppm(ppm_in), rank, als_cfg)
    if ppm_out is not None:
        write_ppm(ppm_out, out)
    if factors_out is not None:
        write_factors(factors_out, K, {"image": stats, "als": report.to_dict()})
    return K, out, stats
