"""Dataset ingestion: IDX image/label files and seeded synthetic problems."""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass, field

import numpy as np

from .matrix import SymMatrix
from .model import QuadraticBowl

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class IdxError(ValueError):
    pass


class BadMagic(IdxError):
    pass


class DimensionMismatch(IdxError):
    pass


class TruncatedFile(IdxError):
    pass


@dataclass
class Dataset:
    name: str
    inputs: np.ndarray  # N x in_dim, values in [0, 1]
    labels: np.ndarray  # N ints
    train_idx: list = field(default_factory=list)
    test_idx: list = field(default_factory=list)

    def __post_init__(self):
        if self.inputs.ndim != 2 or self.labels.shape != (self.inputs.shape[0],):
            raise ValueError("inputs must be N x d with one label per row")
        if self.inputs.size and (self.inputs.min() < 0.0 or self.inputs.max() > 1.0):
            raise ValueError("inputs must be scaled to [0, 1]")
        if set(self.train_idx) & set(self.test_idx):
            raise ValueError("train and test splits overlap")


def _read_exact(f, count, path):
    data = f.read(count)
    if len(data) != count:
        raise TruncatedFile(f"{path}: expected {count} bytes, got {len(data)}")
    return data


def _open_maybe_gzip(path):
    f = open(path, "rb")
    head = f.read(2)
    f.seek(0)
    if head == b"\x1f\x8b":
        f.close()
        return gzip.open(path, "rb")
    return f


def downsample_images(images: np.ndarray, side: int, target: int) -> np.ndarray:
    """Average-pool square images to target x target using contiguous bins."""
    n = images.shape[0]
    imgs = images.reshape(n, side, side)
    edges = np.floor(np.linspace(0, side, target + 1)).astype(int)
    pooled = np.empty((n, target, target))
    for i in range(target):
        for j in range(target):
            block = imgs[:, edges[i] : edges[i + 1], edges[j] : edges[j + 1]]
            pooled[:, i, j] = block.mean(axis=(1, 2))
    return pooled.reshape(n, target * target)


def load_idx(
    images_path,
    labels_path,
    downsample_to: int | None = None,
    holdout: float = 0.1,
) -> Dataset:
    """Parse a big-endian IDX image/label file pair into a Dataset.

    Pixels are scaled by 1/255; the last `holdout` fraction of examples
    becomes the test split. Gzipped files are detected transparently.
    """
    with _open_maybe_gzip(images_path) as f:
        magic, count, rows, cols = struct.unpack(">IIII", _read_exact(f, 16, images_path))
        if magic != IMAGE_MAGIC:
            raise BadMagic(f"{images_path}: magic 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}")
        raw = _read_exact(f, count * rows * cols, images_path)
    images = np.frombuffer(raw, dtype=np.uint8).astype(np.float64) / 255.0
    images = images.reshape(count, rows * cols)

    with _open_maybe_gzip(labels_path) as f:
        magic, label_count = struct.unpack(">II", _read_exact(f, 8, labels_path))
        if magic != LABEL_MAGIC:
            raise BadMagic(f"{labels_path}: magic 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}")
        labels = np.frombuffer(_read_exact(f, label_count, labels_path), dtype=np.uint8)
    if label_count != count:
        raise DimensionMismatch(f"{count} images but {label_count} labels")

    if downsample_to is not None:
        if rows != cols:
            raise DimensionMismatch("downsampling expects square images")
        images = downsample_images(images, rows, downsample_to)

    split = count - int(round(holdout * count))
    return Dataset(
        name="idx",
        inputs=images,
        labels=labels.astype(np.int64),
        train_idx=list(range(split)),
        test_idx=list(range(split, count)),
    )


def make_quadratic_bowl(n: int, kappa: float, seed: int) -> QuadraticBowl:
    """SPD quadratic problem with the requested condition number.

    A = Q' D Q with log-spaced eigenvalues in [1/kappa, 1] and a seeded
    random rotation; b is chosen so the minimizer is a unit-scale vector.
    """
    if n < 1 or kappa < 1.0:
        raise ValueError("need n >= 1 and kappa >= 1")
    rng = np.random.default_rng(seed)
    d = np.logspace(-np.log10(kappa), 0.0, n) if n > 1 else np.ones(1)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    A = SymMatrix((q * d) @ q.T)
    theta_star = rng.standard_normal(n)
    return QuadraticBowl(A, A.entries @ theta_star)


def make_gaussian_blobs(
    n_samples: int = 2000,
    in_dim: int = 64,
    n_classes: int = 10,
    separation: float = 3.0,
    seed: int = 0,
    holdout: float = 0.2,
) -> Dataset:
    """k separable Gaussian clusters, min-max scaled to [0, 1]."""
    rng = np.random.default_rng(seed)
    means = rng.standard_normal((n_classes, in_dim)) * separation / np.sqrt(2.0)
    labels = rng.integers(0, n_classes, size=n_samples)
    inputs = means[labels] + rng.standard_normal((n_samples, in_dim))
    lo, hi = inputs.min(), inputs.max()
    inputs = (inputs - lo) / (hi - lo)
    order = rng.permutation(n_samples)
    split = n_samples - int(round(holdout * n_samples))
    return Dataset(
        name="gaussian_blobs",
        inputs=inputs,
        labels=labels.astype(np.int64),
        train_idx=list(order[:split]),
        test_idx=list(order[split:]),
    )


def make_synthetic(kind: str, params: dict, seed: int):
    """Dispatch on kind: 'quadratic_bowl' -> QuadraticBowl, 'gaussian_blobs' -> Dataset."""
    if kind == "quadratic_bowl":
        return make_quadratic_bowl(
            n=int(params.get("n", 16)), kappa=float(params.get("kappa", 100.0)), seed=seed
        )
    if kind == "gaussian_blobs":
        return make_gaussian_blobs(
            n_samples=int(params.get("n_samples", 2000)),
            in_dim=int(params.get("in_dim", 64)),
            n_classes=int(params.get("n_classes", 10)),
            separation=float(params.get("separation", 3.0)),
            seed=seed,
            holdout=float(params.get("holdout", 0.2)),
        )
    raise ValueError(f"unknown synthetic kind {kind!r}")
