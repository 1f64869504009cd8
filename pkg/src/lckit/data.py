"""Datasets and the IDX file format.

IDX layout (big-endian): images carry magic 0x00000803 followed by u32
dims [N, rows, cols] and N*rows*cols unsigned bytes; labels carry magic
0x00000801, a u32 count, and N unsigned bytes. Pixels are scaled by 1/255
into [0, 1]; no mean-centering.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IdxCountMismatchError, IdxMagicError, IdxTruncatedError, ValidationError
from .linalg import make_rng

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

__all__ = [
    "Dataset",
    "load_mnist_idx",
    "write_idx_images",
    "write_idx_labels",
    "synthetic_digits",
]


@dataclass
class Dataset:
    """Flat inputs in [0, 1] (N x D) with integer class labels (N)."""

    inputs: np.ndarray
    labels: np.ndarray
    num_classes: int = 10

    def __post_init__(self):
        self.inputs = np.ascontiguousarray(self.inputs, dtype=np.float64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.inputs.ndim != 2 or self.inputs.shape[0] < 1:
            raise ValidationError(f"inputs must be a non-empty N x D array, got {self.inputs.shape}")
        if self.labels.shape != (self.inputs.shape[0],):
            raise ValidationError("labels must be a vector matching the input count")
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise ValidationError(f"labels must lie in [0, {self.num_classes})")

    def subset(self, n: int) -> "Dataset":
        return Dataset(self.inputs[:n], self.labels[:n], self.num_classes)


def _read_exact(f, n: int, path, what: str) -> bytes:
    data = f.read(n)
    if len(data) < n:
        raise IdxTruncatedError(f"{path}: file ends inside {what}")
    return data


def load_mnist_idx(images_path, labels_path) -> Dataset:
    """Read an image/label IDX pair into a Dataset.

    Raises IdxMagicError on a wrong magic number, IdxTruncatedError when a
    file is shorter than its header promises, and IdxCountMismatchError
    when the two files disagree on the item count.
    """
    images_path = Path(images_path)
    labels_path = Path(labels_path)

    with open(images_path, "rb") as f:
        magic = struct.unpack(">i", _read_exact(f, 4, images_path, "the magic number"))[0]
        if magic != IMAGES_MAGIC:
            raise IdxMagicError(f"{images_path}: magic {magic} is not an image file ({IMAGES_MAGIC})")
        n, rows, cols = struct.unpack(">iii", _read_exact(f, 12, images_path, "the dimension header"))
        pixels = np.frombuffer(_read_exact(f, n * rows * cols, images_path, "the pixel payload"), dtype=np.uint8)

    with open(labels_path, "rb") as f:
        magic = struct.unpack(">i", _read_exact(f, 4, labels_path, "the magic number"))[0]
        if magic != LABELS_MAGIC:
            raise IdxMagicError(f"{labels_path}: magic {magic} is not a label file ({LABELS_MAGIC})")
        (n_labels,) = struct.unpack(">i", _read_exact(f, 4, labels_path, "the count header"))
        labels = np.frombuffer(_read_exact(f, n_labels, labels_path, "the label payload"), dtype=np.uint8)

    if n != n_labels:
        raise IdxCountMismatchError(f"{images_path} has {n} items but {labels_path} has {n_labels}")
    inputs = pixels.reshape(n, rows * cols).astype(np.float64) / 255.0
    return Dataset(inputs=inputs, labels=labels.astype(np.int64))


def write_idx_images(path, images: np.ndarray) -> None:
    """Write N x rows x cols uint8 images in IDX layout."""
    images = np.ascontiguousarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">iiii", IMAGES_MAGIC, n, rows, cols))
        f.write(images.tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    """Write N uint8 labels in IDX layout."""
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">ii", LABELS_MAGIC, labels.shape[0]))
        f.write(labels.tobytes())


def synthetic_digits(
    n: int,
    seed: int = 0,
    template_seed: int = 0,
    side: int = 28,
    num_classes: int = 10,
    noise: float = 0.15,
) -> Dataset:
    """Reproducible classification stand-in with MNIST-like shapes.

    Each class gets a fixed random template image drawn from
    template_seed; samples add Gaussian pixel noise drawn from seed, are
    clipped to [0, 1], and quantized to byte precision so IDX round-trips
    are exact. Train/test splits share templates by sharing template_seed
    while using different sample seeds. Useful when the real dataset files
    are not available.
    """
    rng = make_rng(seed)
    d = side * side
    templates = make_rng(template_seed).random((num_classes, d))
    labels = rng.integers(0, num_classes, size=n)
    pixels = np.clip(templates[labels] + noise * rng.standard_normal((n, d)), 0.0, 1.0)
    bytes_ = np.round(pixels * 255.0).astype(np.uint8)
    return Dataset(inputs=bytes_.astype(np.float64) / 255.0, labels=labels, num_classes=num_classes)
