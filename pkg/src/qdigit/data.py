"""Dataset ingestion, augmentation, splitting, and batching.

Images are stored as float64 arrays in [0, 1] at 28x28; normalization to
[-1, 1] happens last, after any augmentation, so out-of-bounds resampling
fills with 0 (ink absence) and maps to -1 afterwards.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import DataError

log = logging.getLogger(__name__)

IMAGE_SIZE = 28
IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass
class Dataset:
    images: np.ndarray          # [N, 28, 28] in [0, 1]
    labels: np.ndarray          # [N] ints in 0..9
    source_ids: list = field(default_factory=list)

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if not self.source_ids:
            self.source_ids = [str(i) for i in range(len(self.labels))]

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.images[idx], self.labels[idx],
                       [self.source_ids[i] for i in idx])


@dataclass
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0
    stratified: bool = True


@dataclass
class AugmentConfig:
    rotate_deg: float = 20.0
    translate_frac: float = 0.1
    hflip_p: float = 0.5
    elastic_alpha: float = 50.0
    elastic_sigma: float = 5.0
    elastic_p: float = 0.5
    enable_rotate: bool = True
    enable_translate: bool = True
    enable_hflip: bool = True
    enable_elastic: bool = True


# ---------------------------------------------------------------------------
# loading

def load_image_dir(root) -> Dataset:
    """Load a class-per-directory grayscale image tree.

    Layout: root/<class_label>/<files>. Pixels are scaled to [0, 1] and
    anything that is not 28x28 is bilinearly resized. File order is sorted
    so the dataset is reproducible.
    """
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"data root {root} is not a directory")
    class_dirs = sorted(d for d in root.iterdir() if d.is_dir())
    if not class_dirs:
        raise DataError(f"no class directories under {root}")
    images, labels, ids = [], [], []
    skipped = 0
    for d in class_dirs:
        try:
            label = int(d.name)
        except ValueError as exc:
            raise DataError(f"class directory {d.name!r} is not an integer label") from exc
        files = sorted(p for p in d.iterdir() if p.is_file())
        loaded_any = False
        for p in files:
            try:
                with Image.open(p) as im:
                    im = im.convert("L")
                    if im.size != (IMAGE_SIZE, IMAGE_SIZE):
                        im = im.resize((IMAGE_SIZE, IMAGE_SIZE), Image.BILINEAR)
                    arr = np.asarray(im, dtype=np.float64) / 255.0
            except Exception:
                skipped += 1
                log.warning("skipping unreadable image %s", p)
                continue
            images.append(arr)
            labels.append(label)
            ids.append(str(p.relative_to(root)))
            loaded_any = True
        if not loaded_any:
            raise DataError(f"class directory {d} contains no readable images")
    if skipped:
        log.warning("skipped %d unreadable files under %s", skipped, root)
    return Dataset(np.stack(images), np.array(labels), ids)


def load_idx(images_path, labels_path) -> Dataset:
    """Load an IDX image/label file pair (the MNIST container format)."""
    img_raw = Path(images_path).read_bytes()
    lab_raw = Path(labels_path).read_bytes()
    if len(img_raw) < 16 or len(lab_raw) < 8:
        raise DataError("IDX file too short for its header")
    magic, count, rows, cols = np.frombuffer(img_raw[:16], dtype=">u4")
    if magic != IDX_IMAGES_MAGIC:
        raise DataError(f"bad IDX image magic 0x{int(magic):08x}")
    lab_magic, lab_count = np.frombuffer(lab_raw[:8], dtype=">u4")
    if lab_magic != IDX_LABELS_MAGIC:
        raise DataError(f"bad IDX label magic 0x{int(lab_magic):08x}")
    if count != lab_count:
        raise DataError(f"image count {count} != label count {lab_count}")
    expected = int(count) * int(rows) * int(cols)
    if len(img_raw) - 16 < expected or len(lab_raw) - 8 < count:
        raise DataError("truncated IDX payload")
    pixels = np.frombuffer(img_raw, dtype=np.uint8, count=expected, offset=16)
    images = pixels.reshape(int(count), int(rows), int(cols)).astype(np.float64) / 255.0
    if (rows, cols) != (IMAGE_SIZE, IMAGE_SIZE):
        images = np.stack([
            np.asarray(Image.fromarray((im * 255).astype(np.uint8))
                       .resize((IMAGE_SIZE, IMAGE_SIZE), Image.BILINEAR),
                       dtype=np.float64) / 255.0
            for im in images])
    labels = np.frombuffer(lab_raw, dtype=np.uint8, count=int(count), offset=8)
    return Dataset(images, labels.astype(np.int64))


# ---------------------------------------------------------------------------
# splitting

def stratified_split(dataset: Dataset, spec: SplitSpec):
    """Per-class deterministic split; rounding is floor plus a seeded coin
    for the fractional remainder, keeping each class within one sample of
    the target fraction."""
    rng = np.random.default_rng(spec.seed)
    train_idx, val_idx = [], []
    if spec.stratified:
        groups = [np.flatnonzero(dataset.labels == c)
                  for c in np.unique(dataset.labels)]
    else:
        groups = [np.arange(len(dataset))]
    for idx in groups:
        perm = idx[rng.permutation(len(idx))]
        exact = spec.train_fraction * len(idx)
        n_train = int(np.floor(exact))
        if rng.random() < exact - n_train:
            n_train = min(n_train + 1, len(idx))
        train_idx.append(perm[:n_train])
        val_idx.append(perm[n_train:])
    train_idx = np.sort(np.concatenate(train_idx))
    val_idx = np.sort(np.concatenate(val_idx))
    return dataset.subset(train_idx), dataset.subset(val_idx)


# ---------------------------------------------------------------------------
# augmentation

def elastic_transform(pixels: np.ndarray, alpha: float, sigma: float,
                      rng: np.random.Generator) -> np.ndarray:
    """Elastic distortion: uniform noise field, Gaussian blur, scale, warp."""
    shape = pixels.shape
    dx = ndimage.gaussian_filter(rng.uniform(-1, 1, shape), sigma) * alpha
    dy = ndimage.gaussian_filter(rng.uniform(-1, 1, shape), sigma) * alpha
    yy, xx = np.meshgrid(np.arange(shape[0]), np.arange(shape[1]), indexing="ij")
    coords = np.stack([yy + dy, xx + dx])
    return ndimage.map_coordinates(pixels, coords, order=1, cval=0.0)


def augment(pixels: np.ndarray, cfg: AugmentConfig,
            rng: np.random.Generator) -> np.ndarray:
    """Rotate, translate, flip, elastic-distort one [0, 1] image.

    Steps apply in that fixed order; each resample is bilinear with
    zero fill outside the frame.
    """
    out = pixels
    if cfg.enable_rotate:
        angle = rng.uniform(-cfg.rotate_deg, cfg.rotate_deg)
        if angle != 0.0:
            out = ndimage.rotate(out, angle, reshape=False, order=1, cval=0.0)
    if cfg.enable_translate:
        h, w = out.shape
        dy = rng.uniform(-cfg.translate_frac, cfg.translate_frac) * h
        dx = rng.uniform(-cfg.translate_frac, cfg.translate_frac) * w
        if dx != 0.0 or dy != 0.0:
            out = ndimage.shift(out, (dy, dx), order=1, cval=0.0)
    if cfg.enable_hflip and rng.random() < cfg.hflip_p:
        out = out[:, ::-1].copy()
    if cfg.enable_elastic and rng.random() < cfg.elastic_p:
        out = elastic_transform(out, cfg.elastic_alpha, cfg.elastic_sigma, rng)
    return np.clip(out, 0.0, 1.0)


def normalize(pixels: np.ndarray) -> np.ndarray:
    """Map [0, 1] intensities to [-1, 1]."""
    return (np.asarray(pixels, dtype=np.float64) - 0.5) / 0.5


def sample_rng(seed: int, epoch: int, index: int) -> np.random.Generator:
    """Deterministic per-sample stream for augmentation."""
    return np.random.default_rng([seed, epoch, index])


# ---------------------------------------------------------------------------
# batching

def batches(dataset: Dataset, batch_size: int, seed: int, epoch: int = 0,
            augment_cfg: AugmentConfig | None = None):
    """Yield ([B, 1, 28, 28] normalized, [B] labels, [B] dataset indices).

    The shuffle is keyed by (seed, epoch); the last partial batch is kept.
    If `augment_cfg` is given, each image is augmented with a per-sample
    rng derived from (seed, epoch, dataset index) before normalization.
    """
    if batch_size < 1:
        raise ValueError("batch size must be positive")
    order = np.random.default_rng([seed, epoch]).permutation(len(dataset))
    for start in range(0, len(order), batch_size):
        idx = order[start:start + batch_size]
        imgs = dataset.images[idx]
        if augment_cfg is not None:
            imgs = np.stack([
                augment(im, augment_cfg, sample_rng(seed, epoch, int(i)))
                for im, i in zip(imgs, idx)])
        yield normalize(imgs)[:, None, :, :], dataset.labels[idx], idx


# ---------------------------------------------------------------------------
# synthetic glyph corpus (desk-scale stand-in for real digit data)

def make_glyph_dataset(n_per_class: int, seed: int = 0,
                       noise: float = 0.08) -> Dataset:
    """Ten distinct geometric glyph classes with jitter and pixel noise.

    Useful for fast end-to-end checks where real handwriting data is
    unavailable. Glyphs are drawn on a 28x28 canvas, randomly offset by a
    couple of pixels, and corrupted with clipped Gaussian noise.
    """
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for label in range(10):
        for _ in range(n_per_class):
            canvas = np.zeros((IMAGE_SIZE, IMAGE_SIZE))
            _draw_glyph(canvas, label)
            oy, ox = rng.integers(-2, 3, size=2)
            canvas = np.roll(np.roll(canvas, oy, axis=0), ox, axis=1)
            canvas += rng.normal(0.0, noise, canvas.shape)
            images.append(np.clip(canvas, 0.0, 1.0))
            labels.append(label)
    return Dataset(np.stack(images), np.array(labels))


def _draw_glyph(canvas: np.ndarray, label: int):
    yy, xx = np.meshgrid(np.arange(IMAGE_SIZE), np.arange(IMAGE_SIZE),
                         indexing="ij")
    c = (IMAGE_SIZE - 1) / 2.0
    r = np.hypot(yy - c, xx - c)
    if label == 0:          # horizontal bar
        canvas[12:16, 4:24] = 1.0
    elif label == 1:        # vertical bar
        canvas[4:24, 12:16] = 1.0
    elif label == 2:        # main diagonal
        canvas[np.abs((yy - 4) - (xx - 4)) <= 1] = 1.0
        canvas[(yy < 4) | (yy > 23) | (xx < 4) | (xx > 23)] = 0.0
    elif label == 3:        # cross
        canvas[12:16, 4:24] = 1.0
        canvas[4:24, 12:16] = 1.0
    elif label == 4:        # square outline
        canvas[6:22, 6:22] = 1.0
        canvas[9:19, 9:19] = 0.0
    elif label == 5:        # filled center square
        canvas[9:19, 9:19] = 1.0
    elif label == 6:        # ring
        canvas[(r >= 6) & (r <= 9)] = 1.0
    elif label == 7:        # filled disc
        canvas[r <= 6] = 1.0
    elif label == 8:        # both diagonals (X)
        canvas[np.abs((yy - 4) - (xx - 4)) <= 1] = 1.0
        canvas[np.abs((yy - 4) + (xx - 23)) <= 1] = 1.0
        canvas[(yy < 4) | (yy > 23) | (xx < 4) | (xx > 23)] = 0.0
    elif label == 9:        # checkerboard blocks
        for by in range(4):
            for bx in range(4):
                if (by + bx) % 2 == 0:
                    canvas[2 + by * 6:8 + by * 6, 2 + bx * 6:8 + bx * 6] = 1.0
    else:
        raise ValueError(f"no glyph for label {label}")
