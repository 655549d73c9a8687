"""Procedural attribute-labelled face-like dataset.

Every image is a flat-colour cartoon face drawn analytically on a
coordinate grid: background, hair cap, face ellipse, eyes, mouth, plus one
glyph per binary attribute.  The generator is deliberately simple so that
every downstream claim is checkable:

* rendering is a pure function of (identity, attrs, resolution);
* each attribute draws only inside a documented region mask, and those
  masks are mutually disjoint, so "toggling one attribute only changes its
  own region" holds exactly;
* identities carry enough colour/geometry variation for a metric embedder
  to separate them.

Attribute order is fixed: glasses, smile, age_lines, hair_length.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DatasetError, GeometryError

ATTRIBUTES = ("glasses", "smile", "age_lines", "hair_length")
K = len(ATTRIBUTES)

# Reference resolution for the pixel-valued identity fields.
BASE_RESOLUTION = 64

# Canvas layout constants (fractions of the canvas side).
_CX, _CY = 0.5, 0.52
_EYE_Y = _CY - 0.08
_EYE_R = 0.024
_MOUTH_Y = _CY + 0.16
_GLASS_HALF = 0.052
_GLASS_T = 0.013
_MANIFEST_NAME = "manifest.jsonl"
_META_NAME = "meta.json"


@dataclass(frozen=True)
class IdentitySpec:
    """Static per-person appearance; attributes never change these fields."""

    face_shape_params: np.ndarray  # (ax, ay, skin_r, skin_g, skin_b)
    eye_spacing: float             # distance between eye centres, px at 64
    hair_color: np.ndarray         # RGB in [0,1]
    background_color: np.ndarray   # RGB in [0,1]
    identity_id: int

    def validate(self) -> None:
        ax, ay = float(self.face_shape_params[0]), float(self.face_shape_params[1])
        skin = np.asarray(self.face_shape_params[2:5], dtype=float)
        eye_dx = self.eye_spacing / (2.0 * BASE_RESOLUTION)
        problems = []
        if not 0.10 <= ax <= 0.36:
            problems.append(f"face half-width {ax:.3f} outside [0.10, 0.36]")
        if not 0.10 <= ay <= 0.44:
            problems.append(f"face half-height {ay:.3f} outside [0.10, 0.44]")
        if _CX + 1.32 * ax > 1.0:
            problems.append(f"hair band right edge {_CX + 1.32 * ax:.3f} beyond canvas")
        if _CY + ay > 0.98:
            problems.append(f"chin {_CY + ay:.3f} beyond canvas")
        if not 0.05 <= eye_dx <= 0.125:
            problems.append(f"eye half-spacing {eye_dx:.3f} outside [0.05, 0.125]")
        for name, col in (("skin", skin), ("hair", self.hair_color),
                          ("background", self.background_color)):
            c = np.asarray(col, dtype=float)
            if c.shape != (3,) or c.min() < 0.0 or c.max() > 1.0:
                problems.append(f"{name} colour {c} not an RGB triple in [0,1]")
        if problems:
            raise GeometryError(f"identity {self.identity_id}: " + "; ".join(problems))


@dataclass(frozen=True)
class AttributeVector:
    """Target attribute intensities, one entry per name in ATTRIBUTES."""

    s: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.s, dtype=np.float64)
        if arr.shape != (K,):
            raise ValueError(f"attribute vector must have length {K}, got shape {arr.shape}")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError(f"attribute intensities must lie in [0,1], got {arr}")
        object.__setattr__(self, "s", arr)

    @property
    def binary(self) -> bool:
        return bool(np.all((self.s == 0.0) | (self.s == 1.0)))


@dataclass(frozen=True)
class LabeledImage:
    image: np.ndarray          # (H, W, 3) in [0,1], quantised to the 8-bit grid
    attrs: AttributeVector
    identity: IdentitySpec
    seed: int


def identity_from_id(identity_id: int, seed: int) -> IdentitySpec:
    """Deterministic identity parameters for (dataset seed, identity id)."""
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0x7FFFFFFF, identity_id]))
    ax = rng.uniform(0.22, 0.34)
    ay = rng.uniform(0.30, 0.42)
    skin = np.array([rng.uniform(0.60, 0.95), rng.uniform(0.50, 0.85),
                     rng.uniform(0.40, 0.75)])
    eye_dx = rng.uniform(0.07, 0.12)
    hair = rng.uniform(0.05, 0.60, size=3)
    bg = rng.uniform(0.05, 0.95, size=3)
    # Keep the long-hair glyph and the face readable against the backdrop.
    while np.abs(hair - bg).sum() < 0.45 or np.abs(skin - bg).sum() < 0.30:
        bg = rng.uniform(0.05, 0.95, size=3)
    spec = IdentitySpec(
        face_shape_params=np.array([ax, ay, *skin]),
        eye_spacing=2.0 * eye_dx * BASE_RESOLUTION,
        hair_color=hair,
        background_color=bg,
        identity_id=int(identity_id),
    )
    spec.validate()
    return spec


def _check_resolution(resolution: int) -> None:
    if resolution < 32 or (resolution & (resolution - 1)) != 0:
        raise ValueError(f"resolution must be a power of two >= 32, got {resolution}")


def _grids(resolution: int) -> tuple[np.ndarray, np.ndarray]:
    coords = (np.arange(resolution) + 0.5) / resolution
    return np.meshgrid(coords, coords, indexing="ij")  # yy, xx


def region_masks(identity: IdentitySpec, resolution: int) -> np.ndarray:
    """(K, H, W) boolean masks bounding each attribute's drawable region.

    The masks are identity-dependent (they follow the eye spacing and face
    size) but attribute-value-independent, and pairwise disjoint.
    """
    _check_resolution(resolution)
    yy, xx = _grids(resolution)
    ax = float(identity.face_shape_params[0])
    eye_dx = identity.eye_spacing / (2.0 * BASE_RESOLUTION)
    masks = np.zeros((K, resolution, resolution), dtype=bool)
    # glasses: band around both eyes
    masks[0] = (np.abs(xx - _CX) <= eye_dx + _GLASS_HALF + _GLASS_T) & \
               (np.abs(yy - _EYE_Y) <= _GLASS_HALF + _GLASS_T)
    # smile: mouth box covering the neutral bar and the arc
    masks[1] = (np.abs(xx - _CX) <= 0.10) & (yy >= _MOUTH_Y - 0.035) & (yy <= _MOUTH_Y + 0.065)
    # age_lines: forehead band
    masks[2] = (np.abs(xx - _CX) <= 0.125) & (yy >= _CY - 0.265) & (yy <= _CY - 0.185)
    # hair_length: side bands hugging the face
    band = (np.abs(xx - _CX) >= 1.02 * ax) & (np.abs(xx - _CX) <= 1.30 * ax)
    masks[3] = band & (yy >= _CY - 0.18) & (yy <= _CY + 0.30)
    return masks


def _paint(img: np.ndarray, mask: np.ndarray, color: np.ndarray) -> None:
    img[mask] = color


def render_face(identity: IdentitySpec, attrs: AttributeVector, resolution: int,
                seed: int = 0) -> LabeledImage:
    """Draw one face.  Pure function of (identity, attrs, resolution)."""
    _check_resolution(resolution)
    identity.validate()
    if not attrs.binary:
        raise ValueError("render_face expects binary attribute values")
    yy, xx = _grids(resolution)
    ax, ay = float(identity.face_shape_params[0]), float(identity.face_shape_params[1])
    skin = np.asarray(identity.face_shape_params[2:5], dtype=np.float64)
    eye_dx = identity.eye_spacing / (2.0 * BASE_RESOLUTION)
    a = attrs.s

    img = np.empty((resolution, resolution, 3), dtype=np.float64)
    img[:] = identity.background_color

    # hair cap behind the face
    hair_ell = ((xx - _CX) / (1.16 * ax)) ** 2 + ((yy - (_CY - 0.02)) / (1.16 * ay)) ** 2 <= 1.0
    _paint(img, hair_ell & (yy <= _CY - 0.45 * ay), identity.hair_color)

    # face
    face = ((xx - _CX) / ax) ** 2 + ((yy - _CY) / ay) ** 2 <= 1.0
    _paint(img, face, skin)

    # long hair side bands (drawn over the face edge)
    if a[3] == 1.0:
        band = (np.abs(xx - _CX) >= 1.02 * ax) & (np.abs(xx - _CX) <= 1.30 * ax) & \
               (yy >= _CY - 0.18) & (yy <= _CY + 0.30)
        _paint(img, band, identity.hair_color)

    # forehead age lines
    if a[2] == 1.0:
        for line_y in (_CY - 0.205, _CY - 0.245):
            stroke = (np.abs(xx - _CX) <= 0.11) & (np.abs(yy - line_y) <= 0.010)
            _paint(img, stroke, skin * 0.55)

    # eyes
    eye_col = np.array([0.08, 0.08, 0.12])
    for ex in (_CX - eye_dx, _CX + eye_dx):
        _paint(img, (xx - ex) ** 2 + (yy - _EYE_Y) ** 2 <= _EYE_R ** 2, eye_col)

    # glasses frames plus bridge
    if a[0] == 1.0:
        g = np.zeros_like(face)
        for ex in (_CX - eye_dx, _CX + eye_dx):
            outer = (np.abs(xx - ex) <= _GLASS_HALF + _GLASS_T) & \
                    (np.abs(yy - _EYE_Y) <= _GLASS_HALF + _GLASS_T)
            inner = (np.abs(xx - ex) <= _GLASS_HALF - _GLASS_T) & \
                    (np.abs(yy - _EYE_Y) <= _GLASS_HALF - _GLASS_T)
            g |= outer & ~inner
        bridge = (np.abs(xx - _CX) <= eye_dx - _GLASS_HALF + _GLASS_T) & \
                 (np.abs(yy - _EYE_Y) <= _GLASS_T)
        _paint(img, g | bridge, np.array([0.08, 0.08, 0.08]))

    # mouth: neutral bar or upward arc
    mouth_col = np.array([0.45, 0.10, 0.12])
    if a[1] == 1.0:
        rel = (xx - _CX) / 0.085
        arc_y = _MOUTH_Y + 0.042 * (1.0 - rel ** 2)
        mouth = (np.abs(xx - _CX) <= 0.085) & (np.abs(yy - arc_y) <= 0.012)
    else:
        mouth = (np.abs(xx - _CX) <= 0.085) & (np.abs(yy - _MOUTH_Y) <= 0.012)
    _paint(img, mouth, mouth_col)

    # Quantise onto the 8-bit grid so PNG round-trips are exact.
    img = np.round(img * 255.0) / 255.0
    return LabeledImage(image=img, attrs=attrs, identity=identity, seed=int(seed))


# ----------------------------------------------------------------------
# dataset planning and storage
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class DatasetRecord:
    path: str
    attrs: tuple[int, ...]
    identity_id: int
    seed: int
    split: str
    mask_path: str

    def to_json(self) -> str:
        # Field order is part of the manifest contract.
        return json.dumps({
            "path": self.path,
            "attrs": list(self.attrs),
            "identity_id": self.identity_id,
            "seed": self.seed,
            "split": self.split,
            "mask_path": self.mask_path,
        }, separators=(", ", ": "))


def _largest_remainder(n: int, ratios: tuple[float, float, float]) -> list[int]:
    raw = [n * r for r in ratios]
    counts = [int(np.floor(x)) for x in raw]
    rem = n - sum(counts)
    order = np.argsort([c - f for c, f in zip(raw, counts)])[::-1]
    for i in range(rem):
        counts[order[i % 3]] += 1
    return counts


def plan_dataset(n: int, split_ratios: tuple[float, float, float], seed: int,
                 images_per_identity: int = 8) -> list[DatasetRecord]:
    """Draw the (identity, attrs) assignments without rendering anything."""
    if n < 100:
        raise DatasetError(f"need n >= 100 to build balanced splits, got {n}")
    if abs(sum(split_ratios) - 1.0) > 1e-9:
        raise DatasetError(f"split ratios must sum to 1, got {split_ratios}")
    counts = _largest_remainder(n, split_ratios)
    n_ids = max(3, n // images_per_identity)
    id_counts = _largest_remainder(n_ids, split_ratios)
    for c_imgs, c_ids, name in zip(counts, id_counts, ("train", "val", "test")):
        if c_imgs > 0 and c_ids == 0:
            raise DatasetError(
                f"split {name!r} gets {c_imgs} images but no identities; "
                f"raise n or rebalance ratios")
    pools = []
    start = 0
    for c in id_counts:
        pools.append(list(range(start, start + c)))
        start += c

    rng = np.random.default_rng(seed)
    records: list[DatasetRecord] = []
    idx = 0
    for split, count, pool in zip(("train", "val", "test"), counts, pools):
        for _ in range(count):
            identity_id = pool[int(rng.integers(len(pool)))] if pool else 0
            attrs = tuple(int(v) for v in rng.integers(0, 2, size=K))
            records.append(DatasetRecord(
                path=f"images/img_{idx:06d}.png",
                attrs=attrs,
                identity_id=identity_id,
                seed=int(seed),
                split=split,
                mask_path=f"masks/identity_{identity_id:05d}.npz",
            ))
            idx += 1
    return records


def make_dataset(out_dir: str | Path, n: int,
                 split_ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
                 seed: int = 0, resolution: int = BASE_RESOLUTION) -> Path:
    """Render a dataset to disk: PNG images, per-identity masks, manifest."""
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    records = plan_dataset(n, split_ratios, seed)

    written_masks: set[int] = set()
    for rec in records:
        identity = identity_from_id(rec.identity_id, seed)
        labelled = render_face(identity, AttributeVector(np.array(rec.attrs, dtype=float)),
                               resolution, seed=seed)
        arr8 = np.round(labelled.image * 255.0).astype(np.uint8)
        Image.fromarray(arr8).save(out / rec.path)
        if rec.identity_id not in written_masks:
            masks = region_masks(identity, resolution)
            np.savez_compressed(out / rec.mask_path, masks=masks)
            written_masks.add(rec.identity_id)

    with open(out / _MANIFEST_NAME, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(rec.to_json() + "\n")
    with open(out / _META_NAME, "w", encoding="utf-8") as f:
        json.dump({"n": n, "split_ratios": list(split_ratios), "seed": seed,
                   "resolution": resolution, "attributes": list(ATTRIBUTES)},
                  f, indent=2)
        f.write("\n")
    return out


def read_manifest(data_dir: str | Path) -> list[DatasetRecord]:
    records = []
    with open(Path(data_dir) / _MANIFEST_NAME, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            d = json.loads(line)
            records.append(DatasetRecord(
                path=d["path"], attrs=tuple(d["attrs"]), identity_id=d["identity_id"],
                seed=d["seed"], split=d["split"], mask_path=d["mask_path"]))
    return records


def dataset_meta(data_dir: str | Path) -> dict:
    with open(Path(data_dir) / _META_NAME, encoding="utf-8") as f:
        return json.load(f)


def load_image(data_dir: str | Path, rec: DatasetRecord) -> np.ndarray:
    arr = np.asarray(Image.open(Path(data_dir) / rec.path).convert("RGB"))
    return arr.astype(np.float32) / 255.0


def load_masks(data_dir: str | Path, rec: DatasetRecord) -> np.ndarray:
    with np.load(Path(data_dir) / rec.mask_path) as z:
        return z["masks"]


@dataclass
class SplitArrays:
    """One split fully materialised for training: NCHW images plus labels."""

    images: np.ndarray       # (N, 3, H, W) float32 in [0,1]
    labels: np.ndarray       # (N, K) float32 binary
    identity_ids: np.ndarray  # (N,) int64
    records: list[DatasetRecord]


def load_split(data_dir: str | Path, split: str) -> SplitArrays:
    recs = [r for r in read_manifest(data_dir) if r.split == split]
    if not recs:
        raise DatasetError(f"split {split!r} is empty in {data_dir}")
    images = np.stack([load_image(data_dir, r).transpose(2, 0, 1) for r in recs])
    labels = np.array([r.attrs for r in recs], dtype=np.float32)
    ids = np.array([r.identity_id for r in recs], dtype=np.int64)
    return SplitArrays(images=images, labels=labels, identity_ids=ids, records=recs)
