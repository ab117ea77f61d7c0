"""Labeled synthetic document datasets with Table-style manifests.

Every document instance renders one guilloche texture per ROI (parameters
jittered per instance), counterfeits run through the scan-print degradation,
and every instance receives a small random translation so downstream
cross-correlation alignment is exercised. All randomness derives from the
manifest seed.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import uuid
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..docmodel import DocumentModel
from ..imaging import Image, encode_png
from ..rectify import warp_perspective
from .degrade import PAPER_LIKE, CounterfeitParams, degrade
from .guilloche import GuillocheParams, rainbow_stops, render_genuine

__all__ = ["DatasetRecord", "DatasetManifest", "build_dataset", "load_manifest",
           "roi_texture_params"]

SCHEMA = "docauth.dataset/1"
GENUINE_LABEL = "genuine"
COUNTERFEIT_LABEL = "counterfeit"

_TEXTURE_PAD = 24  # rendered margin around each ROI, px

_RING_POOL = ((9, 4), (7, 3), (8, 5), (11, 4), (10, 7),
              (5, 2), (9, 5), (7, 4), (12, 5), (11, 3))
_LISS_POOL = ((5, 4), (7, 5), (4, 3), (6, 5), (5, 3))


@dataclass(frozen=True)
class DatasetRecord:
    path: str
    model_id: str
    label: str
    split_hint: str
    params_hash: str


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    seed: int
    model_id: str
    n_images: int
    n_textures: int
    n_train: int
    n_test: int
    pct_counterfeit_train: float
    pct_counterfeit_test: float
    records: tuple[DatasetRecord, ...]

    @property
    def pct_counterfeit(self) -> float:
        n_c = sum(1 for r in self.records if r.label == COUNTERFEIT_LABEL)
        return 100.0 * n_c / len(self.records)


def roi_texture_params(seed: int, roi_index: int) -> GuillocheParams:
    """Deterministic base texture parameters for one ROI of a model."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, roi_index)))
    family = "hypotrochoid" if roi_index % 2 == 0 else "lissajous"
    return GuillocheParams(
        family=family,
        ring_ratio=_RING_POOL[roi_index % len(_RING_POOL)],
        pen_ratio=float(rng.uniform(1.2, 2.4)),
        liss_freq=_LISS_POOL[roi_index % len(_LISS_POOL)],
        line_width=float(rng.uniform(1.8, 2.6)),
        strand_count=int(rng.integers(6, 11)),
        strand_shift=float(rng.uniform(0.25, 0.55)),
        base_phase=float(rng.uniform(0, 2 * np.pi)),
        amplitude=float(rng.uniform(0.85, 0.98)),
        color_stops=rainbow_stops(hue_offset=float(rng.uniform(0, 1))),
        seed=int(rng.integers(0, 2 ** 31)),
    )


def _jitter_params(base: GuillocheParams, rng) -> GuillocheParams:
    """Small per-instance phase/color perturbation (genuine intra-class
    variance)."""
    hue_nudge = float(rng.normal(0.0, 0.015))
    stops = tuple(tuple(int(np.clip(c * (1.0 + hue_nudge), 0, 255)) for c in s)
                  for s in base.color_stops)
    return dataclasses.replace(
        base,
        base_phase=float(base.base_phase + rng.normal(0.0, 0.3)),
        line_width=float(np.clip(base.line_width + rng.normal(0.0, 0.06), 1.0, 4.0)),
        color_stops=stops,
        seed=int(rng.integers(0, 2 ** 31)),
    )


def render_document(model: DocumentModel, roi_params: list[GuillocheParams]) -> Image:
    """Paper-tint canvas with each ROI's texture rendered over a padded rect."""
    w, h = model.size_px
    canvas = np.empty((h, w, 3), dtype=np.uint8)
    canvas[:] = (247, 243, 235)
    for roi, params in zip(model.rois, roi_params):
        x, y, rw, rh = roi.rect
        x0, y0 = max(0, x - _TEXTURE_PAD), max(0, y - _TEXTURE_PAD)
        x1, y1 = min(w, x + rw + _TEXTURE_PAD), min(h, y + rh + _TEXTURE_PAD)
        tile = render_genuine(params, x1 - x0, y1 - y0, dpi=model.working_dpi)
        canvas[y0:y1, x0:x1] = tile.data
    return Image(canvas, dpi=model.working_dpi)


def _translate(img: Image, dx: float, dy: float) -> Image:
    H = np.array([[1.0, 0.0, dx], [0.0, 1.0, dy], [0.0, 0.0, 1.0]])
    return warp_perspective(img, H, img.width, img.height)


def render_instance(model: DocumentModel, seed: int, index: int,
                    counterfeit: bool,
                    counterfeit_params: CounterfeitParams = PAPER_LIKE,
                    max_shift: float = 5.0):
    """Render one document instance; returns (image, params_hash)."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2, index)))
    roi_params = [_jitter_params(roi_texture_params(seed, i), rng)
                  for i in range(len(model.rois))]
    img = render_document(model, roi_params)
    if counterfeit:
        cp = dataclasses.replace(counterfeit_params, seed=int(rng.integers(0, 2 ** 31)))
        img = degrade(img, cp)
    dx, dy = rng.uniform(-max_shift, max_shift, size=2)
    img = _translate(img, float(dx), float(dy))
    digest = hashlib.sha256(repr((seed, index, counterfeit,
                                  [dataclasses.astuple(p) for p in roi_params])
                                 ).encode()).hexdigest()[:16]
    return img, digest


def build_dataset(n_genuine: int, n_counterfeit: int, model: DocumentModel,
                  out_dir: str | Path, seed: int = 0,
                  counterfeit_params: CounterfeitParams = PAPER_LIKE,
                  train_fraction: float = 0.7,
                  progress=None) -> DatasetManifest:
    """Render the dataset under ``out_dir`` and write its manifest.

    Layout: ``<out_dir>/<model_id>/<label>/<uuid>.png`` plus
    ``<out_dir>/manifest.jsonl`` (header line with the schema version and
    aggregate counts, then one record per line).
    """
    if n_genuine < 1 or n_counterfeit < 1:
        raise ValueError("need at least one document per class")
    root = Path(out_dir)
    labels = [GENUINE_LABEL] * n_genuine + [COUNTERFEIT_LABEL] * n_counterfeit
    records = []
    for idx, label in enumerate(labels):
        img, digest = render_instance(model, seed, idx,
                                      counterfeit=label == COUNTERFEIT_LABEL,
                                      counterfeit_params=counterfeit_params)
        name_rng = np.random.default_rng(
            np.random.SeedSequence(seed, spawn_key=(3, idx)))
        name = str(uuid.UUID(bytes=name_rng.bytes(16), version=4))
        rel = Path(model.model_id) / label / f"{name}.png"
        dest = root / rel
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_bytes(encode_png(img))
        records.append(DatasetRecord(path=str(rel), model_id=model.model_id,
                                     label=label, split_hint="",
                                     params_hash=digest))
        if progress is not None:
            progress(idx + 1, len(labels))

    split_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(4,)))
    hints = [""] * len(records)
    for label in (GENUINE_LABEL, COUNTERFEIT_LABEL):
        idxs = [i for i, r in enumerate(records) if r.label == label]
        split_rng.shuffle(idxs)
        n_train = int(round(train_fraction * len(idxs)))
        for j, i in enumerate(idxs):
            hints[i] = "train" if j < n_train else "test"
    records = [dataclasses.replace(r, split_hint=hints[i])
               for i, r in enumerate(records)]

    train = [r for r in records if r.split_hint == "train"]
    test = [r for r in records if r.split_hint == "test"]
    pct = lambda rs: (100.0 * sum(1 for r in rs if r.label == COUNTERFEIT_LABEL)
                      / len(rs)) if rs else 0.0
    manifest = DatasetManifest(
        root=root, seed=seed, model_id=model.model_id,
        n_images=len(records), n_textures=len(model.rois),
        n_train=len(train), n_test=len(test),
        pct_counterfeit_train=pct(train), pct_counterfeit_test=pct(test),
        records=tuple(records))
    _write_manifest(manifest)
    return manifest


def _write_manifest(m: DatasetManifest) -> None:
    header = {"schema": SCHEMA, "seed": m.seed, "model_id": m.model_id,
              "n_images": m.n_images, "n_textures": m.n_textures,
              "n_train": m.n_train, "n_test": m.n_test,
              "pct_counterfeit_train": round(m.pct_counterfeit_train, 4),
              "pct_counterfeit_test": round(m.pct_counterfeit_test, 4)}
    lines = [json.dumps(header, sort_keys=True)]
    lines += [json.dumps(dataclasses.asdict(r), sort_keys=True) for r in m.records]
    (m.root / "manifest.jsonl").write_text("\n".join(lines) + "\n")


def load_manifest(path: str | Path) -> DatasetManifest:
    """Read a manifest written by :func:`build_dataset`; verifies the schema
    and that every referenced file exists."""
    path = Path(path)
    root = path.parent if path.is_file() else path
    fp = path if path.is_file() else path / "manifest.jsonl"
    lines = fp.read_text().strip().splitlines()
    header = json.loads(lines[0])
    if header.get("schema") != SCHEMA:
        raise ValueError(f"unsupported manifest schema {header.get('schema')!r}")
    records = tuple(DatasetRecord(**json.loads(line)) for line in lines[1:])
    if len(records) != header["n_images"]:
        raise ValueError("manifest record count disagrees with header")
    for r in records:
        if not (root / r.path).exists():
            raise FileNotFoundError(root / r.path)
    return DatasetManifest(
        root=root, seed=header["seed"], model_id=header["model_id"],
        n_images=header["n_images"], n_textures=header["n_textures"],
        n_train=header["n_train"], n_test=header["n_test"],
        pct_counterfeit_train=header["pct_counterfeit_train"],
        pct_counterfeit_test=header["pct_counterfeit_test"],
        records=records)
