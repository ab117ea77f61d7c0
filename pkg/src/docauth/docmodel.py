"""Registered document types: physical geometry, working resolution and the
named background-texture regions each classifier validates."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["RoiSpec", "DocumentModel", "load_model", "save_model",
           "synthetic_id_model"]

# ROI side limits (pixels) defined at the 600 dpi reference resolution
_MIN_ROI_SIDE_600 = 100
_MAX_ROI_SIDE_600 = 600
_MIN_WORKING_DPI = 400


@dataclass(frozen=True)
class RoiSpec:
    """A named texture rectangle at working resolution, with an optional
    anchor patch used for cross-correlation alignment before cropping."""

    roi_id: str
    rect: tuple[int, int, int, int]               # x, y, w, h
    alignment_anchor: tuple[int, int, int, int] | None = None

    def __post_init__(self):
        x, y, w, h = self.rect
        if w <= 0 or h <= 0:
            raise ValueError(f"roi {self.roi_id}: empty rect")
        object.__setattr__(self, "rect", (int(x), int(y), int(w), int(h)))
        if self.alignment_anchor is not None:
            object.__setattr__(self, "alignment_anchor",
                               tuple(int(v) for v in self.alignment_anchor))


@dataclass(frozen=True)
class DocumentModel:
    model_id: str
    side: str                                     # "obverse" | "reverse"
    physical_size_mm: tuple[float, float]         # width, height
    working_dpi: float = 600.0
    rois: tuple[RoiSpec, ...] = field(default_factory=tuple)
    min_train_images: int = 200
    alignment_radius: int = 10

    def __post_init__(self):
        if self.side not in ("obverse", "reverse"):
            raise ValueError("side must be obverse or reverse")
        if self.working_dpi < _MIN_WORKING_DPI:
            raise ValueError(f"working_dpi must be >= {_MIN_WORKING_DPI}")
        object.__setattr__(self, "rois", tuple(self.rois))
        if len(self.rois) < 1:
            raise ValueError("document model needs at least one ROI")
        seen = set()
        w_px, h_px = self.size_px
        scale = self.working_dpi / 600.0
        lo, hi = _MIN_ROI_SIDE_600 * scale, _MAX_ROI_SIDE_600 * scale
        for roi in self.rois:
            if roi.roi_id in seen:
                raise ValueError(f"duplicate roi_id {roi.roi_id!r}")
            seen.add(roi.roi_id)
            x, y, w, h = roi.rect
            if x < 0 or y < 0 or x + w > w_px or y + h > h_px:
                raise ValueError(f"roi {roi.roi_id} outside document bounds")
            if min(w, h) < lo or max(w, h) > hi:
                raise ValueError(
                    f"roi {roi.roi_id}: sides must lie in [{lo:.0f}, {hi:.0f}] px "
                    f"at {self.working_dpi:.0f} dpi")

    @property
    def size_px(self) -> tuple[int, int]:
        w_mm, h_mm = self.physical_size_mm
        return (int(round(w_mm / 25.4 * self.working_dpi)),
                int(round(h_mm / 25.4 * self.working_dpi)))

    def roi(self, roi_id: str) -> RoiSpec:
        for r in self.rois:
            if r.roi_id == roi_id:
                return r
        raise KeyError(roi_id)

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "side": self.side,
            "physical_size_mm": list(self.physical_size_mm),
            "working_dpi": self.working_dpi,
            "min_train_images": self.min_train_images,
            "alignment_radius": self.alignment_radius,
            "rois": [{"roi_id": r.roi_id, "rect": list(r.rect),
                      "alignment_anchor": list(r.alignment_anchor)
                      if r.alignment_anchor else None}
                     for r in self.rois],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DocumentModel":
        rois = tuple(RoiSpec(roi_id=r["roi_id"], rect=tuple(r["rect"]),
                             alignment_anchor=tuple(r["alignment_anchor"])
                             if r.get("alignment_anchor") else None)
                     for r in d["rois"])
        return cls(model_id=d["model_id"], side=d["side"],
                   physical_size_mm=tuple(d["physical_size_mm"]),
                   working_dpi=d.get("working_dpi", 600.0), rois=rois,
                   min_train_images=d.get("min_train_images", 200),
                   alignment_radius=d.get("alignment_radius", 10))


def save_model(model: DocumentModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2, sort_keys=True))


def load_model(path: str | Path) -> DocumentModel:
    return DocumentModel.from_dict(json.loads(Path(path).read_text()))


def synthetic_id_model(n_rois: int = 10, model_id: str = "synthetic-id1",
                       min_train_images: int = 20) -> DocumentModel:
    """ID-1 card (85.6 x 54 mm at 600 dpi -> 2022 x 1276 px) with up to 10
    texture ROIs laid out on a 5 x 2 grid, each with a centered anchor patch."""
    if not 1 <= n_rois <= 10:
        raise ValueError("n_rois must be in [1, 10]")
    widths = [170, 240, 200, 280, 180, 260, 150, 220, 300, 190]
    heights = [150, 200, 260, 170, 230, 140, 210, 280, 160, 240]
    rois = []
    for i in range(n_rois):
        col, row = i % 5, i // 5
        w, h = widths[i], heights[i]
        x = 60 + col * 390 + (30 if row else 0)
        y = 80 + row * 620
        ax, ay = x + (w - 96) // 2, y + (h - 96) // 2
        rois.append(RoiSpec(roi_id=f"roi{i:02d}", rect=(x, y, w, h),
                            alignment_anchor=(ax, ay, 96, 96)))
    return DocumentModel(model_id=model_id, side="obverse",
                         physical_size_mm=(85.6, 54.0), working_dpi=600.0,
                         rois=tuple(rois), min_train_images=min_train_images)
