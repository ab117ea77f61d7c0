from .guilloche import GuillocheParams, render_genuine, rainbow_stops
from .degrade import CounterfeitParams, degrade
from .dataset import DatasetManifest, DatasetRecord, build_dataset, load_manifest
from .scene import SceneSample, make_scene

__all__ = [
    "GuillocheParams",
    "render_genuine",
    "rainbow_stops",
    "CounterfeitParams",
    "degrade",
    "DatasetManifest",
    "DatasetRecord",
    "build_dataset",
    "load_manifest",
    "SceneSample",
    "make_scene",
]
