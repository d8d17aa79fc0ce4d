"""End-to-end run: split, segment the cartoon, cluster the texture, write outputs."""
import json
import os
import platform
import time
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
import scipy

from . import __version__
from .cartoon_segmentation import CartoonSegParams, segment
from .clustering import KMeansParams, MBOClusterParams, kmeans, multiclass_mbo
from .decomposition import DecompositionParams, decompose
from .empirical_curvelet import modified_ect, save_coefficients
from .errors import InvalidParameterError, StageError
from .io import load_image, save_label_map
from .presets import get_preset
from .spectral_partition import DetectionParams
from .texture_features import feature_matrix

METHODS = ("kmeans", "mbo")


@dataclass(frozen=True)
class PipelineConfig:
    decomposition: DecompositionParams = field(default_factory=DecompositionParams)
    cartoon: CartoonSegParams = field(default_factory=CartoonSegParams)
    detection: DetectionParams = field(default_factory=DetectionParams)
    method: str = "kmeans"
    kmeans: KMeansParams = field(default_factory=KMeansParams)
    mbo: MBOClusterParams = field(default_factory=MBOClusterParams)
    seed: int = 0
    input_path: str | None = None
    output_dir: str | None = None
    stem: str | None = None
    dump_subbands: str | None = None
    preset: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParameterError(f"method must be one of {METHODS}, got {self.method!r}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, doc):
        """Build a config from nested dicts; a ``preset`` entry is applied first
        and explicit values override it."""
        doc = dict(doc)
        merged = {}
        if doc.get("preset"):
            for key, val in get_preset(doc["preset"]).items():
                if isinstance(val, dict):
                    merged[key] = dict(val)
        for key, val in doc.items():
            if isinstance(val, dict):
                merged.setdefault(key, {}).update(val)
            else:
                merged[key] = val
        nested = {"decomposition": DecompositionParams, "cartoon": CartoonSegParams,
                  "detection": DetectionParams, "kmeans": KMeansParams,
                  "mbo": MBOClusterParams}
        known = {f.name for f in fields(cls)}
        unknown = set(merged) - known
        if unknown:
            raise InvalidParameterError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for key, val in merged.items():
            if key in nested:
                try:
                    kwargs[key] = nested[key](**val)
                except TypeError as exc:
                    raise InvalidParameterError(f"config section {key!r}: {exc}") from exc
            else:
                kwargs[key] = val
        return cls(**kwargs)

    def seeded(self):
        """Copy with the top-level seed pushed into both clustering stages."""
        return replace(self, kmeans=replace(self.kmeans, seed=self.seed),
                       mbo=replace(self.mbo, seed=self.seed))


@dataclass
class PipelineResult:
    cartoon_labels: np.ndarray | None
    texture_labels: np.ndarray | None
    partition: object
    report: dict


def _versions():
    return {"stmseg": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


class _Stages:
    """Runs named stages, timing them and attributing failures."""

    def __init__(self, report):
        self.report = report

    def run(self, name, fn, *args, **kwargs):
        start = time.perf_counter()
        try:
            return fn(*args, **kwargs)
        except Exception as exc:
            self.report["status"] = "failed"
            self.report["failed_stage"] = name
            self.report["error"] = f"{type(exc).__name__}: {exc}"
            raise StageError(name, exc) from exc
        finally:
            self.report["timings"][name] = round(time.perf_counter() - start, 6)


def cluster_texture(D, cfg):
    """k-means, optionally refined by multiclass MBO seeded from it."""
    km = kmeans(D, cfg.kmeans)
    info = {"kmeans_objective": km.objective, "kmeans_iterations": km.iterations}
    if cfg.method == "kmeans":
        return km.labels, info
    mb = multiclass_mbo(D, km.labels, cfg.mbo)
    info["mbo_iterations"] = mb.iterations
    return mb.labels, info


def run_pipeline(cfg, image=None, input_info=None, cartoon=True, texture=True):
    """Run every stage on ``image`` (or ``cfg.input_path``) and write outputs.

    ``cartoon=False`` or ``texture=False`` skips that branch; its label map
    is then None and not written.

    Outputs go to ``cfg.output_dir`` when set: ``<stem>.cartoon.png``,
    ``<stem>.texture.png`` (each with colour preview and JSON sidecar),
    ``<stem>.partition.json`` and ``<stem>.report.json``.  Label maps are
    written only after every stage succeeded; on failure the report records
    ``status: failed`` and the stage, and :class:`StageError` is raised.
    """
    cfg = cfg.seeded()
    report = {"status": "running", "config": cfg.to_dict(), "seed": cfg.seed,
              "versions": _versions(), "timings": {}}
    stages = _Stages(report)
    stem = cfg.stem or (os.path.splitext(os.path.basename(cfg.input_path))[0]
                        if cfg.input_path else "stmseg")
    try:
        if image is None:
            image, input_info = stages.run("load", load_image, cfg.input_path)
        report["input"] = input_info or {}
        image = np.asarray(image, dtype=np.float64)
        report["input"]["shape"] = list(image.shape)

        parts = stages.run("decompose", decompose, image, cfg.decomposition)
        cartoon_labels = texture_labels = part = None
        if cartoon:
            seg = stages.run("cartoon", segment, parts.cartoon, cfg.cartoon)
            cartoon_labels = seg.labels
            report["cartoon"] = {"iterations": seg.iterations, "converged": seg.converged,
                                 "c": seg.stats.c.tolist(), "d": seg.stats.d.tolist()}
        if texture:
            part, texture_labels = _texture_branch(stages, parts.texture, cfg, report)
        report["status"] = "ok"
        if cfg.output_dir:
            stages.run("write", _write_outputs, cfg.output_dir, stem, cartoon_labels,
                       texture_labels, part, report)
    finally:
        if cfg.output_dir and report["status"] != "ok":
            _write_report(cfg.output_dir, stem, report)
    return PipelineResult(cartoon_labels, texture_labels, part, report)


def _texture_branch(stages, v, cfg, report):
    part, bank, coeffs = stages.run("curvelet", modified_ect, v, cfg.detection)
    report["partition"] = part.to_dict()
    report["transition"] = asdict(bank.transition)
    if cfg.dump_subbands:
        stages.run("dump_subbands", save_coefficients, coeffs, bank, cfg.dump_subbands)
    feats = stages.run("features", feature_matrix, coeffs, part)
    report["features"] = {"columns": [list(c) for c in feats.columns],
                          "radii": list(feats.radii)}
    labels, info = stages.run("cluster", cluster_texture, feats.data, cfg)
    report["texture"] = info
    return part, labels.reshape(np.shape(v))


def _write_report(out_dir, stem, report):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, stem + ".report.json"), "w") as fh:
        json.dump(report, fh, indent=2, default=str)


def _write_outputs(out_dir, stem, cartoon_labels, texture_labels, part, report):
    os.makedirs(out_dir, exist_ok=True)
    meta = {"scale": report["input"].get("scale"), "offset": report["input"].get("offset")}
    files = []
    if cartoon_labels is not None:
        files += save_label_map(os.path.join(out_dir, stem + ".cartoon.png"),
                                cartoon_labels, metadata=meta)
    if texture_labels is not None:
        files += save_label_map(os.path.join(out_dir, stem + ".texture.png"),
                                texture_labels, metadata=meta)
    if part is not None:
        files.append(os.path.join(out_dir, stem + ".partition.json"))
        with open(files[-1], "w") as fh:
            fh.write(part.to_json(indent=2))
    report["outputs"] = files + [os.path.join(out_dir, stem + ".report.json")]
    _write_report(out_dir, stem, report)
