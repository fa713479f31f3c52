"""Analyze -> select -> extract orchestration and batch manifests."""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Mapping, Optional

from . import keypoints as kp
from .keypoints import KeypointSequence, clean_sequence, load_keypoints
from .motion import VelocitySeries, compute_velocity, velocity_csv
from .transcode import (TranscoderError, TranscoderSettings, build_command,
                        find_transcoder, probe_video, run)
from .wavelet import CwtConfig, EnergySeries, energy_series, filter_peaks
from .window import WindowSelection, select_window

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_TRANSCODER = 2
EXIT_PARTIAL = 3


class InputError(ValueError):
    """Bad or unreadable input; carries the offending path in its message."""


@dataclass(frozen=True)
class PipelineConfig:
    joint_index: int = 0
    window_seconds: float = 6.0
    peak_threshold_frames: int = 3
    boundary_margin_frames: int = 10
    scale_min: int = 1
    scale_max: int = 128
    scale_step: int = 1
    morlet_omega0: float = 6.0
    conf_min: float = kp.DEFAULT_CONF_MIN
    outlier_factor: float = kp.DEFAULT_OUTLIER_FACTOR
    codec: str = "libx264"
    quality: int = 23
    transcoder: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if self.joint_index < 0:
            raise ValueError(f"joint_index must be >= 0, got {self.joint_index}")
        if not self.window_seconds > 0:
            raise ValueError(f"window_seconds must be positive, got {self.window_seconds}")
        if self.peak_threshold_frames < 1:
            raise ValueError(f"peak_threshold_frames must be >= 1, got {self.peak_threshold_frames}")
        if self.boundary_margin_frames < 0:
            raise ValueError(f"boundary_margin_frames must be >= 0, got {self.boundary_margin_frames}")
        if not 0 <= self.conf_min <= 1:
            raise ValueError(f"conf_min must be in [0, 1], got {self.conf_min}")
        if not self.outlier_factor > 0:
            raise ValueError(f"outlier_factor must be positive, got {self.outlier_factor}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        self.cwt  # validates the scale settings

    @property
    def cwt(self) -> CwtConfig:
        return CwtConfig(self.scale_min, self.scale_max, self.scale_step, self.morlet_omega0)

    @property
    def transcoder_settings(self) -> TranscoderSettings:
        return TranscoderSettings(self.codec, self.quality, self.transcoder)

    def merged(self, overrides: Optional[Mapping]) -> "PipelineConfig":
        if not overrides:
            return self
        unknown = set(overrides) - {f.name for f in fields(self)}
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return replace(self, **overrides)

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"{path}: cannot read config: {exc}") from None
        return cls().merged(doc)


def dump_document(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


@dataclass
class Analysis:
    sequence: KeypointSequence
    cleaning: kp.CleaningReport
    velocity: VelocitySeries
    energy: EnergySeries
    selection: WindowSelection


def analyze_sequence(seq: KeypointSequence, config: PipelineConfig = PipelineConfig()) -> Analysis:
    cleaned, report = clean_sequence(seq, config.conf_min, config.outlier_factor)
    velocity = compute_velocity(cleaned, config.joint_index)
    energy = filter_peaks(energy_series(velocity, config.cwt), config.peak_threshold_frames)
    selection = select_window(energy, cleaned.fps, cleaned.n_frames,
                              config.window_seconds, config.boundary_margin_frames)
    return Analysis(cleaned, report, velocity, energy, selection)


def _analyze_path(keypoints_path, config: PipelineConfig) -> Analysis:
    try:
        seq = load_keypoints(keypoints_path)
        return analyze_sequence(seq, config)
    except OSError as exc:
        raise InputError(f"{keypoints_path}: {exc.strerror or exc}") from None
    except (ValueError, IndexError) as exc:
        raise InputError(f"{keypoints_path}: {exc}") from None


def run_analyze(keypoints_path, config: PipelineConfig = PipelineConfig(), energy_csv=None,
                plot_path=None, velocity_csv_path=None) -> Analysis:
    """Compute the energy series and write the requested artifacts."""
    result = _analyze_path(keypoints_path, config)
    if energy_csv:
        _write(energy_csv, result.energy.to_csv())
    if velocity_csv_path:
        _write(velocity_csv_path, velocity_csv(result.velocity))
    if plot_path:
        from .plotting import plot_energy
        plot_energy(plot_path, result.energy, result.velocity.fps, result.selection,
                    title=Path(keypoints_path).stem)
    return result


def run_select(keypoints_path, config: PipelineConfig = PipelineConfig(), output_path=None) -> WindowSelection:
    selection = _analyze_path(keypoints_path, config).selection
    if output_path:
        _write(output_path, dump_document(selection.to_document()))
    return selection


@dataclass
class Extraction:
    selection: WindowSelection
    command: List[str]
    sidecar_path: str
    warnings: List[str] = field(default_factory=list)


def sidecar_path_for(output_path) -> str:
    return str(output_path) + ".json"


def run_extract(video_path, keypoints_path, output_path,
                config: PipelineConfig = PipelineConfig()) -> Extraction:
    """Cut the selected window out of ``video_path`` into ``output_path``.

    A sidecar ``<output>.json`` records the selection and the exact command.
    Nothing is written when the transcoder is missing or fails.
    """
    exe = find_transcoder(config.transcoder)
    if not os.path.isfile(video_path):
        raise InputError(f"{video_path}: video not found")
    analysis = _analyze_path(keypoints_path, config)
    seq = analysis.sequence
    warnings = []
    probe = probe_video(exe, video_path)
    if probe.duration is None:
        warnings.append("could not read video duration")
    else:
        slack = 1.0 / seq.fps + 1e-6
        if probe.duration > seq.duration + slack:
            raise InputError(
                f"{video_path}: video ({probe.duration:.3f}s) is longer than its keypoint sequence "
                f"({seq.duration:.3f}s)")
        if probe.duration < seq.duration - slack:
            warnings.append(
                f"video ({probe.duration:.3f}s) is shorter than its keypoint sequence ({seq.duration:.3f}s)")
    for w in warnings:
        log.warning("%s: %s", video_path, w)

    cmd = build_command(exe, video_path, output_path, analysis.selection, seq.fps,
                        config.transcoder_settings)
    Path(output_path).parent.mkdir(parents=True, exist_ok=True)
    run(cmd, str(output_path))
    sidecar = sidecar_path_for(output_path)
    _write(sidecar, dump_document({
        "selection": analysis.selection.to_document(),
        "command": cmd,
        "video_path": str(video_path),
        "keypoints_path": str(keypoints_path),
        "audio": "dropped",
        "warnings": warnings,
    }))
    return Extraction(analysis.selection, cmd, sidecar, warnings)


# -- batch -----------------------------------------------------------------

@dataclass(frozen=True)
class BatchManifestEntry:
    keypoints_path: str
    output_path: str
    video_path: Optional[str] = None
    overrides: Mapping = field(default_factory=dict)

    @classmethod
    def from_document(cls, doc, base_dir: Path) -> "BatchManifestEntry":
        if not isinstance(doc, dict):
            raise ValueError("manifest entry must be an object")
        for key in ("keypoints_path", "output_path"):
            if not isinstance(doc.get(key), str) or not doc[key]:
                raise ValueError(f"manifest entry needs a non-empty {key!r}")
        video = doc.get("video_path")
        if video is not None and (not isinstance(video, str) or not video):
            raise ValueError("'video_path' must be a non-empty string or null")
        overrides = doc.get("overrides") or {}
        if not isinstance(overrides, dict):
            raise ValueError("'overrides' must be an object")

        def resolve(p):
            return str(p if os.path.isabs(p) else base_dir / p)

        return cls(resolve(doc["keypoints_path"]), resolve(doc["output_path"]),
                   resolve(video) if video else None, overrides)


def read_manifest(path) -> List[dict]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read manifest: {exc.strerror or exc}") from None
    docs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            docs.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}:{lineno}: malformed manifest line: {exc}") from None
    return docs


def _run_entry(index: int, doc, base_dir: Path, config: PipelineConfig,
               cli_overrides: Optional[Mapping]) -> dict:
    result = {"index": index}
    try:
        entry = BatchManifestEntry.from_document(doc, base_dir)
        result.update(keypoints_path=entry.keypoints_path, output_path=entry.output_path,
                      video_path=entry.video_path)
        cfg = config.merged(entry.overrides).merged(cli_overrides)
        if entry.video_path:
            selection = run_extract(entry.video_path, entry.keypoints_path, entry.output_path, cfg).selection
        else:
            selection = run_select(entry.keypoints_path, cfg, entry.output_path)
        result.update(status="ok", selection=selection.to_document())
    except TranscoderError as exc:
        result.update(status="error", error=str(exc), exit_code=EXIT_TRANSCODER)
    except (InputError, ValueError, TypeError, OSError) as exc:
        result.update(status="error", error=str(exc), exit_code=EXIT_INPUT)
    return result


@dataclass
class BatchReport:
    entries: List[dict]
    metadata: dict = field(default_factory=dict)

    @property
    def failed(self) -> int:
        return sum(e["status"] != "ok" for e in self.entries)

    @property
    def exit_code(self) -> int:
        return EXIT_PARTIAL if self.failed else EXIT_OK

    def to_document(self) -> dict:
        return {
            "entries": self.entries,
            "succeeded": len(self.entries) - self.failed,
            "failed": self.failed,
            "metadata": self.metadata,
        }


def run_batch(manifest_path, config: PipelineConfig = PipelineConfig(),
              cli_overrides: Optional[Mapping] = None, workers: Optional[int] = None) -> BatchReport:
    """Process every manifest line; one failing entry never stops the rest.

    Entries run on a thread pool of ``workers`` (default ``config.workers``)
    and the report lists them in manifest order.  Timing lives only under
    ``metadata``.
    """
    started = time.perf_counter()
    stamp = datetime.now(timezone.utc).isoformat()
    docs = read_manifest(manifest_path)
    base_dir = Path(manifest_path).resolve().parent
    n_workers = workers or (cli_overrides or {}).get("workers") or config.workers
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        entries = list(pool.map(
            lambda item: _run_entry(item[0], item[1], base_dir, config, cli_overrides),
            enumerate(docs)))
    metadata = {"started_at": stamp, "elapsed_seconds": time.perf_counter() - started,
                "workers": n_workers}
    return BatchReport(entries, metadata)


def selection_documents(report: BatchReport) -> List[Optional[dict]]:
    """Per-entry selections, the part of a report that must not depend on
    scheduling."""
    return [e.get("selection") for e in report.entries]

