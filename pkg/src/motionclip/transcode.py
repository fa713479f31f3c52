"""FFmpeg-compatible transcoder invocation."""

from __future__ import annotations

import os
import re
import shutil
import subprocess
from dataclasses import dataclass
from typing import List, Optional

from .window import WindowSelection

TRANSCODER_ENV = "MOTIONCLIP_FFMPEG"
DEFAULT_CODEC = "libx264"
DEFAULT_QUALITY = 23


class TranscoderError(RuntimeError):
    def __init__(self, message: str, stderr: str = ""):
        self.stderr = stderr
        super().__init__(message)


class TranscoderNotFound(TranscoderError):
    pass


@dataclass(frozen=True)
class TranscoderSettings:
    codec: str = DEFAULT_CODEC
    quality: int = DEFAULT_QUALITY
    executable: Optional[str] = None


def find_transcoder(explicit: Optional[str] = None) -> str:
    """Resolve the executable: explicit path, then ``$MOTIONCLIP_FFMPEG``,
    then ``ffmpeg`` on ``PATH``."""
    candidate = explicit or os.environ.get(TRANSCODER_ENV) or "ffmpeg"
    resolved = shutil.which(candidate)
    if resolved is None:
        raise TranscoderNotFound(f"transcoder not found: {candidate}")
    return resolved


def _seconds(x: float) -> str:
    return f"{x:.6f}"


def build_command(executable: str, video_path: str, output_path: str,
                  selection: WindowSelection, fps: float,
                  settings: TranscoderSettings = TranscoderSettings()) -> List[str]:
    """Argument vector for cutting ``selection`` out of ``video_path``.

    Seeking happens before ``-i`` (fast, and frame-accurate because the
    stream is re-encoded); ``-frames:v`` pins the output length to the
    window's frame count.  Audio is dropped.  A whole-video selection is a
    plain re-encode with no seek or duration.
    """
    cmd = [executable, "-nostdin", "-y", "-loglevel", "error"]
    if not selection.whole_video:
        cmd += ["-ss", _seconds(selection.start_seconds)]
    cmd += ["-i", str(video_path)]
    if not selection.whole_video:
        cmd += ["-t", _seconds(selection.duration_seconds),
                "-frames:v", str(selection.end_frame - selection.start_frame)]
    cmd += ["-an", "-c:v", settings.codec, "-crf", str(settings.quality),
            "-pix_fmt", "yuv420p", str(output_path)]
    return cmd


def run(cmd: List[str], output_path: str) -> None:
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        if os.path.exists(output_path):
            os.remove(output_path)
        raise TranscoderError(f"transcoder exited with status {proc.returncode}", proc.stderr)


_DURATION = re.compile(r"Duration:\s*(\d+):(\d+):(\d+(?:\.\d+)?)")


@dataclass(frozen=True)
class VideoProbe:
    duration: Optional[float]
    frames: Optional[int]


def probe_video(executable: str, path: str, count_frames: bool = False) -> VideoProbe:
    """Container duration (and optionally decoded video frame count) via the
    transcoder itself, so no separate probe tool is needed."""
    cmd = [executable, "-nostdin", "-hide_banner", "-i", str(path)]
    if count_frames:
        cmd += ["-map", "0:v:0", "-f", "null", "-progress", "pipe:1", "-"]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    duration = None
    m = _DURATION.search(proc.stderr)
    if m:
        h, mi, s = m.groups()
        duration = int(h) * 3600 + int(mi) * 60 + float(s)
    frames = None
    if count_frames:
        if proc.returncode != 0:
            raise TranscoderError(f"could not decode {path}", proc.stderr)
        hits = re.findall(r"^frame=(\d+)", proc.stdout, flags=re.M)
        frames = int(hits[-1]) if hits else None
    return VideoProbe(duration, frames)
