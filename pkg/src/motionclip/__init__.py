"""Locate and cut the most complex human-motion window of a keypoint-annotated
video, plus a 3D rotary-embedding kernel and pose-animation metrics."""

from .keypoints import (CleaningReport, KeypointSequence, clean_sequence, load_keypoints,
                        parse_keypoints)
from .metrics import MetricReport, l1, pck, psnr, ssim
from .motion import VelocitySeries, compute_velocity
from .pipeline import PipelineConfig, run_analyze, run_batch, run_extract, run_select
from .rope import (FrequencyLayout, apply_rope, attention_scores, base_frequencies,
                   compose_latents, slf_scale)
from .wavelet import CwtConfig, EnergySeries, cwt_matrix, energy_series, filter_peaks
from .window import WindowSelection, select_window

__version__ = "0.1.0"
