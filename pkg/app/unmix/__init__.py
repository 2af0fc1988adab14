"""Per-frame unmixing baselines and evaluation metrics."""

from app.unmix.vca import estimate_snr, vca_extract, vca_per_frame
from app.unmix.fcls import fcls_abundances, fcls_pixel
from app.unmix.align import AlignmentMap, align_endmembers, match_to_reference
from app.unmix.metrics import trajectory_rmse

__all__ = [
    "estimate_snr",
    "vca_extract",
    "vca_per_frame",
    "fcls_abundances",
    "fcls_pixel",
    "AlignmentMap",
    "align_endmembers",
    "match_to_reference",
    "trajectory_rmse",
]
