"""Effective configuration of one CLI run"""
from dataclasses import dataclass, field

from rmt.models.vertex import AvrParams


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs after defaults, config file and flags are merged"""

    input_paths: tuple = ()
    keypoints: tuple = ('thumb-tip', 'index-fingertip')
    params: AvrParams = field(default_factory=AvrParams)
    normalize: bool = True
    out_dir: str = 'out'
    report_format: str = 'json'
    timestamps: bool = False
    emit_signal: bool = False
    jobs: int = 1
    seed: int = None
    method_name: str = 'RMT'
    agreement_thresholds: dict = field(default_factory=dict)
    pck_thresholds: tuple = ()
    significant_digits: int = 6
