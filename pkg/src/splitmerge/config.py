"""Dataclass configs for the passes and the pipeline."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

MODES = ("identity", "fission_only", "fusion_only", "fufi_sep", "fufi_ori", "fufi_all")


@dataclass
class FissionConfig:
    min_effect: int = 2
    max_regions_per_function: Optional[int] = None
    default_trip_count: int = 10


@dataclass
class FusionConfig:
    deep: bool = True
    seed: int = 0
    max_params: int = 6


@dataclass
class ObfuscationConfig:
    mode: str = "fufi_all"
    seed: int = 0
    fission: FissionConfig = field(default_factory=FissionConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ObfuscationConfig":
        d = dict(d)
        fission = FissionConfig(**d.pop("fission", {}))
        fusion = FusionConfig(**d.pop("fusion", {}))
        return cls(fission=fission, fusion=fusion, **d)
