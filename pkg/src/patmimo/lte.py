"""Mapping of LTE numerology and tabulated channel profiles onto the
block-fading parameters (coherence block size, diversity branches,
blocklength).

A control-channel codeword occupies ``d`` OFDM symbols in each of ``r``
adjacent resource blocks per coherence band, across ``L`` coherence bands:
one coherence block spans 12 * d * r resource elements.  Profiles are
reduced to their 50% coherence bandwidth/time, taken as given constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class GeometryError(ValueError):
    """A requested resource-block geometry violates the profile constraints."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class ChannelProfile:
    """A tapped-delay-line profile abstracted to coherence constants."""

    name: str
    coherence_bandwidth_hz: float
    coherence_time_s: float
    system_bandwidth_hz: float = 20e6
    rb_bandwidth_hz: float = 180e3
    rb_duration_s: float = 0.5e-3

    def __post_init__(self):
        v = []
        for field in (
            "coherence_bandwidth_hz",
            "coherence_time_s",
            "system_bandwidth_hz",
            "rb_bandwidth_hz",
            "rb_duration_s",
        ):
            if not getattr(self, field) > 0:
                v.append(f"{field} must be > 0, got {getattr(self, field)}")
        if self.coherence_bandwidth_hz > self.system_bandwidth_hz:
            v.append(
                f"coherence bandwidth {self.coherence_bandwidth_hz:g} Hz exceeds "
                f"system bandwidth {self.system_bandwidth_hz:g} Hz"
            )
        if v:
            raise GeometryError(v)

    @property
    def max_diversity_branches(self) -> int:
        """Largest number of independently fading coherence bands in the system band."""
        return int(math.floor(self.system_bandwidth_hz / self.coherence_bandwidth_hz))

    @property
    def max_rbs_per_coherence_band(self) -> int:
        return int(math.floor(self.coherence_bandwidth_hz / self.rb_bandwidth_hz))

    @property
    def offers_time_diversity(self) -> bool:
        """Whether the channel decorrelates within a single RB duration."""
        return self.coherence_time_s < self.rb_duration_s


EPA_5HZ = ChannelProfile("EPA-5Hz", coherence_bandwidth_hz=4.4e6, coherence_time_s=85e-3)
TDLC_300 = ChannelProfile("TDL-C-300ns-3kmh", coherence_bandwidth_hz=0.66e6, coherence_time_s=85e-3)


def builtin_profiles() -> list[ChannelProfile]:
    """The two bundled profiles (pedestrian low-dispersion, urban high-dispersion)."""
    return [EPA_5HZ, TDLC_300]


def profile_by_name(name: str) -> ChannelProfile:
    key = name.strip().lower().replace("_", "-")
    aliases = {
        "epa": EPA_5HZ,
        "epa-5hz": EPA_5HZ,
        "epa5hz": EPA_5HZ,
        "tdl-c": TDLC_300,
        "tdlc": TDLC_300,
        "tdl-c-300ns-3kmh": TDLC_300,
        "tdlc-300ns-3kmh": TDLC_300,
        "tdlc300": TDLC_300,
    }
    if key not in aliases:
        known = sorted(set(a for a in aliases))
        raise GeometryError([f"unknown profile {name!r}; known names: {', '.join(known)}"])
    return aliases[key]


@dataclass(frozen=True)
class BlockGeometry:
    """Resource-block layout of one codeword and the induced fading geometry."""

    profile: ChannelProfile
    ofdm_symbols_per_rb: int
    rbs_per_coherence_band: int
    diversity_branches: int

    @property
    def coherence_block_size(self) -> int:
        return 12 * self.ofdm_symbols_per_rb * self.rbs_per_coherence_band

    @property
    def blocklength(self) -> int:
        return self.diversity_branches * self.coherence_block_size


def make_geometry(
    profile: ChannelProfile, d: int, r: int, diversity_branches: int
) -> BlockGeometry:
    """Validate and build the geometry with n_c = 12 * d * r channel uses per block."""
    v = []
    if not 1 <= d <= 3:
        v.append(f"ofdm_symbols_per_rb d must be in [1, 3], got {d}")
    if r < 1:
        v.append(f"rbs_per_coherence_band r must be >= 1, got {r}")
    elif r > profile.max_rbs_per_coherence_band:
        v.append(
            f"r = {r} exceeds the {profile.max_rbs_per_coherence_band} RBs that fit in "
            f"one coherence band of {profile.name}"
        )
    if diversity_branches < 1:
        v.append(f"diversity_branches must be >= 1, got {diversity_branches}")
    elif diversity_branches > profile.max_diversity_branches:
        v.append(
            f"L = {diversity_branches} exceeds the maximum "
            f"{profile.max_diversity_branches} diversity branches of {profile.name}"
        )
    if v:
        raise GeometryError(v)
    return BlockGeometry(profile, d, r, diversity_branches)
