"""Simulation and analysis lab for partition-based reflecting-surface
MIMO Rayleigh channels: Monte Carlo outage estimation, closed-form and
quadrature outage expressions, and diversity-multiplexing tradeoffs."""

__version__ = "0.1.0"

from .channel import (  # noqa: F401
    ChannelDims,
    ChannelRealization,
    PartitionPlan,
    ReflectionState,
    Scheme,
    SchemeConfig,
    build_reflection,
    draw_channel,
    effective_channel,
    mutual_information_subslot,
    slot_mutual_information,
)
from .errors import (  # noqa: F401
    AccuracyError,
    ContourError,
    DomainError,
    InsufficientDataError,
    PoleError,
    SpecfileError,
    UnsupportedConfigurationError,
)
