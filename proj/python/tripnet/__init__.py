"""Python bindings for the TripNet temporal localization agent."""

from ._core import (
    ACTIONS,
    ConfigError,
    DataError,
    Environment,
    FormatError,
    action_offsets,
    clamped_iou,
    discounted_returns,
    evaluate,
    gae,
    generate,
    localize,
    oracle_ceiling,
    policy_loss,
    read_features,
    resolved_config,
    shaped_reward,
    temporal_iou,
    train,
    value_loss,
    write_features,
)

__all__ = [
    "ACTIONS",
    "ConfigError",
    "DataError",
    "Environment",
    "FormatError",
    "action_offsets",
    "clamped_iou",
    "discounted_returns",
    "evaluate",
    "gae",
    "generate",
    "localize",
    "oracle_ceiling",
    "policy_loss",
    "read_features",
    "resolved_config",
    "shaped_reward",
    "temporal_iou",
    "train",
    "value_loss",
    "write_features",
]
