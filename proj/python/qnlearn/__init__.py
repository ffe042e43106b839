"""Learn closed queuing-network models from queue-length traces."""

from ._qnlearn import (
    QnModel,
    Trace,
    TrainConfig,
    TrainReport,
    Violation,
    find_bottleneck,
    load_dataset,
    loss,
    predict,
    prediction_error,
    random_model,
    selfloop_transform,
    simulate,
    steady_state,
    train,
    validate_model,
    whatif,
)

__all__ = [
    "QnModel",
    "Trace",
    "TrainConfig",
    "TrainReport",
    "Violation",
    "find_bottleneck",
    "load_dataset",
    "loss",
    "predict",
    "prediction_error",
    "random_model",
    "selfloop_transform",
    "simulate",
    "steady_state",
    "train",
    "validate_model",
    "whatif",
]
