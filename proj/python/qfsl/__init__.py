"""Transductive zero-shot learning with a bias-regularized attribute classifier."""

from ._qfsl import (  # noqa: F401
    ConfigError,
    DataError,
    NumericalError,
    SynthSpec,
    TrainConfig,
    Model,
    Dataset,
    generate_synthetic,
    load_dataset,
    save_dataset,
    train,
    evaluate,
    harmonic,
    mca,
    gradcheck,
    load_model,
    run_cli,
)

__all__ = [name for name in dir() if not name.startswith("_")]
