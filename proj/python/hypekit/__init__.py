"""Knowledge hypergraph embeddings (HypE, HSimplE and baselines)."""

from ._core import (  # noqa: F401
    Checkpoint,
    Dataset,
    EvalReport,
    Fact,
    Metrics,
    Model,
    ModelConfig,
    SeparationReport,
    TrainingConfig,
    Vocab,
    World,
    circshift,
    construct_hsimple,
    construct_hype,
    conv1d,
    dotsum,
    evaluate,
    inverse_reify,
    load_checkpoint,
    load_dataset,
    missing_positions_subset,
    parse_facts,
    random_world,
    reify,
    save_checkpoint,
    star_to_clique,
    train,
    verify_separation,
)

__all__ = [name for name in dir() if not name.startswith("_")]
