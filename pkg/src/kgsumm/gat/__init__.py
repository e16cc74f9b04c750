from kgsumm.gat.model import (
    Example,
    GatConfig,
    GatModel,
    GraphTensors,
    attention_layer,
    backward,
    batch_loss_and_grad,
    embed_node,
    embed_nodes,
    forward,
    forward_logits,
    grad_check,
    graph_tensors,
    merge_examples,
    loss,
    masked_softmax,
    parameter_shapes,
)
from kgsumm.gat.train import (
    Adam,
    TrainingError,
    TrainingGraph,
    TrainingLog,
    predict,
    predict_probabilities,
    prepare,
    salience_labels,
    sample_negatives,
    train,
)

__all__ = [
    "Adam",
    "Example",
    "GatConfig",
    "GatModel",
    "GraphTensors",
    "TrainingError",
    "TrainingGraph",
    "TrainingLog",
    "attention_layer",
    "backward",
    "batch_loss_and_grad",
    "embed_node",
    "embed_nodes",
    "forward",
    "forward_logits",
    "grad_check",
    "graph_tensors",
    "merge_examples",
    "loss",
    "masked_softmax",
    "parameter_shapes",
    "predict",
    "predict_probabilities",
    "prepare",
    "salience_labels",
    "sample_negatives",
    "train",
]
