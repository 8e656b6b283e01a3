from .tensor import Parameter, Tensor, seeded_init
from .ops import (add, bce_loss, dropout, gcn_conv, global_mean_pool, gru_cell,
                  linear, matmul, mse_loss, mul, relu, sigmoid, sub, tanh)
from .optim import adam_step, clip_global_norm
from .checkpoint import CheckpointError, load_checkpoint, restore_parameters, save_checkpoint

__all__ = [
    "Tensor", "Parameter", "seeded_init",
    "add", "sub", "mul", "matmul", "linear", "relu", "sigmoid", "tanh",
    "dropout", "gcn_conv", "global_mean_pool", "gru_cell", "mse_loss", "bce_loss",
    "adam_step", "clip_global_norm",
    "save_checkpoint", "load_checkpoint", "restore_parameters", "CheckpointError",
]
