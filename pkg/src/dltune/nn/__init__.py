from dltune.nn.checkpoint import load_model, save_model
from dltune.nn.common import (
    DROPOUT_APPLICABILITY,
    MODEL_KINDS,
    DivergenceError,
    StoppingCriterion,
    TrainConfig,
    TrainingError,
)
from dltune.nn.dbn import RBM, RbmStack, dbn_classify, dbn_predict, dbn_pretrain, rbm_cd1_update
from dltune.nn.ffnn import FeedForwardModel, ffnn_fit, ffnn_predict, ffnn_train
from dltune.nn.metrics import accuracy
from dltune.nn.rnn import RecurrentModel, rnn_output, rnn_predict, rnn_step, rnn_train, rnn_train_table
from dltune.nn.sae import (
    AutoencoderLevel,
    AutoencoderStack,
    reconstruction_mse,
    sae_finetune_classify,
    sae_predict,
    sae_pretrain,
)

__all__ = [
    "DROPOUT_APPLICABILITY",
    "MODEL_KINDS",
    "RBM",
    "AutoencoderLevel",
    "AutoencoderStack",
    "DivergenceError",
    "FeedForwardModel",
    "RbmStack",
    "RecurrentModel",
    "StoppingCriterion",
    "TrainConfig",
    "TrainingError",
    "accuracy",
    "dbn_classify",
    "dbn_predict",
    "dbn_pretrain",
    "ffnn_fit",
    "ffnn_predict",
    "ffnn_train",
    "load_model",
    "rbm_cd1_update",
    "reconstruction_mse",
    "rnn_output",
    "rnn_predict",
    "rnn_step",
    "rnn_train",
    "rnn_train_table",
    "sae_finetune_classify",
    "sae_predict",
    "sae_pretrain",
    "save_model",
]
