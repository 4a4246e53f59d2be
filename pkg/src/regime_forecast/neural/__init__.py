"""Small numpy LSTM engine with exact backpropagation through time."""

from .gradcheck import analytic_gradients, gradient_check, sample_loss
from .layers import (
    LEAKY_ALPHA, DenseLayerParams, LstmLayerParams, dense_backward, dense_forward, leaky_relu,
    lstm_cell_backward, lstm_cell_forward, lstm_layer_backward, lstm_layer_forward, sigmoid,
)
from .network import (
    NetworkGraph, backward, forward, load_network, make_network, network_from_dict, network_to_dict,
    predict, save_network,
)
from .optim import AdadeltaState, adadelta_step, mse_loss

__all__ = [
    "LEAKY_ALPHA", "AdadeltaState", "DenseLayerParams", "LstmLayerParams", "NetworkGraph",
    "adadelta_step", "analytic_gradients", "backward", "dense_backward", "dense_forward", "forward",
    "gradient_check", "leaky_relu", "load_network", "lstm_cell_backward", "lstm_cell_forward",
    "lstm_layer_backward", "lstm_layer_forward", "make_network", "mse_loss", "network_from_dict",
    "network_to_dict", "predict", "sample_loss", "save_network", "sigmoid",
]
