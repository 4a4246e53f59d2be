"""Hybrid hidden (semi-)Markov / LSTM forecasting of traffic-flow fluctuations."""

__version__ = "0.1.0"
