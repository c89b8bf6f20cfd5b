"""Unsupervised online time-series prediction with an STDP-trained recurrent
spiking network, randomly distributed embeddings and topological losses."""

__version__ = "0.1.0"
