"""Core computation: tensors, networks, adversaries, training and metrics."""
