"""DAN Lab - distributional adversarial networks on synthetic mixtures."""

__version__ = "0.1.0"
