"""Probe toolkit: train frame-importance scorers on video-feature sequences,
perturb temporal order, and measure the effect on rank-correlation evaluation."""

__version__ = "0.1.0"
