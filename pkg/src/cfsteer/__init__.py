"""Moment-exact feedback gain synthesis for stochastic mixed-trig-polynomial systems."""

__version__ = "0.1.0"
