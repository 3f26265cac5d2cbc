"""Gridworld reinforcement-learning recommender over binary-matrix biclusters."""

__version__ = "0.1.0"
