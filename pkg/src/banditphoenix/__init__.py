"""
BanditPhoenix: online clustering of bandits (CLUB and GCLUB), the
LinUCB/UCB1/random baselines, a synthetic clustered environment and a
MovieLens replay pipeline.
"""

__version__ = "0.1.0"
