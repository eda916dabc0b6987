"""Prior Lab - self-supervised objectives as constrained K-means, and prior matching"""
__version__ = "1.0.0"
