"""Skeleton action recognition with an associative self-organizing map.

Layers: skeleton preprocessing, associative SOM with one-frame-delayed
self-association (which supports internal simulation when native input
stops), fixed-length winner patterns, a pattern-space SOM, and a cosine
output layer.
"""
__version__ = "0.1.0"
