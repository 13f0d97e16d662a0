"""Cross-domain evaluation lab for similarity-learning type inference.

Mines annotated Python corpora from distinct software domains, trains a
nearest-neighbour type predictor on top of two recurrent encoders, and
measures how dataset shift, rare types, unpredictable types and
out-of-vocabulary tokens degrade cross-domain performance.
"""

__version__ = "0.1.0"
