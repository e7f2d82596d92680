"""Composite sketch+text based image retrieval (CSTBIR).

A desk-scale implementation of the STNet retrieval model: three
transformer encoders (text, sketch, image), sketch-guided attention over
image tokens, five training objectives, a gallery search engine with
Recall@K / Median Rank evaluation, competing baselines, and an HTTP
search service.
"""

__version__ = "0.1.0"
