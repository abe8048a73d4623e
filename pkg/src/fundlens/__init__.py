"""Multimodal crowdfunding campaign analytics.

Pipeline: ingest campaign snapshots, extract basic / population / text /
image-quality / face features, screen factors per goal band and category
with Bonferroni-corrected Pearson correlations, then classify success with
a from-scratch random forest using early or late fusion.
"""

__version__ = "0.1.0"
