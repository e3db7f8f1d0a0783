"""File formats spoken by the pipeline: mask text files, flow fields,
heatmap containers, feature tables, images and key-value documents."""

from __future__ import annotations
