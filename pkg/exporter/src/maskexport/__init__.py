"""Offline producer of flow, heatmap and feature files.

The tracking side never imports this package; the two meet only in the
files (and the pair manifest) whose layouts are fixed by the consumer's
docs/formats.md.  Writers and readers here are therefore implemented
against that document, not against the consumer's code.
"""

__version__ = "0.1.0"
