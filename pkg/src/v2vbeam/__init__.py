"""Position-aware top-M mmWave beam prediction for V2V links.

Subpackages and modules:

- ``geodata``: GPS positions and min-max normalization
- ``ingest``: dataset CSV schema, splitting, persistence
- ``synthchan``: ULA/codebook math and synthetic scenario generation
- ``fingerprint``: location-binned baseline predictor
- ``neuralbeam``: from-scratch 1D-CNN classifier, Adam, training loop
- ``evalmetrics``: top-M accuracy and received-power ratio
- ``experiment``: end-to-end pipeline with repeats
- ``cli``: command-line interface
"""

from . import (
    errors,
    evalmetrics,
    experiment,
    fingerprint,
    geodata,
    ingest,
    neuralbeam,
    synthchan,
)

__version__ = "0.1.0"

__all__ = [
    "errors",
    "evalmetrics",
    "experiment",
    "fingerprint",
    "geodata",
    "ingest",
    "neuralbeam",
    "synthchan",
    "__version__",
]
