"""HTTP sidecar serving transformer sentence embeddings.

POST /embed turns a batch of texts into mean-pooled, L2-normalized
vectors; GET /health reports the served model and dimension.
"""

__version__ = "0.1.0"
