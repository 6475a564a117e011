"""Two-stage company classification: industry codes, then product/service codes.

Pipeline: load taxonomies and companies (taxonomy), embed text (embedding),
weak-label a training set from a source mapping plus similarity
thresholding (weaklabel), train an MLP industry classifier (classifier),
rank product/service codes within predicted industries (pscode), score the
results (evaluation). A deterministic synthetic corpus (corpus) and a CLI
(cli) tie it together.
"""

__version__ = "0.1.0"
