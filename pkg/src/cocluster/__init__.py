"""Co-clustering toolkit: spherical double k-means and friends.

Subpackages cover the full desk-scale workflow: dense-matrix primitives
(:mod:`cocluster.matrixlab`), the three fitters (:mod:`cocluster.clusterers`),
pseudo-F model selection (:mod:`cocluster.modelselect`), recovery metrics
(:mod:`cocluster.evalmetrics`), a planted-structure generator
(:mod:`cocluster.synthgen`), a TF-IDF text pipeline
(:mod:`cocluster.textpipeline`) and the command line front end
(:mod:`cocluster.cli`).
"""

__version__ = "0.1.0"
