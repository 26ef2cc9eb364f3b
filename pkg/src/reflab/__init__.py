"""reflab: a desk-scale lab for easy-to-understand referring expressions.

Generates referring expressions with a context-aware speaker (tri-source
attention over global cells, target-local cells, and a visual sentinel),
scores them with a reinforcer, trains both with ranking-aware objectives
derived from human identification time and accuracy, and evaluates with
rank-weighted consensus metrics.
"""

__version__ = "0.1.0"
