"""Attention-state prediction from smartphone notification behavior.

Subpackages map to the pipeline stages: ``dataset`` (types, parsing,
validation, filtering), ``features`` (encodings and labelers),
``trees`` (CART, forests, boosting), ``evaluation`` (metrics and
hold-out protocols), ``stats`` (tests and the mixed model), ``synth``
(synthetic data with planted structure), and ``cli``.
"""

__version__ = "0.1.0"
