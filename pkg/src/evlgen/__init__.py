"""Generative modeling via minimum-over-guesses training.

Subpackages cover the numeric core (seeded RNG, dense linear algebra),
a from-scratch MLP with RMSprop, the min-over-K-guesses training loss
with a probability head and rejection sampling, synthetic datasets,
histogram divergences, classical baselines, and an experiment harness.
"""

from evlgen.numcore import Rng

__all__ = ["Rng"]
__version__ = "0.1.0"
