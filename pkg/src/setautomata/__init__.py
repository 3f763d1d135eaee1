"""Set automata over data words, finite semigroup tools and a two-variable logic pipeline."""

from .core import DataWord, parse_data_word, classes, canonicalize, enumerate_data_words

__all__ = ["DataWord", "parse_data_word", "classes", "canonicalize", "enumerate_data_words"]
__version__ = "0.1.0"
