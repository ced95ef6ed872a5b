"""Effective hyperbolicity toolkit for non-autonomous germ sequences"""

__version__ = '0.3.0'
