"""
bohmlab: exact solutions of the 1D Schrödinger equation built from
generating functions, with symbolic and numerical verification.
"""

import logging

__version__ = "0.1.0"

logging.getLogger(__name__).addHandler(logging.NullHandler())
