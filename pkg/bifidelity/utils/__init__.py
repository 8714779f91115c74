"""
bifidelity.utils
~~~~~~~~~~~~~~~~

Utility functions for bi-fidelity experiments.

:copyright: (c) 2021 bifidelity developers
:license: MIT
"""
