"""camforge: camera-aware retouching toolkit.

Directive parsing, parameter calibration, physically-based transforms,
paired-dataset synthesis, reference quality metrics, a gradient-verified
conditioning stack, and CLI/HTTP front ends.
"""

__version__ = "0.1.0"
