"""windnav: a wind-aware UAV navigation sandbox.

Subpackages cover procedural urban maps, unsteady 2D wind simulation,
UAV rigid-body and power models, synthetic sensing, indirect wind
estimation, learned local wind-field decoding, energy-aware receding
horizon planning, and a batch experiment harness.
"""

__version__ = "0.1.0"
