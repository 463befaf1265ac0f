"""Fault-tolerant quantum computing with Steane <-> Reed-Muller code switching.

Subpackages cover the full stack: stabilizer code definitions (`codes`),
data-qubit layout search on a 2D grid (`layout`), physical circuit synthesis
(`synthesis`), noisy stabilizer simulation and threshold estimation (`sim`),
lookup-table decoding (`decoder`), logical-program compilation with
switching-aware passes (`compiler`), multi-qubit placement (`placement`),
and a command-line front end (`cli`).
"""

__version__ = "0.1.0"
