"""ipsd: simulation and duality-verification toolkit for stochastic
spatial competition models.

The package couples three model layers that are exact duals of one
another and uses the duality identities as machine-checkable oracles:

* a {0,1} competition spin system on a finite kernel, with a graphical
  construction whose transposed replay is an exact pathwise parity dual;
* its mean-field frequency ODE on the complete graph;
* lattice Wright-Fisher diffusions whose mixed moments are dual to
  coalescing / branching / annihilating random walkers.
"""

__version__ = "0.1.0"
