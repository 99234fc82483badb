"""Desk-scale toolkit for colored uniform hypergraphs and their limits.

Modules
-------
hypercore   colored r-graphs, colorings, vertex sampling
graphon     grid partitions, step graphons, embeddings, graphon sampling
density     induced densities, sample distributions, total variation
cutnorm     r-cut norms, cut-P-norms, cut distances (oracle + heuristic)
energy      ground state energies, tensor reduction, concentration runs
regularity  weak regularity decomposition of step graphons
transfer    coloring transfer, base case, recursive lifting, nd pipeline
testers     parameter / property tester harnesses
cli         command line front end
"""

__version__ = "0.1.0"
