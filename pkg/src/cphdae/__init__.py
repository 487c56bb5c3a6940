"""Compact port-Hamiltonian DAE modelling, structural analysis and simulation of circuits."""
