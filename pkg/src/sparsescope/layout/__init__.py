"""Cluster-aware scatter layout: sampling, hulls, cartogram, forces."""
