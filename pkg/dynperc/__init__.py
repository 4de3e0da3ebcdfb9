"""Dynamical percolation: spectra, chains and revealment"""
