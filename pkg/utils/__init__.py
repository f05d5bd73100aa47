"""Exact integer, lattice and LP helpers for dkplab"""
