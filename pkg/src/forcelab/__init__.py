"""Finite combinatorics laboratory for a translation-nondisjointness forcing."""
