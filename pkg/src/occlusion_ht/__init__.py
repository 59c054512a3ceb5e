"""Horvitz-Thompson type estimation of stand density from occluded single-scan plots."""
