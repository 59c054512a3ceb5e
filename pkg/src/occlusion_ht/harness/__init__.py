"""Experiment harness: configuration, I/O, batch runs and the command line."""
