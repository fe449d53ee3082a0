"""Bubble-tower blow-up solutions of 2x2 singular Liouville systems."""
