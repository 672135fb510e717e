"""Collapsing functions and proof codes for Kripke-Platek set theory."""
