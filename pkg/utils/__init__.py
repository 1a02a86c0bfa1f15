"""Exceções e validadores numéricos compartilhados pelas apps do chaoslab."""
