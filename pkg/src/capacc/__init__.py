"""Transmission- and climate-aware Delta ELCC capacity accreditation."""

__version__ = "0.1.0"
