"""
Unit tests for netreg package.

Unit tests test individual components in isolation.
"""
