"""
Test suite for netreg package.
"""
