"""
Integration tests for netreg package.

Integration tests run the CLI and the sample, fit and report pipeline end to end.
"""
