"""Command-line tools: benchmark, proof runners, and format converters.

Each submodule is runnable as ``python -m rigdde.tools.<name>``.
"""
