"""
Tests for the dynamic_partitioning package and its command line
"""
