"""
Tests for bipolarmhd
"""
