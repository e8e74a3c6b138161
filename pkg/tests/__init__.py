"""Test package for cexclass."""
