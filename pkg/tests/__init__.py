"""
Test package for the partner-aware interaction toolkit.

Provides unit and integration tests for all components.
"""
