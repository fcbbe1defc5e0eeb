"""Tasker test suite."""
