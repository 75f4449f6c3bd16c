"""Tests for grok-lab."""
