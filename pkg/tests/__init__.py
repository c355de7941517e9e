"""Tests for the relmesh solver package."""
