"""Test suite for spider-2y-banana Python scripts."""
