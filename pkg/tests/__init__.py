"""Tests for the geotomo toolkit."""
