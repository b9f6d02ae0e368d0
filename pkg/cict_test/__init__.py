"""Test suite for limsup-lab."""
