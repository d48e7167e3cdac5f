"""Test suite for spoofguard."""
