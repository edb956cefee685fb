"""Tests for the Gizatullin surface toolkit."""
