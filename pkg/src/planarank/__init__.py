"""Planarity ranks of relatively free semigroups (build in progress)."""
