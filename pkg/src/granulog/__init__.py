"""Temporalized automata and logics for time granularity."""
