"""Simulation and statistical verification of feedback-stabilised qubit trajectories."""
