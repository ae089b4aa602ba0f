"""
graspbench

Grasp generation and verification, physics scene QA, batched IK and benchmark
task predicates for tabletop and household manipulation scenes.
The command-line entry point lives in graspbench.cli.
"""

__all__ = ["__version__"]

__version__ = "0.1.0"
