"""Multi-instance counterfactual explanations: grouping and evolutionary search."""

__version__ = "1.0.0"
