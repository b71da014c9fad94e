"""Two-step suction grasp affordance detection with a self-supervised learning loop."""

__version__ = "0.1.0"
