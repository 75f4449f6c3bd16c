"""grok-lab: grokking experiments on modular arithmetic."""
