"""
Scenario runner, sweep driver and command-line entry points
"""
