"""
Chernlink CLI entry point.

This module makes the package executable with 'python -m chernlink_app'.
"""

from .cli import app

if __name__ == "__main__":
    app()
