"""
Entry point: python cli.py solve|sweep|figure|verify ...
"""
from app.cli import cli

if __name__ == "__main__":
    cli(prog_name="spectrum-bargain")
