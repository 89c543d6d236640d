"""System-graph modeling language compiler and CTL model checker for SSI patterns."""

__version__ = "0.1.0"
