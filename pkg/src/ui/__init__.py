"""
UI System for Symflow Project

This package contains the batch command line interface.
"""

from .cli_interface import ConfigurationManager, build_parser, main, run

__all__ = ['ConfigurationManager', 'build_parser', 'main', 'run']
