"""
Symflow Project
Datalog program analysis with native and SMT solving of symbolic bit-vector expressions
"""

__version__ = "0.1.0"
__author__ = "Symflow Team"
__description__ = "Datalog program analysis with native and SMT solving of symbolic bit-vector expressions"
