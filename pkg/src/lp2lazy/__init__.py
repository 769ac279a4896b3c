"""Translate moded logic programs into lazy functional programs and cross-check them."""

from .syntax import ParseError, ModeError, Program, parse_program, parse_query, parse_term
from .terms import print_term

__version__ = "0.1.0"

__all__ = ["ModeError", "ParseError", "Program", "parse_program", "parse_query", "parse_term", "print_term"]
