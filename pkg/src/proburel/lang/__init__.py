from .parser import ParseError, SourceProgram, UnboundedDomain, parse_expr, parse_file, parse_program
from .printer import program_text, source_text
