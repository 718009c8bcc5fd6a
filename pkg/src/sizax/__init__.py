"""sizax: size and runtime analysis for a small equational functional language.

The pipeline parses an applicative program, checks or infers sized types
(simple types annotated with size indices, polymorphic in index variables
at rank up to 2), reduces runtime analysis to size analysis by threading a
unary clock through the program, and discharges the generated inequalities
by synthesizing polynomial interpretations for the unknown index symbols.
A call-by-value reference interpreter validates every reported bound.
"""

__version__ = "0.1.0"

from .lang import Program  # noqa: F401
from .parser import parse_program  # noqa: F401
