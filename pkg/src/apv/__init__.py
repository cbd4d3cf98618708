"""apv: analysis toolkit for asynchronous shared-memory programs.

The package decides safety, termination, and boundedness of asynchronous
programs whose handlers are given as finite sets of words, finite automata,
or pushdown automata, and semi-decides configuration reachability, fair
non-termination, and fair starvation through reduction gadgets.  The
pushdown machinery includes a polynomial construction of downward closures
and a translation of bounded-stack pushdown automata into 1-bounded labeled
Petri nets.
"""

__version__ = "0.1.0"

from .errors import ApvError, InputError, MultisetUnderflow, ResourceLimit
from .multiset import Configuration, Multiset, Prerun, is_subword, parikh, prerun_leq

__all__ = [
    "ApvError",
    "InputError",
    "MultisetUnderflow",
    "ResourceLimit",
    "Configuration",
    "Multiset",
    "Prerun",
    "is_subword",
    "parikh",
    "prerun_leq",
    "__version__",
]
