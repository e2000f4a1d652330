"""High-precision iteration of radical recurrences, symbolic derivation of
their log-power asymptotic expansions, and extraction of the intrinsic
constants that parameterize them.

Layering: hpnum (precision-contracted reals) < casring (exact scalars and
C-polynomials) < maps (the recurrences) < golden / series (closed forms and
the expansion solver) < extract (constant fitting) < verification / cli.
"""

__version__ = "0.1.0"
