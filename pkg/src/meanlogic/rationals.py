"""Strict rational-string parsing and printing.

File formats and the CLI exchange rationals as strings "p" or "p/q" with an
optional leading sign and no whitespace; denominators are omitted when 1.
Floats never appear in exchange formats.
"""

import math
import re
from fractions import Fraction

from .errors import FormatError

_RATIONAL_RE = re.compile(r"^[+-]?\d+(/[1-9]\d*)?$")


def parse_rational(text):
    """Parse "p" or "p/q" into a Fraction; reject anything looser."""
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    if not isinstance(text, str) or not _RATIONAL_RE.match(text):
        raise FormatError("not a rational string: %r" % (text,))
    return Fraction(text)


def format_rational(value):
    """Render a Fraction as "p" or "p/q" (denominator omitted when 1)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return "%d/%d" % (value.numerator, value.denominator)


def root_approx(value, p):
    """p-th root of a nonnegative rational as a float (easily 12 sig digits)."""
    value = Fraction(value)
    if value < 0:
        raise FormatError("root of negative value %s" % format_rational(value))
    if p == 1:
        return float(value)
    if value == 0:
        return 0.0
    # split off exponent so huge numerators keep full double precision
    num, den = value.numerator, value.denominator
    shift = num.bit_length() - den.bit_length()
    scaled = Fraction(num, den) / Fraction(2) ** shift
    return math.exp((math.log(float(scaled)) + shift * math.log(2.0)) / p)


def format_root(value, p):
    """Display form of value^(1/p): exact string at p=1, labeled approx else."""
    if p == 1:
        return format_rational(value)
    return "%.12g (approx)" % root_approx(value, p)
