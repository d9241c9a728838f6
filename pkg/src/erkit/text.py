"""String primitives used by blocking keys, canopy distances and feature functions."""

from __future__ import annotations

import re
from typing import Iterable, Optional

_NON_ALNUM_RE = re.compile(r"[\W_]+", re.UNICODE)
_YEAR_RE = re.compile(r"[0-9]{4}")


def tokens(text: str, lowercase: bool = True) -> list[str]:
    """Split on runs of non-alphanumeric characters, dropping empty tokens.

    >>> tokens("J. K. Adams", lowercase=False)
    ['J', 'K', 'Adams']
    """
    if lowercase:
        text = text.lower()
    return [t for t in _NON_ALNUM_RE.split(text) if t]


def token_set(text: Optional[str], lowercase: bool = True) -> frozenset[str]:
    if text is None:
        return frozenset()
    return frozenset(tokens(text, lowercase))


def year(text: str, from_end: bool = False) -> Optional[str]:
    """First (or last) run of four consecutive digits, if any."""
    runs = _YEAR_RE.findall(text)
    if not runs:
        return None
    return runs[-1] if from_end else runs[0]


def levenshtein(a: str, b: str) -> int:
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def normalized_levenshtein(a: str, b: str) -> float:
    """1 - edit distance / length of the longer string; 1.0 for two empty strings."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    """Jaccard similarity of two token collections; two empty sets count as identical."""
    sa, sb = set(a), set(b)
    union = sa | sb
    if not union:
        return 1.0
    return len(sa & sb) / len(union)


def jaccard_distance(a: Iterable[str], b: Iterable[str]) -> float:
    sa, sb = set(a), set(b)
    if not sa or not sb:
        # No tokens on one side: no evidence of closeness.
        return 1.0
    return 1.0 - jaccard(sa, sb)


_SOUNDEX_CODES = {}
for _letters, _digit in (("BFPV", "1"), ("CGJKQSXZ", "2"), ("DT", "3"), ("L", "4"), ("MN", "5"), ("R", "6")):
    for _ch in _letters:
        _SOUNDEX_CODES[_ch] = _digit


def soundex(text: str) -> Optional[str]:
    """Classic American Soundex (4 characters), or None if ``text`` has no ASCII letters.

    Vowels (and Y) separate equal codes; H and W do not.

    >>> soundex("Robert"), soundex("Rupert"), soundex("Ashcraft"), soundex("Tymczak")
    ('R163', 'R163', 'A261', 'T522')
    """
    letters = [ch for ch in text.upper() if "A" <= ch <= "Z"]
    if not letters:
        return None
    first = letters[0]
    out = [first]
    last = _SOUNDEX_CODES.get(first, "")
    for ch in letters[1:]:
        code = _SOUNDEX_CODES.get(ch)
        if code is None:
            if ch not in "HW":
                last = ""
            continue
        if code != last:
            out.append(code)
            if len(out) == 4:
                break
        last = code
    return "".join(out).ljust(4, "0")
