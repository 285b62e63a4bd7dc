"""Sensitivity environments (variable -> ExtReal usage).

Absent variables are unused. Results never store zero entries, so the
algebra below works on plain dicts without normalization passes.
"""

from __future__ import annotations

from typing import Mapping

from ..numerics import ZERO, ExtReal

SensMap = Mapping[str, ExtReal]


def _clean(items) -> dict:
    return {k: v for k, v in items if v != ZERO}


def scale_ctx(r, s: SensMap) -> dict:
    # r = 0 is allowed internally: finite entries vanish, infinite ones stay
    r = ExtReal(r)
    return _clean((k, r * v) for k, v in s.items())


def add_ctx(s1: SensMap, s2: SensMap) -> dict:
    out = dict(s1)
    for k, v in s2.items():
        out[k] = out[k] + v if k in out else v
    return _clean(out.items())


def max_ctx(s1: SensMap, s2: SensMap) -> dict:
    out = dict(s1)
    for k, v in s2.items():
        if k not in out or v > out[k]:
            out[k] = v
    return _clean(out.items())


def drop(s: SensMap, *names: str) -> dict:
    return {k: v for k, v in s.items() if k not in names}


def ctx_leq(s1: SensMap, s2: SensMap) -> bool:
    """Pointwise order, treating absent entries as zero."""
    return all(k in s2 and v <= s2[k] for k, v in s1.items())


def format_ctx(s: SensMap) -> str:
    return "{" + ", ".join(f"{k}: {v}" for k, v in sorted(s.items())) + "}"
