"""Per-sport score legality predicates behind an extensible registry.

Each rule inspects an event payload (and optionally the feed snapshot) and
returns a human-readable problem string when a value cannot occur in a real
contest, or None when the payload passes. The registry is open: properties
gain rules by registration, not by editing this module.
"""

from __future__ import annotations

from typing import Any, Callable, Mapping, Optional

from .model import Property

LegalityRule = Callable[[Mapping[str, Any]], Optional[str]]

_RULES: dict[Property, list[LegalityRule]] = {prop: [] for prop in Property}


def register_rule(prop: Property, rule: LegalityRule) -> None:
    _RULES[prop].append(rule)


def legality_problems(prop: Property, payload: Mapping[str, Any]) -> list[str]:
    problems = []
    for rule in _RULES[prop]:
        problem = rule(payload)
        if problem:
            problems.append(problem)
    return problems


# --- tennis -------------------------------------------------------------------

def tennis_set_score_legal(games_a: int, games_b: int) -> bool:
    """Whether (games_a, games_b) is a reachable state of a standard set.

    Reachable means: every prefix of some game-by-game path to it avoids
    passing through a completed set. Sets complete at six games with a
    two-game margin, or at 7-5, or 7-6 via the tiebreak.
    """
    if games_a < 0 or games_b < 0:
        return False
    hi, lo = max(games_a, games_b), min(games_a, games_b)
    if hi <= 6:
        return True
    if hi == 7:
        return lo in (5, 6)
    return False


def _tennis_set_rule(payload: Mapping[str, Any]) -> Optional[str]:
    score = payload.get("set_score")
    if score is None:
        return None
    try:
        games_a, games_b = int(score[0]), int(score[1])
    except (TypeError, ValueError, IndexError):
        return f"unparseable set score {score!r}"
    if not tennis_set_score_legal(games_a, games_b):
        return f"set score ({games_a}, {games_b}) is not reachable in a standard set"
    return None


register_rule(Property.TENNIS, _tennis_set_rule)


# --- golf ---------------------------------------------------------------------

def _golf_hole_rule(payload: Mapping[str, Any]) -> Optional[str]:
    hole = payload.get("hole")
    if hole is None:
        return None
    if not isinstance(hole, int) or not 1 <= hole <= 18:
        return f"hole number {hole!r} outside 1..18"
    return None


def _golf_stroke_rule(payload: Mapping[str, Any]) -> Optional[str]:
    # Stroke counts start at 1 and only move forward within a hole.
    for key in ("shot_number", "strokes"):
        value = payload.get(key)
        if value is None:
            continue
        if not isinstance(value, int) or value < 1:
            return f"{key} {value!r} must be a positive count"
    shot = payload.get("shot_number")
    prior = payload.get("previous_shot_number")
    if isinstance(shot, int) and isinstance(prior, int) and shot <= prior:
        return f"shot_number {shot} does not advance past {prior}"
    return None


register_rule(Property.GOLF, _golf_hole_rule)
register_rule(Property.GOLF, _golf_stroke_rule)


# --- football -----------------------------------------------------------------

def _football_nonnegative_rule(payload: Mapping[str, Any]) -> Optional[str]:
    stats = payload.get("stats", {})
    if not isinstance(stats, Mapping):
        return None
    for name, value in stats.items():
        if isinstance(value, (int, float)) and value < 0:
            return f"stat {name} is negative ({value})"
    percentile = payload.get("percentile")
    if isinstance(percentile, (int, float)) and not 0 <= percentile <= 100:
        return f"percentile {percentile} outside [0, 100]"
    return None


register_rule(Property.FOOTBALL, _football_nonnegative_rule)
