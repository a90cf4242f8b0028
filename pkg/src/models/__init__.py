"""Shared enums for epswcore."""

from enum import Enum


class Regime(Enum):
    """Equal-pay regime a market operates under."""

    NO_EPSW = "none"
    GROUP = "group"
    NONGROUP = "nongroup"


class BlockKind(Enum):
    """Deviation families searched by the blocking oracle."""

    FIRE = "fire"
    POACH_ALL = "poach_all"
    HIRE_UNEMPLOYED = "hire_unemployed"
    UNIFORM_WAGE = "uniform_wage_at_w"
    DESEGREGATE = "desegregate_at_eps"

