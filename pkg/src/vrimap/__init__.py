"""Community electricity vulnerability mapping engine.

Simulates a community's time-resolved activity distribution with a
time-indexed Markov chain, maps expected occupants onto individual
buildings, scores three vulnerability aspects (occupant demographics,
occupant activity, building environment), ranks them into quintiles,
and composes per-cell vulnerability maps for every 15-minute step of
the day.
"""

__version__ = "0.1.0"

from vrimap.activities import Activity, STEPS_PER_DAY, STEP_MINUTES

__all__ = ["Activity", "STEPS_PER_DAY", "STEP_MINUTES", "__version__"]
