"""Published reference values used for table reproduction checks.

Values are copied verbatim, including entries later found to be misprinted,
so that comparisons stay honest.  ``FREEZING_TABLE`` maps gamma to
``{k: schools}`` at 3 decimals; ``PAYOFF_TABLE`` maps gamma to ``{k: payoff}``
at 6 decimals.
"""

from __future__ import annotations

FREEZING_TABLE: dict[float, dict[int, tuple[float, ...]]] = {
    1.0: {
        1: (0.333,),
        2: (0.391, 0.106),
        3: (0.398, 0.117, 0.030),
        4: (0.398, 0.118, 0.032, 0.008),
        5: (0.399, 0.118, 0.032, 0.008, 0.002),
        6: (0.399, 0.118, 0.032, 0.008, 0.002, 0.005),
    },
    0.5: {
        1: (0.422,),
        2: (0.588, 0.207),
        3: (0.610, 0.272, 0.095),
        4: (0.624, 0.288, 0.116, 0.039),
        5: (0.626, 0.291, 0.119, 0.046, 0.015),
        6: (0.627, 0.291, 0.120, 0.047, 0.017, 0.005),
        7: (0.627, 0.291, 0.120, 0.047, 0.018, 0.006, 0.002),
        8: (0.627, 0.291, 0.120, 0.047, 0.018, 0.006, 0.002, 0.0008),
    },
    0.1: {
        1: (0.486,),
        2: (0.653, 0.310),
        3: (0.741, 0.465, 0.218),
        4: (0.795, 0.560, 0.343, 0.159),
        5: (0.833, 0.626, 0.425, 0.256, 0.118),
        6: (0.862, 0.673, 0.483, 0.320, 0.190, 0.087),
        7: (0.883, 0.708, 0.525, 0.364, 0.236, 0.139, 0.063),
        8: (0.898, 0.734, 0.555, 0.394, 0.266, 0.170, 0.099, 0.045),
        9: (0.908, 0.751, 0.574, 0.414, 0.285, 0.188, 0.119, 0.069, 0.031),
        10: (0.915, 0.761, 0.587, 0.426, 0.296, 0.198, 0.129, 0.081, 0.046, 0.021),
        11: (0.918, 0.767, 0.593, 0.432, 0.301, 0.204, 0.134, 0.086, 0.053, 0.031, 0.014),
        12: (0.920, 0.770, 0.596, 0.435, 0.304, 0.206, 0.137, 0.089, 0.057, 0.035, 0.020, 0.009),
        13: (0.920, 0.771, 0.598, 0.436, 0.305, 0.207, 0.138, 0.090, 0.058, 0.037, 0.023, 0.013, 0.006),
        14: (0.921, 0.772, 0.598, 0.437, 0.306, 0.208, 0.138, 0.090, 0.059, 0.038, 0.024, 0.014, 0.008,
             0.003),
    },
}

# (gamma, k) cells whose printed tail is not strictly decreasing; only this
# many leading entries are comparable
FREEZING_COMPARABLE_PREFIX: dict[tuple[float, int], int] = {(1.0, 6): 5}

PAYOFF_GAMMAS: tuple[float, ...] = (0.01, 0.05, 0.1, 0.2, 0.5)
PAYOFF_KS: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 25, 50, 75, 100)

_PAYOFF_ROWS = {
    1: (0.25, 0.249998, 0.249958, 0.249827, 0.249242, 0.244016),
    2: (0.333333, 0.333329, 0.333237, 0.332936, 0.331625, 0.319467),
    3: (0.375, 0.374991, 0.374787, 0.374121, 0.371246, 0.346748),
    4: (0.4, 0.399984, 0.399586, 0.398285, 0.392758, 0.354428),
    5: (0.416666, 0.416638, 0.415945, 0.413675, 0.404421, 0.356059),
    6: (0.428571, 0.428527, 0.427412, 0.423796, 0.410208, 0.356349),
    7: (0.4375, 0.437433, 0.435752, 0.430424, 0.412700, 0.356400),
    8: (0.444444, 0.444349, 0.441937, 0.434621, 0.413637, 0.356407),
    9: (0.45, 0.449868, 0.446553, 0.437132, 0.413961, 0.356407),
    10: (0.454545, 0.454370, 0.449979, 0.438526, 0.414065, 0.356409),
    25: (0.480769, 0.478386, 0.457684, 0.439903, 0.414113, 0.356409),
    50: (0.490196, 0.481122, 0.457685, 0.439903, 0.414113, 0.356409),
    75: (0.493421, 0.481131, 0.457685, 0.439903, 0.414113, 0.356409),
    100: (0.495049, 0.481131, 0.457685, 0.439903, 0.414113, 0.356409),
}

UNBIASED_PAYOFF_PRINTED: dict[int, float] = {k: row[0] for k, row in _PAYOFF_ROWS.items()}
PAYOFF_TABLE: dict[float, dict[int, float]] = {
    g: {k: row[j + 1] for k, row in _PAYOFF_ROWS.items()} for j, g in enumerate(PAYOFF_GAMMAS)
}


def freezing_reference(gamma: float, k: int) -> tuple[float, ...]:
    """Printed schools for ``(gamma, k)``, truncated to the comparable prefix."""
    row = FREEZING_TABLE[gamma][k]
    return row[: FREEZING_COMPARABLE_PREFIX.get((gamma, k), k)]
