"""Published rejection rates (percent) for the three heteroscedasticity models.

Keys are ``(model, n, c, nominal_level)``. ``attained`` is the discrete
level at which the longest-run test was run for that nominal level;
``competitors`` holds the rates of two competing tests published
alongside at the nominal level, in the published order (the source
does not label the columns). They are static reference numbers only.
"""

from __future__ import annotations

from typing import NamedTuple

__all__ = ["ATTAINED_LEVELS", "PUBLISHED_TABLE", "PublishedCell", "published_cell"]


class PublishedCell(NamedTuple):
    attained: float
    longest_run: float
    competitors: tuple[float, float]


# nominal level -> attained level (percent) of the longest-run test
ATTAINED_LEVELS = {
    50: {0.05: 4.1, 0.10: 9.8},
    100: {0.05: 5.8, 0.10: 12.5},
}

# model -> c -> (n=50 @5%, n=50 @10%, n=100 @5%, n=100 @10%), each (longest run, competitor, competitor)
_ROWS = {
    1: {
        0.0: ((4.5, 5, 5.6), (10.1, 9.6, 10.1), (6.6, 5.6, 5.7), (11.8, 12.6, 9.3)),
        0.5: ((7.1, 11, 8.4), (14.4, 22.4, 13.2), (10.1, 12.6, 9.7), (20.2, 25.6, 15.1)),
        1.0: ((16.2, 17.2, 14.8), (28.3, 28, 22.3), (24.7, 24.8, 21.5), (37.7, 45.4, 31.3)),
    },
    2: {
        0.0: ((3.9, 4.8, 5.3), (9.6, 9, 10), (5.6, 5, 4.9), (12.7, 11.6, 8.9)),
        0.5: ((24.9, 32.4, 27.6), (37.3, 50.4, 39), (41.1, 55.6, 43.3), (54.7, 69.6, 56.8)),
        1.0: ((96.4, 40.2, 36.5), (99.4, 61.4, 48.1), (100, 67.6, 55.7), (100, 79.4, 67.4)),
    },
    3: {
        0.0: ((4.6, 5.2, 5.4), (9.5, 11.2, 9.7), (6.2, 5.4, 5.3), (12.6, 10.6, 10)),
        0.5: ((11.2, 21.4, 11.3), (20.8, 35.6, 18.5), (18.2, 17.5, 15.8), (28.6, 35, 23.3)),
        1.0: ((25.5, 36.2, 19.8), (40.1, 54.8, 29.1), (39.4, 38, 30.4), (55.8, 53.2, 41.2)),
    },
}

_COLUMNS = ((50, 0.05), (50, 0.10), (100, 0.05), (100, 0.10))

PUBLISHED_TABLE: dict[tuple[int, int, float, float], PublishedCell] = {
    (model, n, c, level): PublishedCell(ATTAINED_LEVELS[n][level], vals[0], (vals[1], vals[2]))
    for model, by_c in _ROWS.items()
    for c, cells in by_c.items()
    for (n, level), vals in zip(_COLUMNS, cells)
}


def published_cell(model: int, n: int, c: float, level: float) -> PublishedCell | None:
    """Published cell for a nominal level (0.05 or 0.10), or None if not tabulated."""
    for (m, nn, cc, lv), cell in PUBLISHED_TABLE.items():
        if m == model and nn == n and abs(cc - c) < 1e-12 and abs(lv - level) < 1e-12:
            return cell
    return None
