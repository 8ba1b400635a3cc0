"""Reference values computed independently of the package code."""

import math

import mpmath


def threshold_mp(omega, dps=50):
    """Smallness threshold in extended precision, straight from the closed form."""
    with mpmath.workdps(dps):
        w = mpmath.mpf(omega)
        inner = -24 * w + mpmath.sqrt((24 * w) ** 2 + (48 / mpmath.pi) * (1 - 4 * w**2))
        return (mpmath.pi / 12) ** 2 * inner**2


def threshold_bisect(omega, dps=50):
    """Positive root in K of ``2 - (6/pi) K - 24 w sqrt(K) - 8 w^2`` by bisection."""
    with mpmath.workdps(dps):
        w = mpmath.mpf(omega)

        def bracket(K):
            return 2 - (6 / mpmath.pi) * K - 24 * w * mpmath.sqrt(K) - 8 * w**2

        lo, hi = mpmath.mpf(0), mpmath.mpf(2)
        for _ in range(200):
            mid = (lo + hi) / 2
            if bracket(mid) > 0:
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 2


def inscribed_arc(radius, opening, n):
    """Length, area and node curvature of ``n`` equal chords inscribed in a tip-centred arc.

    The area is the polygon with the tip as a vertex; the curvature follows
    from the turning angle ``beta = opening / n`` between consecutive chords:
    ``|t- - t+| = 2 sin(beta/2)`` over ``g = r sin(beta)``.
    """
    beta = opening / n
    length = 2.0 * radius * n * math.sin(beta / 2.0)
    area = 0.5 * radius**2 * n * math.sin(beta)
    k = 1.0 / (radius * math.cos(beta / 2.0))
    return length, area, k
