"""Write tip_reach_film.json, the initial curve used by tip_reach.conf.

A flat film in a cone of opening pi - 0.15: it leaves ray 1 at distance 0.15
from the tip, runs at height 0.4 and lands on ray 2 near distance 3.
"""

import math
import os
from types import SimpleNamespace

from conediff.geometry import Cone
from conediff.initgen import film_curve
from conediff.io import write_snapshot

THETA1 = math.pi - 0.15
N = 200


def main():
    cone = Cone(THETA1, 0.0)
    curve = film_curve(cone, height=0.4, reach=3.0, rho_tip=0.15, n=N, smoothing=0.3, n_modes=40)
    path = os.path.join(os.path.dirname(os.path.abspath(__file__)), "tip_reach_film.json")
    write_snapshot(path, SimpleNamespace(curve=curve, t=0.0, dt=0.0, m=1))
    print(path)


if __name__ == "__main__":
    main()
