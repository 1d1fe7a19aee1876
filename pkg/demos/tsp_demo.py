"""Anneal an elastic ring onto 30 random cities and compare with simple tours."""

import numpy as np

from bayesosc.elastic_net import baseline_tours, solve

cities = np.random.default_rng(3).random((30, 2))
res = solve(cities, seed=0)

print("stage      K      energy   tour length")
for rec in res.trace[:: max(1, len(res.trace) // 12)]:
    print(f"{rec.stage:5d}  {rec.k:.4f}  {rec.total:10.3f}  {rec.tour_length:8.4f}")

nn, opt = baseline_tours(cities)
print(f"\nelastic net       {res.tour.length:.4f}")
print(f"nearest neighbour {nn.length:.4f}")
print(f"2-opt             {opt.length:.4f}")
print("tour:", " ".join(map(str, res.tour.order)))
