# coding: utf-8

# # Two parties on a line
#
# Voters sit on a single issue axis, drawn from a standard normal. Party R
# stands at +2. Where should party D stand?

import numpy as np

from spatialvote import CorrelationSpec, sample_electorate, share_curve, curve_argmax, vote_share
from spatialvote.electorate import std_normal_cdf
from spatialvote.spatial_model import PositionGrid

electorate = sample_electorate(CorrelationSpec(dim=1), n=100_000, seed=1)
print(electorate.n, "voters, mean", electorate.voters.mean().round(3))


# Each voter backs the nearer party. With D just left of R, everyone left of
# the midpoint votes D.

est = vote_share(electorate, d_pos=[1.9999], r_pos=[2.0])
print(f"D share {est.share:.4f} +/- {est.mc_se:.4f}   (normal cdf at midpoint: {std_normal_cdf(1.99995):.4f})")


# Sweep D across the axis. The share climbs all the way up to R's position.

curve = share_curve(electorate, r_pos=[2.0], d_template=[0.0], grid=PositionGrid(0, -3.0, 2.0, 0.25))
for x, s in curve:
    print(f"{x:6.2f}  {s.share:.4f}  " + "#" * int(60 * s.share))

x_best, best = curve_argmax(curve)
print("best position on this grid:", x_best)
