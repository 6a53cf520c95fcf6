# coding: utf-8

# # Voters who misjudge the parties
#
# Each voter now sees both parties' positions with independent normal error
# (sd 0.5). Standing right next to R stops being safe: voters who
# mistake D for R, or R for D, are split almost at random.

from spatialvote import CorrelationSpec, NoiseConfig, sample_electorate, share_curve, curve_argmax
from spatialvote.spatial_model import PositionGrid

electorate = sample_electorate(CorrelationSpec(dim=1), n=10_000, seed=4)
grid = PositionGrid(0, -1.0, 2.0, 0.1)

clean = share_curve(electorate, [2.0], [0.0], grid)
noisy = share_curve(electorate, [2.0], [0.0], grid, noise=NoiseConfig(sigma=0.5, draws=20, seed=5))

print("   x   no noise  sigma=0.5")
for (x, a), (_, b) in zip(clean, noisy):
    print(f"{x:5.1f}   {a.share:.4f}    {b.share:.4f}")

print("argmax without noise:", curve_argmax(clean)[0])
print("argmax with noise:   ", curve_argmax(noisy)[0])

# All grid points reuse the same perception errors (common random numbers),
# so neighbouring points differ only because D moved.
