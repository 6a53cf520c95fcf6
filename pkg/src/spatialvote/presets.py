"""Named configurations of the theoretical models.

Each preset fixes the electorate (dimension, correlation, size), R's
position, D's starting position and the economic-axis sweep.
"""

THEORY_PRESETS = {
    # one dimension: R at +2, D starting at +1
    "fig1": {"dims": 1, "rho": 0.0, "n": 10000, "r_pos": [2.0], "d_pos": [1.0],
             "axis": 0, "grid": [-3.0, 2.0, 0.05]},
    # two dimensions (economic, everything else), D at (+1, -2)
    "fig2": {"dims": 2, "rho": 0.5, "n": 10000, "r_pos": [2.0, 1.0], "d_pos": [1.0, -2.0],
             "axis": 0, "grid": [-2.0, 2.0, 0.1]},
    # D's economic position swept with its other position held at -2
    "fig3a": {"dims": 2, "rho": 0.5, "n": 10000, "r_pos": [2.0, 1.0], "d_pos": [0.0, -2.0],
              "axis": 0, "grid": [-2.0, 2.0, 0.1]},
    # economic, foreign, social; D at (x, -1, -2) with x = +1 the status quo
    "fig3b": {"dims": 3, "rho": 0.5, "n": 10000, "r_pos": [2.0, 1.0, 1.0], "d_pos": [1.0, -1.0, -2.0],
              "axis": 0, "grid": [-2.0, 2.0, 0.1]},
}

# choice-model presets accepted by the counterfactual command
CHOICE_ALIASES = {"eq31": "aoas2008-eq31", "aoas2008-eq31": "aoas2008-eq31"}
