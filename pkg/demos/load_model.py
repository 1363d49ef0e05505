"""How many BSs are active, and how many UEs each one schedules.

Compares the negative binomial load model against simulated drops for a
few UE densities at 1000 antennas/km^2 and 10 antennas per BS.
"""

import numpy as np

from udnsim.config import SimConfig
from udnsim.engine import run_point
from udnsim.network import active_bs_density, truncated_nb_pmf

DROPS = 150

for rho in (20.0, 100.0, 600.0):
    cfg = SimConfig(ue_density_per_km2=rho, window_side_km=1.75)
    nb = cfg.nb_model()
    s = run_point(cfg, DROPS)
    pmf = truncated_nb_pmf(np.arange(1, cfg.k_u + 1), nb, cfg.k_u)
    emp = s.khat_hist[1:] / s.khat_hist[1:].sum()
    print(f"rho = {rho:5.0f}  active BSs/km2: model {active_bs_density(nb):7.2f}  "
          f"simulated {s.empirical_active_density:7.2f}")
    print(f"             P[K-hat = k], k = 1..{cfg.k_u}: model {np.round(pmf, 3)}  "
          f"simulated {np.round(emp, 3)}")

# The model need not match exactly: the typical UE is an extra point on top
# of the Poisson UEs, and UEs attach to the strongest link rather than the
# nearest BS.
