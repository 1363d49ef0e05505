"""Fewer, bigger arrays or many small cells?

Sweeps the antennas per BS at a fixed 1000 antennas/km^2 and prints the
ASE with and without pilot contamination.  A few hundred drops per point
show the shape; the acceptance suite uses more.
"""

from udnsim.sweep import preset, run_sweep

DROPS = 150
RHO = 300

curves = {}
for name in ("fig3", "fig4"):
    spec = preset(name)
    spec.axes = [a for a in spec.axes if a.parameter != "ue_density_per_km2"]
    spec.base = spec.base.replace(ue_density_per_km2=float(RHO))
    curves[name] = run_sweep(spec, n_drops=DROPS)

print(f"rho = {RHO} UEs/km2, {DROPS} drops per point")
print("   M  BSs/km2  ASE contaminated  ASE perfect CSI")
for a, b in zip(curves["fig3"], curves["fig4"]):
    c = a.cfg
    print(f"{c.antennas_per_bs:4d} {c.bs_density_per_km2:8.1f} "
          f"{a.ase:10.0f} +-{a.ci95:4.0f} {b.ase:10.0f} +-{b.ci95:4.0f}")
