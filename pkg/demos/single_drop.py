"""Anatomy of one drop: where the typical UE's interference comes from."""

from udnsim.config import SimConfig
from udnsim.engine import run_drop
from udnsim.propagation import linear_to_db

cfg = SimConfig(ue_density_per_km2=300.0, window_side_km=1.75)

for drop in range(200):
    r = run_drop(cfg, drop)
    if r.scheduled:
        break
bd = r.breakdown
print(f"drop {r.drop_index}: {r.n_active} active BSs, {r.n_streams} streams, "
      f"serving cell schedules {r.serving_khat}")
for name in ("signal", "self_interference", "intra_cell", "inter_cell", "noise"):
    print(f"  {name:18s} {linear_to_db(getattr(bd, name)) + 30:8.2f} dBm")
print(f"  SINR {linear_to_db(bd.sinr):.2f} dB")

# Same drop with perfect CSI: geometry and fading are shared, so only the
# estimation terms move.
p = run_drop(cfg.replace(pilot_contamination=False), r.drop_index).breakdown
print(f"perfect CSI: self-interference {p.self_interference:.1e} W, "
      f"SINR {linear_to_db(p.sinr):.2f} dB")
