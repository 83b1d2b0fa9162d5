"""The two engines head to head at one position: every quantity, three sigmas.

The closed-form engine and the protocol simulator share nothing but the model
definition. This demo prints the full comparison table for the feedback scheme
at one cell-edge position: throughput, energy, and all joint decode
probabilities, each with its Monte Carlo standard error.
"""

import relaylab as rl
from relaylab import analytic, simulator
from relaylab.model import SchemeSpec, Protocol

p = rl.reference_params(theta_thresh=2.0)
geom = rl.derive_link_geometry(p, rl.UePolar(300.0, 0.2))
scheme = SchemeSpec(Protocol.FEEDBACK)

res = simulator.estimate(p, scheme, 200_000, simulator.RngPolicy(7), geom=geom)
chi = analytic.chi_expectations(p, geom)
m = analytic.scheme_position_metrics(p, geom, scheme)
en = analytic.energy_per_packet(p, geom, scheme)

rows = [("throughput", m.throughput), ("energy J/pkt", en)]
rows += [(k, getattr(chi, k)) for k in ("e_ub", "e_ur", "e_ur_rb", "e_ur_ub", "e_ur_ubi",
                                        "e_ub1_ur_rb", "e_ub1_ur_ub2i", "e_ub1_ur_ub2")]
print(f"{'quantity':14s} {'analytic':>12s} {'monte carlo':>14s} {'sigma':>6s}")
for name, a in rows:
    key = "energy" if name.startswith("energy") else name
    mc = res[key]
    sig = abs(a - mc.value) / mc.stderr if mc.stderr else float("nan")
    print(f"{name:14s} {a:12.6g} {mc.value:10.6g} ±{mc.stderr:.2g} {sig:6.2f}")

print("\nagreement within ~3 sigma everywhere is the package's master property;")
print("`relaylab validate` runs this on a full grid at a million trials.")
