"""Superposition coding: two streams per transmission, if the split is right.

A UE can superpose two packets with power split beta (strong stream decoded
first). Near the BS the direct link can carry both; far out, the relay should
catch the weak stream instead. The best policy picks, per position, between
direct transmission at its own optimal split and feedback relaying at the
relayed-path split.
"""

import math

import relaylab as rl
from relaylab import analytic
from relaylab.model import SchemeSpec, ScPolicy, Protocol

p = rl.reference_params()
print(f"direct-link optimal split at threshold {p.theta_thresh:.1f}: "
      f"beta = {(p.theta_thresh+1)/(p.theta_thresh+2):.3f}")
for d_ub in (100.0, 250.0, 400.0):
    geom = rl.derive_link_geometry(p, rl.UePolar(d_ub, 0.2))
    bd, br = analytic.sc_betas(p, geom)
    print(f"  d_ub={d_ub:4.0f}: relayed-path split {br:.3f}")

basic_plain = analytic.average_throughput(p, SchemeSpec(Protocol.BASIC))
print(f"\nplain basic scheme cell average: {basic_plain:.3f} packets / two slots")

print("\ncell-average throughput vs relay placement:")
print("d_rb   basic+sc  fb+sc=0.8  fb+sc=opt_relay  fb+sc=opt_select")
for d_rb in (50.0, 100.0, 150.0, 200.0):
    pp = rl.reference_params(d_rb=d_rb)
    cols = [
        analytic.average_throughput(pp, SchemeSpec(Protocol.BASIC, sc=ScPolicy(ScPolicy.OPT_RELAY))),
        analytic.average_throughput(pp, SchemeSpec(Protocol.FEEDBACK, sc=ScPolicy(ScPolicy.FIXED, beta=0.8))),
        analytic.average_throughput(pp, SchemeSpec(Protocol.FEEDBACK, sc=ScPolicy(ScPolicy.OPT_RELAY))),
        analytic.average_throughput(pp, SchemeSpec(Protocol.FEEDBACK, sc=ScPolicy(ScPolicy.OPT_SELECT))),
    ]
    print(f"{d_rb:4.0f}   {cols[0]:8.3f}  {cols[1]:9.3f}  {cols[2]:15.3f}  {cols[3]:16.3f}")

best = max(analytic.average_throughput(rl.reference_params(d_rb=d),
                                       SchemeSpec(Protocol.FEEDBACK, sc=ScPolicy(ScPolicy.OPT_SELECT)))
           for d in (75.0, 100.0, 125.0))
print(f"\nbest split-selected feedback SC beats the plain basic scheme by "
      f"{100*(best/basic_plain-1):.0f}%.")
