"""Monte Carlo engine: sampled deployments, fading, and slot-pair protocol runs.

This engine is deliberately independent of the closed-form expressions in
:mod:`relaylab.analytic`: it executes the protocol state machines on sampled
interference fields and counts delivered packets and spent energy, so the two
engines cross-validate each other.

Reproducibility contract: trials are partitioned into fixed-size batches and
batch ``i`` draws from a generator seeded by ``(master_seed, stream, i)``.
Results are therefore bit-identical for a given ``(master_seed, n_trials)``
regardless of how many workers execute the batches.

Interferers are sampled on an annulus ``[x, R]`` around the BS; the mean
interference of the discarded far field (beyond ``R``) is added back as a
deterministic floor, which keeps the truncation bias far below the Monte Carlo
noise while keeping per-trial point counts small.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

try:  # compiled kernel for the BS-process sampler; pure-numpy fallback below
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

from .model import (
    Estimate,
    LinkGeometry,
    NetworkParams,
    Protocol,
    Receiver,
    SchemeSpec,
    ScPolicy,
    link_gammas,
)

__all__ = [
    "RngPolicy",
    "Deployment",
    "SlotPairOutcome",
    "DeploymentModel",
    "window_radius",
    "tail_mean_interference",
    "sample_deployment",
    "run_slot_pair",
    "estimate",
    "estimate_many",
    "estimate_basic_voronoi",
    "coupled_packet_counts",
    "conditional_throughput_samples",
    "empirical_cdf",
    "estimate_laplace_mc",
]


class DeploymentModel:
    UE_PPP = "ue_ppp"          # interfering UEs form the point process
    BS_VORONOI = "bs_voronoi"  # BSs form the point process, one UE per cell
    ALL = (UE_PPP, BS_VORONOI)


@dataclass(frozen=True)
class RngPolicy:
    """Master seed plus the fixed batch partition used for counter-based streams."""

    master_seed: int
    batch_size: int = 16384

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 bits")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")

    def generator(self, stream: int, index: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(stream, index))
        return np.random.Generator(np.random.PCG64(ss))

    def batches(self, n_trials: int):
        """(index, size) pairs covering ``n_trials`` in fixed-size chunks."""
        out = []
        done = 0
        i = 0
        while done < n_trials:
            size = min(self.batch_size, n_trials - done)
            out.append((i, size))
            done += size
            i += 1
        return out


# stream labels, kept apart so different samplers never share draws
_STREAM_TRIALS = 0
_STREAM_VORONOI = 1
_STREAM_LAPLACE = 2
_STREAM_POSITIONS = 3
_STREAM_FROZEN = 4


def window_radius(params: NetworkParams) -> float:
    """Simulation window radius: several mean nearest-neighbor spacings."""
    if params.lam <= 0:
        return 2000.0
    return max(5.0 / math.sqrt(params.lam), 2000.0)


def tail_mean_interference(params: NetworkParams, r: float) -> float:
    """Mean aggregate interference [W] from transmitters beyond radius ``r``.

    ``2 pi lam Pt A r**(2-alpha) / (alpha - 2)``; added back deterministically
    after annulus truncation (the truncated tail has negligible variance).
    """
    return (2.0 * math.pi * params.lam * params.Pt * params.A
            * r ** (2.0 - params.alpha) / (params.alpha - 2.0))


# ---------------------------------------------------------------------------
# deployments


@dataclass(frozen=True)
class Deployment:
    """One sampled network: served UE, interfering UEs, relay ring."""

    model: str
    served: np.ndarray                  # (2,)
    interferers: np.ndarray             # (k, 2)
    relays: np.ndarray                  # (kr, 2)
    window: float = field(default=0.0)


def _relay_ring(params: NetworkParams) -> np.ndarray:
    ang = 2.0 * math.pi * np.arange(params.kr) / params.kr
    return params.d_rb * np.stack([np.cos(ang), np.sin(ang)], axis=1)


def sample_deployment(params: NetworkParams, model: str, rng: np.random.Generator,
                      r_max: float | None = None) -> Deployment:
    """Draw one deployment.

    ``ue_ppp``: UEs are a Poisson process on the window disk; the point nearest
    the BS is served, the rest interfere (they all lie outside the exclusion
    radius by construction).  Zero-point draws are rejected.

    ``bs_voronoi``: BSs are a Poisson process plus the tagged BS at the origin;
    one UE is placed uniformly in each BS's Voronoi cell; the tagged cell's UE
    is served and the others interfere.
    """
    R = float(r_max) if r_max is not None else window_radius(params)
    if model == DeploymentModel.UE_PPP:
        while True:
            n = rng.poisson(params.lam * math.pi * R * R)
            if n > 0:
                break
        pts = _uniform_disk(rng, n, R)
        d2 = np.sum(pts**2, axis=1)
        k = int(np.argmin(d2))
        served = pts[k]
        interferers = np.delete(pts, k, axis=0)
        return Deployment(model, served, interferers, _relay_ring(params), R)
    if model == DeploymentModel.BS_VORONOI:
        n = rng.poisson(params.lam * math.pi * R * R)
        bs = np.vstack([[0.0, 0.0], _uniform_disk(rng, n, R)])
        ues = _one_ue_per_cell(rng, bs, R)
        return Deployment(model, ues[0], ues[1:], _relay_ring(params), R)
    raise ValueError(f"unknown deployment model {model!r}")


def _uniform_disk(rng, n, R):
    r = R * np.sqrt(rng.random(n))
    phi = 2.0 * math.pi * rng.random(n)
    return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)


def _one_ue_per_cell(rng, bs: np.ndarray, R: float) -> np.ndarray:
    """Uniform point in each BS's Voronoi cell, by rejection against nearest-BS.

    Candidates are uniform on the window; the first candidate landing in a cell
    is that cell's UE (candidates are iid, so this is uniform within the cell).
    """
    n = bs.shape[0]
    ues = np.full((n, 2), np.nan)
    filled = np.zeros(n, dtype=bool)
    chunk = max(128, 6 * n)
    for _ in range(10_000):
        cand = _uniform_disk(rng, chunk, R)
        # nearest BS per candidate; n is small, a flat distance matrix beats a tree
        d2 = (cand[:, 0:1] - bs[None, :, 0]) ** 2 + (cand[:, 1:2] - bs[None, :, 1]) ** 2
        owner = np.argmin(d2, axis=1)
        first = np.unique(owner, return_index=True)
        take = first[0][~filled[first[0]]]
        idx = first[1][~filled[first[0]]]
        ues[take] = cand[idx]
        filled[take] = True
        if filled.all():
            return ues
    raise RuntimeError("Voronoi cell sampling failed to terminate")  # pragma: no cover


# ---------------------------------------------------------------------------
# randomness layout shared by all schemes (couples them pathwise)


def _interferer_gain_to_relay(params, r, phi):
    """Path gain from interferers at polar (r, phi) to the relay at (d_rb, 0).

    The receive pattern uses the same folded arrival angle as the analytic
    transforms: gain at arcsin(r sin(phi) / rho), i.e. the front-lobe image.
    """
    d = params.d_rb
    rho2 = np.maximum(r * r + d * d - 2.0 * r * d * np.cos(phi), 1e-300)
    g = params.Pt * params.A * rho2 ** (-0.5 * params.alpha)
    pat = params.rx_pattern_relay
    if not pat.is_omni:
        sin_psi = np.clip(r * np.sin(phi) / np.sqrt(rho2), -1.0, 1.0)
        g = g * pat.gain_from_cos(np.sqrt(1.0 - sin_psi**2))
    return g


def _draw_trials(params, rng, n, geom: LinkGeometry | None, frozen_pts=None):
    """Sample every random quantity one batch of slot pairs needs.

    Fixed draw order (positions, interferer field, link fadings) so that all
    schemes consume identical randomness.  Returns a dict of (n,) arrays.
    """
    R = window_radius(params)
    if geom is None:
        # cell-average mode: fresh served position per trial
        d_ub = np.sqrt(-np.log1p(-rng.random(n)) / (params.lam * math.pi))
        theta_u = (rng.random(n) - 0.5) * (2.0 * math.pi / params.kr)
        _, _, g_ub, g_rb, g_ur = link_gammas(params, d_ub, theta_u)
    else:
        d_ub = np.full(n, geom.ue.d_ub)
        g_ub = np.full(n, geom.gamma_ub)
        g_rb = np.full(n, geom.gamma_rb)
        g_ur = np.full(n, geom.gamma_ur)

    tail = tail_mean_interference(params, R)
    if params.lam <= 0:
        i_r1 = i_b1 = i_b2 = np.zeros(n)
    elif frozen_pts is not None:
        r, phi = frozen_pts
        g_b = params.Pt * params.A * r ** (-params.alpha)
        g_r = _interferer_gain_to_relay(params, r, phi)
        h = rng.standard_exponential((3, n, r.shape[0]))
        i_r1 = h[0] @ g_r + tail
        i_b1 = h[1] @ g_b + tail
        i_b2 = h[2] @ g_b + tail
    else:
        area = np.maximum(R * R - d_ub * d_ub, 0.0)
        counts = rng.poisson(params.lam * math.pi * area)
        m = int(counts.sum())
        x_rep = np.repeat(d_ub, counts)
        r = np.sqrt(x_rep**2 + rng.random(m) * np.repeat(area, counts))
        phi = 2.0 * math.pi * rng.random(m)
        g_b = params.Pt * params.A * r ** (-params.alpha)
        g_r = _interferer_gain_to_relay(params, r, phi)
        h = rng.standard_exponential((3, m))
        idx = np.repeat(np.arange(n), counts)
        i_r1 = np.bincount(idx, weights=g_r * h[0], minlength=n) + tail
        i_b1 = np.bincount(idx, weights=g_b * h[1], minlength=n) + tail
        i_b2 = np.bincount(idx, weights=g_b * h[2], minlength=n) + tail

    hl = rng.standard_exponential((4, n))
    return {
        "g_ub": g_ub, "g_rb": g_rb, "g_ur": g_ur,
        "ihat_r1": i_r1 / params.N0, "ihat_b1": i_b1 / params.N0, "ihat_b2": i_b2 / params.N0,
        "h_ur": hl[0], "h_ub1": hl[1], "h_rb": hl[2], "h_ub2": hl[3],
    }


# ---------------------------------------------------------------------------
# the slot-pair state machines


def _split_margins(th, beta):
    strong = beta * (th + 1.0) - th
    q1 = 1.0 / strong if strong > 0 else math.inf
    return q1, max(q1, 1.0 / (1.0 - beta))


def _protocol_eval(params: NetworkParams, scheme: SchemeSpec, rnd: dict,
                   counting: str = "as_printed", beta: float | None = None):
    """Run one batch of slot pairs for ``scheme`` on pre-drawn randomness.

    Returns (packets, relay_tx, flags): float packets per trial, relay transmit
    indicator, and the decode-indicator arrays used for cross-validation.  All
    indicator variables are evaluated on every trial (the with-relay slot-2
    outcomes even when the relay stays silent) so coupled comparisons across
    schemes see the same realizations.
    """
    th = params.theta_thresh
    c_r1 = rnd["ihat_r1"] + 1.0
    c_b1 = rnd["ihat_b1"] + 1.0
    c_b2 = rnd["ihat_b2"] + 1.0
    G_ur = rnd["g_ur"] * rnd["h_ur"]
    G_ub1 = rnd["g_ub"] * rnd["h_ub1"]
    G_rb = rnd["g_rb"] * rnd["h_rb"]
    G_ub2 = rnd["g_ub"] * rnd["h_ub2"]

    # slot-2 outcomes with both transmitters on air (SIC, stronger first) and alone
    rb_first = G_rb >= th * (G_ub2 + c_b2)
    ub_first = G_ub2 >= th * (G_rb + c_b2)
    chi_rb_i = rb_first | (ub_first & (G_rb >= th * c_b2))
    chi_ub2_i = ub_first | (rb_first & (G_ub2 >= th * c_b2))
    chi_ub2 = G_ub2 >= th * c_b2

    if scheme.receiver != Receiver.SIC:
        return _protocol_eval_nosic(params, scheme, rnd, G_ur, G_ub1, G_rb, G_ub2,
                                    c_r1, c_b1, c_b2)

    if scheme.sc.off:
        chi_ur = G_ur >= th * c_r1
        chi_ub1 = G_ub1 >= th * c_b1
        flags = {
            "e_ub": chi_ub1, "e_ur": chi_ur,
            "e_ur_rb": chi_ur & chi_rb_i,
            "e_ur_ub": chi_ur & chi_ub2,
            "e_ur_ubi": chi_ur & chi_ub2_i,
            "e_ub1_ur_rb": chi_ub1 & chi_ur & chi_rb_i,
            "e_ub1_ur_ub2i": chi_ub1 & chi_ur & chi_ub2_i,
            "e_ub1_ur_ub2": chi_ub1 & chi_ur & chi_ub2,
        }
        proto = scheme.protocol
        if proto == Protocol.BASIC:
            packets = chi_ub1.astype(float) + chi_ub2
            relay_tx = np.zeros_like(chi_ur)
        elif proto == Protocol.BASELINE:
            relay_tx = chi_ur
            packets = (chi_ur & chi_rb_i) + np.where(chi_ur, chi_ub2_i, chi_ub2).astype(float)
        elif proto == Protocol.SELECTION:
            relay_tx = chi_ur
            packets = (chi_ub1 | (chi_ur & chi_rb_i)) + np.where(chi_ur, chi_ub2_i, chi_ub2).astype(float)
        else:
            relay_tx = chi_ur & ~chi_ub1
            packets = (chi_ub1 | (relay_tx & chi_rb_i)) + np.where(relay_tx, chi_ub2_i, chi_ub2).astype(float)
        return packets.astype(float), relay_tx, flags

    # superposition coding: two streams on one slot-1 fading draw
    if beta is None:
        raise ValueError("SC schemes need a resolved split")
    q1, mm = _split_margins(th, beta)
    if math.isinf(mm):
        y1 = x1 = ry = np.zeros(G_ub1.shape[0], dtype=bool)
    else:
        y1 = G_ub1 >= th * c_b1 * mm
        x1 = (G_ub1 >= th * c_b1 * q1) & ~y1
        ry = G_ur >= th * c_r1 * mm
    flags = {
        "e_ub": chi_ub2, "e_ub_x": x1, "e_ub_y": y1, "e_ur_y": ry,
        "e_ury_rb": ry & chi_rb_i,
        "e_ury_ub": ry & chi_ub2,
        "e_ury_ubi": ry & chi_ub2_i,
        "e_uby_ury_rb": y1 & ry & chi_rb_i,
        "e_uby_ury_ub2i": y1 & ry & chi_ub2_i,
        "e_uby_ury_ub2": y1 & ry & chi_ub2,
    }
    proto = scheme.protocol
    printed = counting == "as_printed"
    if proto == Protocol.BASIC:
        # the UE superposes two packets in both slots
        if math.isinf(mm):
            y2 = x2 = np.zeros_like(y1)
        else:
            y2 = G_ub2 >= th * c_b2 * mm
            x2 = (G_ub2 >= th * c_b2 * q1) & ~y2
        if printed:
            packets = 2.0 * y1 + 2.0 * y2
        else:
            packets = x1 + 2.0 * y1 + x2 + 2.0 * y2
        return packets.astype(float), np.zeros_like(y1), flags
    if proto == Protocol.BASELINE:
        relay_tx = ry
        slot1 = x1.astype(float) if printed else x1 + 2.0 * y1
        relayed = (ry & chi_rb_i).astype(float) if printed else (ry & chi_rb_i & ~y1).astype(float)
    elif proto == Protocol.SELECTION:
        relay_tx = ry
        slot1 = (x1 + y1).astype(float) if printed else x1 + 2.0 * y1
        relayed = (ry & chi_rb_i & ~y1).astype(float)
    else:
        relay_tx = ry & ~y1
        slot1 = (x1 + y1).astype(float) if printed else x1 + 2.0 * y1
        relayed = (relay_tx & chi_rb_i).astype(float)
    slot2 = np.where(relay_tx, chi_ub2_i, chi_ub2).astype(float)
    return (slot1 + relayed + slot2).astype(float), relay_tx, flags


def _protocol_eval_nosic(params, scheme, rnd, G_ur, G_ub1, G_rb, G_ub2, c_r1, c_b1, c_b2):
    """Relaying without cancellation: the UE and the relay never share a slot.

    Coordinated networks put every relay in slot 2, and relays do not interfere;
    the two receiver modes bound the other-cell UE activity in slot 2 (lower
    bound: all of them transmit; upper bound: none do).
    """
    th = params.theta_thresh
    c2 = c_b2 if scheme.receiver == Receiver.NOSIC_LOWER else np.ones_like(c_b2)
    chi_ur = G_ur >= th * c_r1
    chi_ub1 = G_ub1 >= th * c_b1
    chi_rb_clean = G_rb >= th * c2
    chi_ub2_clean = G_ub2 >= th * c2
    flags = {
        "e_ub": chi_ub1, "e_ur": chi_ur,
        "e_ur_rb": chi_ur & chi_rb_clean,
    }
    proto = scheme.protocol
    if proto == Protocol.BASELINE:
        relay_tx = chi_ur
        packets = (chi_ur & chi_rb_clean).astype(float)
    elif proto == Protocol.SELECTION:
        relay_tx = chi_ur
        packets = (chi_ub1 | (chi_ur & chi_rb_clean)).astype(float)
    else:
        relay_tx = chi_ur & ~chi_ub1
        packets = np.where(chi_ub1, 1.0 + chi_ub2_clean, (chi_ur & chi_rb_clean).astype(float))
    return packets.astype(float), relay_tx, flags


def _resolve_beta(params, scheme, geom: LinkGeometry | None):
    """Fixed SC split for this run; position-optimized splits need a geometry."""
    from .analytic import sc_betas

    if scheme.sc.off:
        return None
    if scheme.sc.kind == ScPolicy.FIXED:
        return scheme.sc.beta
    if geom is None:
        raise ValueError(
            "position-optimized SC splits are defined per UE location; "
            "use conditional_throughput_samples/estimate with a fixed geometry"
        )
    beta_direct, beta_relay = sc_betas(params, geom)
    if scheme.sc.kind == ScPolicy.OPT_RELAY:
        return beta_direct if scheme.protocol == Protocol.BASIC else beta_relay
    return beta_relay  # opt_select resolves its branch in the caller


# ---------------------------------------------------------------------------
# public single-trial surface


@dataclass(frozen=True)
class SlotPairOutcome:
    """Outcome of one two-slot protocol execution."""

    packets_delivered: float
    energy_spent: float
    flags: dict
    ihat_r1: float
    ihat_b1: float
    ihat_b2: float


def run_slot_pair(params: NetworkParams, scheme: SchemeSpec, deployment: Deployment,
                  rng: np.random.Generator, counting: str = "as_printed") -> SlotPairOutcome:
    """Execute one slot pair on an explicit deployment.

    The served UE talks to its angularly nearest relay; interference is summed
    from the deployment's interferer positions with fresh fading per
    (interferer, receiver, slot).
    """
    served = np.asarray(deployment.served, dtype=float)
    d_ub = float(np.hypot(*served))
    ue_ang = math.atan2(served[1], served[0])
    relay_ang = 2.0 * math.pi * np.arange(params.kr) / params.kr
    diffs = np.angle(np.exp(1j * (ue_ang - relay_ang)))
    j = int(np.argmin(np.abs(diffs)))
    theta_u = float(diffs[j])

    d_ur, theta_ur, g_ub, g_rb, g_ur = link_gammas(params, d_ub, theta_u)
    pts = np.asarray(deployment.interferers, dtype=float)
    # rotate so the serving relay sits on the +x axis, matching the batch layout
    rot = relay_ang[j]
    if pts.shape[0]:
        r = np.hypot(pts[:, 0], pts[:, 1])
        phi = np.arctan2(pts[:, 1], pts[:, 0]) - rot
    else:
        r = np.zeros(0)
        phi = np.zeros(0)
    tail = tail_mean_interference(params, deployment.window or window_radius(params))
    g_b = params.Pt * params.A * r ** (-params.alpha) if r.shape[0] else np.zeros(0)
    g_r = _interferer_gain_to_relay(params, r, phi) if r.shape[0] else np.zeros(0)
    h = rng.standard_exponential((3, r.shape[0]))
    i_r1 = float(g_r @ h[0]) + tail
    i_b1 = float(g_b @ h[1]) + tail
    i_b2 = float(g_b @ h[2]) + tail
    hl = rng.standard_exponential(4)
    rnd = {
        "g_ub": np.array([float(g_ub)]), "g_rb": np.array([float(g_rb)]),
        "g_ur": np.array([float(g_ur)]),
        "ihat_r1": np.array([i_r1 / params.N0]), "ihat_b1": np.array([i_b1 / params.N0]),
        "ihat_b2": np.array([i_b2 / params.N0]),
        "h_ur": np.array([hl[0]]), "h_ub1": np.array([hl[1]]),
        "h_rb": np.array([hl[2]]), "h_ub2": np.array([hl[3]]),
    }
    from .model import UePolar, derive_link_geometry

    geom = derive_link_geometry(params, UePolar(d_ub, theta_u))
    beta = _resolve_beta(params, scheme, geom)
    packets, relay_tx, flags = _protocol_eval(params, scheme, rnd, counting, beta)
    energy = params.slot_T * (2.0 * params.Pt + params.Pr_radiated * float(relay_tx[0]))
    return SlotPairOutcome(
        packets_delivered=float(packets[0]),
        energy_spent=energy,
        flags={k: bool(v[0]) for k, v in flags.items()},
        ihat_r1=i_r1 / params.N0,
        ihat_b1=i_b1 / params.N0,
        ihat_b2=i_b2 / params.N0,
    )


# ---------------------------------------------------------------------------
# batched estimation


def _accumulate(acc: dict, packets, relay_tx, flags, energy):
    acc["n"] = acc.get("n", 0) + packets.shape[0]
    acc["tp"] = acc.get("tp", 0.0) + float(packets.sum())
    acc["tp2"] = acc.get("tp2", 0.0) + float((packets**2).sum())
    acc["en"] = acc.get("en", 0.0) + float(energy.sum())
    acc["en2"] = acc.get("en2", 0.0) + float((energy**2).sum())
    acc["en_tp"] = acc.get("en_tp", 0.0) + float((energy * packets).sum())
    acc["relay_tx"] = acc.get("relay_tx", 0) + int(relay_tx.sum())
    for k, v in flags.items():
        acc["flag_" + k] = acc.get("flag_" + k, 0) + int(v.sum())
    return acc


def _batch_worker(args):
    params, scheme, policy, index, size, geom, counting, beta, frozen_pts = args
    rng = policy.generator(_STREAM_TRIALS, index)
    rnd = _draw_trials(params, rng, size, geom, frozen_pts)
    packets, relay_tx, flags = _protocol_eval(params, scheme, rnd, counting, beta)
    energy = params.slot_T * (2.0 * params.Pt + params.Pr_radiated * relay_tx.astype(float))
    return _accumulate({}, packets, relay_tx, flags, energy)


def _multi_batch_worker(args):
    params, schemes, policy, index, size, geom, counting, betas = args
    rng = policy.generator(_STREAM_TRIALS, index)
    rnd = _draw_trials(params, rng, size, geom)
    out = []
    for scheme, beta in zip(schemes, betas):
        packets, relay_tx, flags = _protocol_eval(params, scheme, rnd, counting, beta)
        energy = params.slot_T * (2.0 * params.Pt + params.Pr_radiated * relay_tx.astype(float))
        out.append(_accumulate({}, packets, relay_tx, flags, energy))
    return out


def estimate_many(params: NetworkParams, schemes, n_trials: int, policy: RngPolicy,
                  geom: LinkGeometry | None = None, counting: str = "as_printed",
                  threads: int = 1) -> dict[str, dict[str, Estimate]]:
    """Like :func:`estimate` for several schemes on shared randomness.

    One interference/fading draw per trial serves every scheme, which both
    couples the estimates pathwise and amortizes the sampling cost.
    """
    if n_trials < 1000:
        raise ValueError("n_trials must be at least 1000")
    schemes = list(schemes)
    betas = [_resolve_beta(params, s, geom) for s in schemes]
    jobs = [(params, schemes, policy, i, size, geom, counting, betas)
            for i, size in policy.batches(n_trials)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            per_batch = list(pool.map(_multi_batch_worker, jobs, chunksize=1))
    else:
        per_batch = [_multi_batch_worker(j) for j in jobs]
    out = {}
    for k, scheme in enumerate(schemes):
        total = _merge([batch[k] for batch in per_batch])
        out[scheme.label] = _estimates_from_totals(params, total, policy)
    return out


def _merge(accs):
    total: dict = {}
    for acc in accs:
        for k, v in acc.items():
            total[k] = total.get(k, 0) + v
    return total


def _mean_se(total_sum, total_sq, n):
    mean = total_sum / n
    var = max(total_sq / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return mean, math.sqrt(var / n)


def estimate(params: NetworkParams, scheme: SchemeSpec, n_trials: int, policy: RngPolicy,
             geom: LinkGeometry | None = None, counting: str = "as_printed",
             threads: int = 1, frozen: bool = False) -> dict[str, Estimate]:
    """Monte Carlo estimates of throughput, energy per packet, and decode probabilities.

    ``geom=None`` averages over the served-UE position law (fresh position per
    trial); a fixed geometry conditions on the position but still redraws the
    interferer field per trial.  ``frozen=True`` keeps one interferer layout for
    the whole run (diagnostic mode).  Energy per packet is the ratio of summed
    energy to summed packets with a delta-method standard error.
    """
    if n_trials < 1000:
        raise ValueError("n_trials must be at least 1000")
    if counting not in ("as_printed", "per_packet"):
        raise ValueError(f"unknown counting rule {counting!r}")
    if scheme.sc.kind == ScPolicy.OPT_SELECT:
        # evaluate both branches on shared randomness, keep the better by mean
        from .analytic import sc_betas

        if geom is None:
            raise ValueError("opt_select estimation needs a fixed geometry")
        bd, br = sc_betas(params, geom)
        r1 = _estimate_fixed_beta(params, SchemeSpec(Protocol.BASIC), n_trials, policy, geom,
                                  counting, threads, frozen, beta_override=bd, sc=True)
        r2 = _estimate_fixed_beta(params, SchemeSpec(Protocol.FEEDBACK), n_trials, policy, geom,
                                  counting, threads, frozen, beta_override=br, sc=True)
        return r1 if r1["throughput"].value >= r2["throughput"].value else r2
    beta = _resolve_beta(params, scheme, geom)
    return _estimate_fixed_beta(params, scheme, n_trials, policy, geom, counting,
                                threads, frozen, beta_override=beta, sc=not scheme.sc.off)


def _estimate_fixed_beta(params, scheme, n_trials, policy, geom, counting, threads,
                         frozen, beta_override, sc):
    if sc and scheme.sc.off:
        scheme = SchemeSpec(scheme.protocol, scheme.receiver,
                            ScPolicy(ScPolicy.FIXED, beta=beta_override))
    frozen_pts = None
    if frozen:
        rng = policy.generator(_STREAM_FROZEN, 0)
        R = window_radius(params)
        x = geom.ue.d_ub if geom is not None else 0.0
        m = rng.poisson(params.lam * math.pi * max(R * R - x * x, 0.0))
        r = np.sqrt(x * x + rng.random(m) * (R * R - x * x))
        phi = 2.0 * math.pi * rng.random(m)
        frozen_pts = (r, phi)

    jobs = [(params, scheme, policy, i, size, geom, counting, beta_override, frozen_pts)
            for i, size in policy.batches(n_trials)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            accs = list(pool.map(_batch_worker, jobs, chunksize=1))
    else:
        accs = [_batch_worker(j) for j in jobs]
    total = _merge(accs)
    return _estimates_from_totals(params, total, policy)


def _estimates_from_totals(params, total, policy) -> dict[str, Estimate]:
    n = total["n"]
    out: dict[str, Estimate] = {}

    def mc(value, stderr):
        return Estimate(value, stderr, engine="montecarlo", n_trials=n, seed=policy.master_seed)

    tp_mean, tp_se = _mean_se(total["tp"], total["tp2"], n)
    out["throughput"] = mc(tp_mean, tp_se)
    out["relay_duty"] = mc(*_mean_se(total["relay_tx"], total["relay_tx"], n))
    en_mean, _ = _mean_se(total["en"], total["en2"], n)
    if total["tp"] > 0:
        ratio = total["en"] / total["tp"]
        var_e = max(total["en2"] / n - en_mean**2, 0.0)
        var_d = max(total["tp2"] / n - tp_mean**2, 0.0)
        cov = total["en_tp"] / n - en_mean * tp_mean
        se = math.sqrt(max(var_e + ratio * ratio * var_d - 2.0 * ratio * cov, 0.0) / n) / tp_mean
        out["energy"] = mc(ratio, se)
    else:
        out["energy"] = mc(math.inf, math.nan)
    out["energy_total"] = mc(total["en"], 0.0)
    for k, v in total.items():
        if k.startswith("flag_"):
            p = v / n
            out[k[5:]] = mc(p, math.sqrt(max(p * (1.0 - p), 0.0) / (n - 1)))
    return out


def coupled_packet_counts(params: NetworkParams, schemes, n_trials: int, policy: RngPolicy,
                          geom: LinkGeometry | None = None, counting: str = "as_printed"):
    """Per-trial packet counts for several schemes on identical randomness.

    Used for pathwise ordering checks: with shared draws, a scheme that only
    adds decoding opportunities must win on every single trial.
    """
    counts = {s.label: [] for s in schemes}
    betas = {s.label: _resolve_beta(params, s, geom) for s in schemes}
    for i, size in policy.batches(n_trials):
        rng = policy.generator(_STREAM_TRIALS, i)
        rnd = _draw_trials(params, rng, size, geom)
        for s in schemes:
            packets, _, _ = _protocol_eval(params, s, rnd, counting, betas[s.label])
            counts[s.label].append(packets)
    return {k: np.concatenate(v) for k, v in counts.items()}


# ---------------------------------------------------------------------------
# position-resolved curves


def conditional_throughput_samples(params: NetworkParams, scheme: SchemeSpec,
                                   n_positions: int, inner_trials: int,
                                   policy: RngPolicy, counting: str = "as_printed"):
    """(positions, mean throughput per position) for distribution-level checks.

    Positions follow the served-UE law; each conditional mean uses
    ``inner_trials`` fresh interference/fading draws.
    """
    from .model import UePolar, derive_link_geometry

    rng = policy.generator(_STREAM_POSITIONS, 0)
    d_ub = np.sqrt(-np.log1p(-rng.random(n_positions)) / (params.lam * math.pi))
    theta_u = (rng.random(n_positions) - 0.5) * (2.0 * math.pi / params.kr)
    means = np.empty(n_positions)
    for i in range(n_positions):
        geom = derive_link_geometry(params, UePolar(float(d_ub[i]), float(theta_u[i])))
        res = estimate(params, scheme, inner_trials,
                       RngPolicy((policy.master_seed + 1 + i) % 2**64, policy.batch_size),
                       geom=geom, counting=counting)
        means[i] = res["throughput"].value
    return d_ub, theta_u, means


def empirical_cdf(samples, thresholds=None):
    """Step CDF of conditional-throughput samples; evaluated at ``thresholds`` if given."""
    from .model import CdfCurve

    samples = np.sort(np.asarray(samples, dtype=float))
    if thresholds is None:
        thresholds = samples
    thresholds = np.asarray(thresholds, dtype=float)
    probs = np.searchsorted(samples, thresholds, side="right") / samples.shape[0]
    return CdfCurve(tuple(thresholds.tolist()), tuple(probs.tolist()))


# ---------------------------------------------------------------------------
# dedicated estimators used as oracles


def estimate_basic_voronoi(params: NetworkParams, n_trials: int, policy: RngPolicy,
                           threads: int = 1) -> dict[str, Estimate]:
    """Cell-average basic-scheme throughput under the BS-process deployment model."""
    jobs = [(params, policy, i, size) for i, size in policy.batches(n_trials)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            accs = list(pool.map(_voronoi_worker, jobs, chunksize=1))
    else:
        accs = [_voronoi_worker(j) for j in jobs]
    total = _merge(accs)
    n = total["n"]
    p, se = _mean_se(total["succ"], total["succ"], n)
    return {"throughput": Estimate(2.0 * p, 2.0 * se, engine="montecarlo",
                                   n_trials=n, seed=policy.master_seed)}


def _assign_first_hit_numpy(bsx, bsy, counts, candx, candy, uex, uey):
    """First window-uniform candidate landing in each cell claims it (vectorized)."""
    b, ncols = bsx.shape
    n_cand = candx.shape[0] // b
    cx = candx.reshape(b, n_cand)
    cy = candy.reshape(b, n_cand)
    best = np.full((b, n_cand), np.inf)
    owner = np.zeros((b, n_cand), dtype=np.int64)
    step = 16
    for j0 in range(0, ncols, step):
        dx = cx[:, :, None] - bsx[:, None, j0:j0 + step]
        dy = cy[:, :, None] - bsy[:, None, j0:j0 + step]
        d2 = dx * dx + dy * dy
        jloc = np.argmin(d2, axis=2)
        dmin = np.take_along_axis(d2, jloc[:, :, None], axis=2)[:, :, 0]
        upd = dmin < best
        best = np.where(upd, dmin, best)
        owner = np.where(upd, jloc + j0, owner)
    key = (np.arange(b, dtype=np.int64)[:, None] * ncols + owner).ravel()
    vals, first = np.unique(key, return_index=True)
    uex[vals // ncols, vals % ncols] = candx[first]
    uey[vals // ncols, vals % ncols] = candy[first]


if _HAVE_NUMBA:

    @_njit(cache=True)
    def _assign_first_hit_kernel(bsx, bsy, counts, candx, candy, uex, uey):  # pragma: no cover
        b = counts.shape[0]
        n_cand = candx.shape[0] // b
        for t in range(b):
            n1 = counts[t] + 1
            filled = 0
            base = t * n_cand
            for k in range(n_cand):
                x = candx[base + k]
                y = candy[base + k]
                bj = 0
                bd = 1e300
                for j in range(n1):
                    dx = x - bsx[t, j]
                    dy = y - bsy[t, j]
                    d2 = dx * dx + dy * dy
                    if d2 < bd:
                        bd = d2
                        bj = j
                if uex[t, bj] != uex[t, bj]:  # still nan: first hit wins
                    uex[t, bj] = x
                    uey[t, bj] = y
                    filled += 1
                    if filled == n1:
                        break


def _voronoi_worker(args):
    """One batch of BS-process trials, processed in cross-trial chunks.

    BS tables are padded to the chunk maximum with far-away sentinels (never
    anyone's nearest BS); the one-UE-per-cell sampler gives every cell the
    first window-uniform candidate that lands in it, and the handful of cells
    the shared pool misses are finished by targeted rejection.
    """
    params, policy, index, size = args
    rng = policy.generator(_STREAM_VORONOI, index)
    R = window_radius(params)
    tail = tail_mean_interference(params, R)
    th = params.theta_thresh
    PtA = params.Pt * params.A
    mu = params.lam * math.pi * R * R
    succ = 0
    chunk = 64
    done = 0
    while done < size:
        b = min(chunk, size - done)
        done += b
        counts = rng.poisson(mu, b).astype(np.int64)
        nmax = int(counts.max())
        ntot = int(counts.sum())
        flat = _uniform_disk(rng, ntot, R)
        bsx = np.full((b, nmax + 1), 1e12)
        bsy = np.full((b, nmax + 1), 1e12)
        bsx[:, 0] = 0.0
        bsy[:, 0] = 0.0
        rows = np.repeat(np.arange(b), counts)
        cols = np.arange(ntot) - np.repeat(np.cumsum(counts) - counts, counts) + 1
        bsx[rows, cols] = flat[:, 0]
        bsy[rows, cols] = flat[:, 1]

        n_cand = 12 * (nmax + 1)
        cand = _uniform_disk(rng, b * n_cand, R)
        uex = np.full((b, nmax + 1), np.nan)
        uey = np.full((b, nmax + 1), np.nan)
        assign = _assign_first_hit_kernel if _HAVE_NUMBA else _assign_first_hit_numpy
        assign(bsx, bsy, counts, np.ascontiguousarray(cand[:, 0]),
               np.ascontiguousarray(cand[:, 1]), uex, uey)

        # cells the shared pool missed: finish by targeted rejection
        real = np.arange(nmax + 1)[None, :] <= counts[:, None]
        miss_t, miss_c = np.where(real & np.isnan(uex))
        for t, c in zip(miss_t, miss_c):
            nt = int(counts[t])
            bst = np.stack([bsx[t, :nt + 1], bsy[t, :nt + 1]], axis=1)
            while True:
                q = _uniform_disk(rng, 256, R)
                d2q = ((q**2).sum(axis=1)[:, None] - 2.0 * q @ bst.T
                       + (bst**2).sum(axis=1)[None, :])
                hits = np.nonzero(np.argmin(d2q, axis=1) == c)[0]
                if hits.size:
                    uex[t, c] = q[hits[0], 0]
                    uey[t, c] = q[hits[0], 1]
                    break

        g = PtA * (uex[rows, cols] ** 2 + uey[rows, cols] ** 2) ** (-0.5 * params.alpha)
        h = rng.standard_exponential(ntot)
        interference = np.bincount(rows, weights=g * h, minlength=b) + tail
        h0 = rng.standard_exponential(b)
        sig = PtA * (uex[:, 0] ** 2 + uey[:, 0] ** 2) ** (-0.5 * params.alpha) * h0
        succ += int(np.count_nonzero(sig >= th * (params.N0 + interference)))
    return {"n": size, "succ": succ}


def estimate_laplace_mc(params: NetworkParams, stu, d: float, x: float,
                        n_draws: int, policy: RngPolicy, pattern=None,
                        r_max: float | None = None):
    """Monte Carlo estimates of the joint Laplace functionals.

    Samples the interference field on the annulus ``[x, R]`` and averages
    ``exp(-s I1 - t I2 - u I3)``; the discarded far field multiplies in as the
    deterministic factor ``exp(-(s+t+u) * tail_mean)``.  Returns (values, ses)
    aligned with the rows of ``stu``.
    """
    stu = np.atleast_2d(np.asarray(stu, dtype=float))
    R = float(r_max) if r_max is not None else max(window_radius(params), 8000.0)
    tail = tail_mean_interference(params, R)
    mu = params.lam * math.pi * max(R * R - x * x, 0.0)
    pat = pattern if pattern is not None and not pattern.is_omni else None

    sums = np.zeros(stu.shape[0])
    sums2 = np.zeros(stu.shape[0])
    done = 0
    for index, size in policy.batches(n_draws):
        rng = policy.generator(_STREAM_LAPLACE, index)
        counts = rng.poisson(mu, size)
        m = int(counts.sum())
        r = np.sqrt(x * x + rng.random(m) * (R * R - x * x))
        phi = 2.0 * math.pi * rng.random(m)
        g_c = params.Pt * params.A * r ** (-params.alpha)
        rho2 = r * r + d * d - 2.0 * r * d * np.cos(phi)
        rho = np.sqrt(np.maximum(rho2, 1e-300))
        g_o = params.Pt * params.A * rho ** (-params.alpha)
        if pat is not None:
            sin_psi = np.clip(r * np.sin(phi) / rho, -1.0, 1.0)
            g_o = g_o * pat.gain_from_cos(np.sqrt(1.0 - sin_psi**2))
        h = rng.standard_exponential((3, m))
        idx = np.repeat(np.arange(size), counts)
        i1 = np.bincount(idx, weights=g_o * h[0], minlength=size)
        i2 = np.bincount(idx, weights=g_c * h[1], minlength=size)
        i3 = np.bincount(idx, weights=g_c * h[2], minlength=size)
        for k in range(stu.shape[0]):
            vals = np.exp(-stu[k, 0] * i1 - stu[k, 1] * i2 - stu[k, 2] * i3)
            sums[k] += float(vals.sum())
            sums2[k] += float((vals**2).sum())
        done += size
    mean = sums / done
    var = np.maximum(sums2 / done - mean**2, 0.0) * done / (done - 1)
    se = np.sqrt(var / done)
    tail_factor = np.exp(-stu.sum(axis=1) * tail)
    return mean * tail_factor, se * tail_factor
