"""Domain types and geometry shared by the semi-analytic and Monte Carlo engines.

Conventions used throughout the package:

* the base station (BS) sits at the origin, the serving relay on the positive
  x axis at distance ``d_rb``,
* all powers are in watts, distances in meters, angles in radians; dB and dBm
  appear only at the command-line boundary,
* the SINR decode threshold ``theta_thresh`` is linear and must be >= 1
  (the two-signal cancellation expressions rely on it),
* fading is unit-mean exponential per (link, slot), path loss is ``A * d**-alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "AntennaPattern",
    "NetworkParams",
    "UePolar",
    "LinkGeometry",
    "Protocol",
    "Receiver",
    "ScPolicy",
    "SchemeSpec",
    "Estimate",
    "CurvePoint",
    "CdfCurve",
    "DegenerateGeometryError",
    "antenna_gain",
    "k_to_beamwidth3db",
    "beamwidth3db_to_k",
    "derive_link_geometry",
    "link_gammas",
    "ue_position_density",
    "reference_params",
    "OMNI",
]


class DegenerateGeometryError(ValueError):
    """UE and relay coincide, so the access-link SNR is undefined."""


@dataclass(frozen=True)
class AntennaPattern:
    """Single-lobe cosine receive pattern ``((1 + cos(theta)) / 2) ** k``.

    ``k = 0`` is omnidirectional.  With ``normalized=True`` the pattern is
    scaled by ``k + 1`` so that its average gain over the sphere is one
    (``k + 1`` equals ``4*pi`` divided by the pattern's solid-angle integral).
    """

    k: float = 0.0
    normalized: bool = False

    def __post_init__(self):
        if self.k < 0:
            raise ValueError(f"directivity exponent k must be >= 0, got {self.k}")

    @property
    def is_omni(self) -> bool:
        return self.k == 0.0 and not self.normalized

    def gain(self, theta):
        return antenna_gain(self, theta)

    def gain_from_cos(self, cos_theta):
        """Gain as a function of cos(theta); works on arrays."""
        g = ((1.0 + cos_theta) / 2.0) ** self.k
        if self.normalized:
            g = (self.k + 1.0) * g
        return g


OMNI = AntennaPattern(0.0, normalized=False)


def antenna_gain(pattern: AntennaPattern, theta):
    """Receive gain at angle ``theta`` off boresight (accepts arrays)."""
    return pattern.gain_from_cos(np.cos(theta))


def k_to_beamwidth3db(k: float) -> float:
    """Full 3 dB beamwidth of the cosine pattern with exponent ``k``.

    Solves ``((1 + cos(w/2)) / 2) ** k = 1/2``, giving
    ``w = 2 * arccos(2 * 2**(-1/k) - 1)``.  Undefined for ``k = 0``.
    """
    if k <= 0:
        raise ValueError("omnidirectional pattern (k = 0) has no 3 dB beamwidth")
    return 2.0 * math.acos(2.0 * 2.0 ** (-1.0 / k) - 1.0)


def beamwidth3db_to_k(width: float) -> float:
    """Directivity exponent whose 3 dB beamwidth equals ``width`` (0 < width < 2*pi)."""
    if not 0.0 < width < 2.0 * math.pi:
        raise ValueError(f"3 dB beamwidth must lie in (0, 2*pi), got {width}")
    half = (1.0 + math.cos(width / 2.0)) / 2.0
    return -math.log(2.0) / math.log(half)


@dataclass(frozen=True)
class NetworkParams:
    """Scalar model parameters for one uplink scenario.

    ``Pr`` is the relay's *effective* transmit power (radiated power times the
    backhaul antenna gain ``eta``); the power drawn from the relay's supply is
    ``Pr / eta``.  Interfering uplink users form a Poisson process of density
    ``lam`` outside the exclusion disk of radius ``d_ub`` around the BS.
    """

    lam: float            # interferer density [m^-2]
    A: float              # path-loss constant
    alpha: float          # path-loss exponent, > 2
    N0: float             # noise power [W]
    Pt: float             # UE transmit power [W]
    Pr: float             # relay effective transmit power [W], includes eta
    eta: float            # relay backhaul antenna gain (linear)
    theta_thresh: float   # SINR decode threshold (linear), >= 1
    kr: int               # relays per cell
    d_rb: float           # relay-BS distance [m]
    slot_T: float         # slot duration [s]
    rx_pattern_relay: AntennaPattern = field(default=OMNI)
    rx_pattern_bs: AntennaPattern = field(default=OMNI)

    def __post_init__(self):
        if self.alpha <= 2:
            raise ValueError(f"alpha must exceed 2 for the interference field to be finite, got {self.alpha}")
        if self.theta_thresh < 1:
            raise ValueError(f"theta_thresh must be >= 1 (linear), got {self.theta_thresh}")
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.kr < 1:
            raise ValueError(f"kr must be >= 1, got {self.kr}")
        for name in ("A", "N0", "Pt", "Pr", "eta", "slot_T"):
            v = getattr(self, name)
            if not v > 0:
                raise ValueError(f"{name} must be > 0, got {v}")
        if self.d_rb < 0:
            raise ValueError(f"d_rb must be >= 0, got {self.d_rb}")

    @property
    def Pr_radiated(self) -> float:
        """Power actually drawn by the relay per transmission slot."""
        return self.Pr / self.eta

    def with_(self, **kw) -> "NetworkParams":
        return replace(self, **kw)


def reference_params(**overrides) -> NetworkParams:
    """Reference macro-cell scenario used by the demos and the validation suite.

    Density 4.6e-6 m^-2 (hexagonal-grid equivalent of a 500 m inter-site
    distance), path loss 1e-3 * d**-3.7, -103 dBm noise, 23 dBm UE power,
    relay at 150 m with effective power 2*Pt and backhaul gain 10, three
    relays per cell, 0 dB decode threshold (the smallest the decode model
    admits; cross-engine validation sweeps other thresholds explicitly).
    """
    Pt = 10.0 ** ((23.0 - 30.0) / 10.0)
    base = dict(
        lam=4.6e-6,
        A=1e-3,
        alpha=3.7,
        N0=10.0 ** ((-103.0 - 30.0) / 10.0),
        Pt=Pt,
        Pr=2.0 * Pt,
        eta=10.0,
        theta_thresh=1.0,
        kr=3,
        d_rb=150.0,
        slot_T=1e-3,
    )
    base.update(overrides)
    return NetworkParams(**base)


@dataclass(frozen=True)
class UePolar:
    """UE position in polar coordinates relative to the serving relay's axis.

    ``theta_u`` lives in ``[-pi/kr, pi/kr]``: the UE is always associated with
    the angularly nearest relay, placed at angle zero.
    """

    d_ub: float
    theta_u: float

    def validate(self, kr: int) -> "UePolar":
        if self.d_ub < 0:
            raise ValueError(f"d_ub must be >= 0, got {self.d_ub}")
        lim = math.pi / kr
        if not -lim <= self.theta_u <= lim:
            raise ValueError(f"theta_u must lie in [-pi/kr, pi/kr] = [±{lim:.6g}], got {self.theta_u}")
        return self


@dataclass(frozen=True)
class LinkGeometry:
    """One UE's geometry plus the mean-SNR triple of its three links."""

    ue: UePolar
    d_ur: float       # UE-relay distance
    theta_ur: float   # arrival angle at the relay antenna (boresight points away from the BS)
    gamma_ub: float   # mean SNR, UE -> BS
    gamma_rb: float   # mean SNR, relay -> BS
    gamma_ur: float   # mean SNR, UE -> relay (includes the relay receive pattern)


def link_gammas(params: NetworkParams, d_ub, theta_u):
    """Vectorized (d_ur, theta_ur, gamma_ub, gamma_rb, gamma_ur) for UE positions.

    Shared by the scalar geometry constructor and the Monte Carlo engine so the
    two engines cannot drift apart.  Accepts scalars or arrays.
    """
    d_ub = np.asarray(d_ub, dtype=float)
    theta_u = np.asarray(theta_u, dtype=float)
    d_rb = params.d_rb
    # law of cosines; the relay sits at (d_rb, 0)
    d_ur = np.sqrt(d_ub**2 + d_rb**2 - 2.0 * d_ub * d_rb * np.cos(theta_u))
    # arrival angle at the relay, measured from the outward radial boresight
    theta_ur = np.arctan2(d_ub * np.sin(theta_u), d_ub * np.cos(theta_u) - d_rb)
    with np.errstate(divide="ignore"):
        gamma_ub = params.A * params.Pt / (params.N0 * d_ub**params.alpha)
        g_rb = params.A * params.Pr / (params.N0 * d_rb**params.alpha) if d_rb > 0 else math.inf
        gamma_rb = g_rb * np.ones_like(d_ub)
        gamma_ur = (
            params.A
            * params.Pt
            * antenna_gain(params.rx_pattern_relay, theta_ur)
            / (params.N0 * d_ur**params.alpha)
        )
    return d_ur, theta_ur, gamma_ub, gamma_rb, gamma_ur


def derive_link_geometry(params: NetworkParams, ue: UePolar) -> LinkGeometry:
    """Geometry and mean SNRs for a UE at ``ue``; errors out if it sits on the relay."""
    ue.validate(params.kr)
    d_ur, theta_ur, g_ub, g_rb, g_ur = link_gammas(params, ue.d_ub, ue.theta_u)
    d_ur = float(d_ur)
    if d_ur == 0.0:
        raise DegenerateGeometryError(
            f"UE coincides with the relay (d_ub = d_rb = {ue.d_ub}, theta_u = 0): access SNR undefined"
        )
    return LinkGeometry(
        ue=ue,
        d_ur=d_ur,
        theta_ur=float(theta_ur),
        gamma_ub=float(g_ub),
        gamma_rb=float(g_rb),
        gamma_ur=float(g_ur),
    )


def ue_position_density(params: NetworkParams, r, theta):
    """Joint density of the served UE position on the wedge of its serving relay.

    Radially this is the nearest-point law of a Poisson process of density
    ``lam`` (Rayleigh); the angle is uniform on ``[-pi/kr, pi/kr]``.  Integrates
    to one over ``r in [0, inf)``, ``theta in [-pi/kr, pi/kr]``.
    """
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be >= 0")
    if np.any(np.abs(theta) > math.pi / params.kr + 1e-12):
        raise ValueError("theta must lie in [-pi/kr, pi/kr]")
    return params.kr * params.lam * r * np.exp(-params.lam * math.pi * r**2)


# ---------------------------------------------------------------------------
# scheme description


class Protocol:
    BASIC = "basic"
    BASELINE = "baseline"
    SELECTION = "selection"
    FEEDBACK = "feedback"
    ALL = (BASIC, BASELINE, SELECTION, FEEDBACK)
    RELAYING = (BASELINE, SELECTION, FEEDBACK)


class Receiver:
    SIC = "sic"
    NOSIC_LOWER = "nosic_lower"   # every other-cell UE also transmits in slot 2
    NOSIC_UPPER = "nosic_upper"   # no other-cell UE transmits in slot 2
    ALL = (SIC, NOSIC_LOWER, NOSIC_UPPER)


@dataclass(frozen=True)
class ScPolicy:
    """Superposition-coding mode: off, a fixed power split, or an optimized one.

    ``kind`` is one of ``off``, ``fixed`` (requires ``beta`` in [0.5, 1)),
    ``opt_relay`` (closed-form split tuned for the relayed path, per position)
    and ``opt_select`` (per position, the better of direct transmission at its
    own optimal split and feedback relaying at the relayed-path split).
    """

    kind: str = "off"
    beta: float | None = None

    OFF = "off"
    FIXED = "fixed"
    OPT_RELAY = "opt_relay"
    OPT_SELECT = "opt_select"

    def __post_init__(self):
        if self.kind not in ("off", "fixed", "opt_relay", "opt_select"):
            raise ValueError(f"unknown SC policy kind {self.kind!r}")
        if self.kind == "fixed":
            if self.beta is None or not 0.5 <= self.beta < 1.0:
                raise ValueError(f"fixed SC split requires beta in [0.5, 1), got {self.beta}")
        elif self.beta is not None:
            raise ValueError(f"beta is only meaningful for the fixed SC policy, got kind={self.kind!r}")

    @property
    def off(self) -> bool:
        return self.kind == "off"


SC_OFF = ScPolicy("off")


@dataclass(frozen=True)
class SchemeSpec:
    """Which protocol runs, with which receiver mode and which SC mode."""

    protocol: str
    receiver: str = Receiver.SIC
    sc: ScPolicy = SC_OFF

    def __post_init__(self):
        if self.protocol not in Protocol.ALL:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.receiver not in Receiver.ALL:
            raise ValueError(f"unknown receiver mode {self.receiver!r}")
        if self.receiver != Receiver.SIC and self.protocol == Protocol.BASIC:
            raise ValueError("the no-SIC interference bounds concern relay-slot interference; "
                             "they do not apply to the basic scheme")
        if self.receiver != Receiver.SIC and not self.sc.off:
            raise ValueError("superposition coding requires the SIC receiver")
        if self.sc.kind == ScPolicy.OPT_SELECT and self.protocol != Protocol.FEEDBACK:
            raise ValueError("the opt_select SC policy is defined on the feedback scheme")

    @property
    def label(self) -> str:
        parts = [self.protocol]
        if self.receiver != Receiver.SIC:
            parts.append(self.receiver)
        if not self.sc.off:
            if self.sc.kind == ScPolicy.FIXED:
                parts.append(f"sc={self.sc.beta:g}")
            else:
                parts.append(f"sc={self.sc.kind}")
        return "+".join(parts)

    @staticmethod
    def parse(text: str) -> "SchemeSpec":
        """Parse labels like ``feedback``, ``selection+nosic_upper``, ``basic+sc=0.75``,
        ``feedback+sc=opt_relay``."""
        parts = [p.strip() for p in text.strip().lower().split("+") if p.strip()]
        if not parts:
            raise ValueError("empty scheme label")
        protocol = parts[0]
        receiver = Receiver.SIC
        sc = SC_OFF
        for part in parts[1:]:
            if part in (Receiver.NOSIC_LOWER, Receiver.NOSIC_UPPER):
                receiver = part
            elif part.startswith("sc="):
                value = part[3:]
                if value in (ScPolicy.OPT_RELAY, ScPolicy.OPT_SELECT):
                    sc = ScPolicy(value)
                else:
                    sc = ScPolicy(ScPolicy.FIXED, beta=float(value))
            else:
                raise ValueError(f"unknown scheme modifier {part!r} in {text!r}")
        return SchemeSpec(protocol=protocol, receiver=receiver, sc=sc)


# ---------------------------------------------------------------------------
# result containers


@dataclass(frozen=True)
class Estimate:
    """A value with an uncertainty and provenance.

    Semi-analytic results carry ``stderr = 0``; Monte Carlo results carry the
    standard error of the mean plus the trial count and master seed.
    """

    value: float
    stderr: float = 0.0
    engine: str = "analytic"
    n_trials: int = 0
    seed: int | None = None

    def agrees_with(self, other: "Estimate", n_sigma: float = 3.0, se_floor: float = 0.0) -> bool:
        """True when the two values differ by at most ``n_sigma`` combined stderr."""
        se = math.hypot(self.stderr, other.stderr)
        return abs(self.value - other.value) <= n_sigma * max(se, se_floor)


@dataclass(frozen=True)
class CurvePoint:
    axis: str
    value: float
    throughput: Estimate
    energy: Estimate | None = None


@dataclass(frozen=True)
class CdfCurve:
    """Thresholds with cumulative probabilities, non-decreasing and ending at 1."""

    thresholds: tuple
    probs: tuple

    def __post_init__(self):
        if len(self.thresholds) != len(self.probs):
            raise ValueError("thresholds and probs must have equal length")

    def prob_at(self, t: float) -> float:
        idx = np.searchsorted(np.asarray(self.thresholds), t, side="right") - 1
        if idx < 0:
            return 0.0
        return self.probs[idx]
