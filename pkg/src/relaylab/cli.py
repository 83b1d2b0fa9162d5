"""Experiment runner: single evaluations, parameter sweeps, CDFs, cross-validation.

Subcommands::

    relaylab run      --config exp.cfg [--out results.csv] [--engine ...] [--trials N]
                      [--seed N] [--threads N]
    relaylab cdf      --config exp.cfg [--out cdf.csv] ...
    relaylab validate [--config exp.cfg] [--fast]

Config files are flat ``key = value`` lines with dotted sections (see
``ExperimentConfig.FIELDS``); ``#`` starts a comment.  Unknown keys are errors.
Powers are entered in dBm and the decode threshold in dB; everything internal
is linear.  Each run writes a CSV plus a ``.json`` sidecar holding the fully
resolved configuration, per-row timings, and a content hash of the CSV bytes.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time

from .model import NetworkParams, AntennaPattern, Protocol, Receiver, SchemeSpec, beamwidth3db_to_k
from .quad import QuadratureError
from . import analytic, simulator

__all__ = ["main", "cmd_run", "cmd_cdf", "cmd_validate", "ExperimentConfig", "ConfigError", "parse_config"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(ValueError):
    pass


def _dbm_to_watt(v: float) -> float:
    return 10.0 ** ((v - 30.0) / 10.0)


def _db_to_linear(v: float) -> float:
    return 10.0 ** (v / 10.0)


class ExperimentConfig:
    """Resolved experiment description (all values linear / SI)."""

    SWEEP_AXES = ("d_rb", "kr", "Pr_over_Pt", "beamwidth_3db", "beta", "none")
    ENGINES = ("analytic", "mc", "both")

    # key -> (parser, default); None default means required
    FIELDS = {
        "params.lambda": (float, 4.6e-6),
        "params.A": (float, 1e-3),
        "params.alpha": (float, 3.7),
        "params.N0_dBm": (float, -103.0),
        "params.Pt_dBm": (float, 23.0),
        "params.Pr_over_Pt": (float, 2.0),
        "params.eta": (float, 10.0),
        "params.theta_dB": (float, 0.0),
        "params.kr": (int, 3),
        "params.d_rb": (float, 150.0),
        "params.slot_T": (float, 1e-3),
        "params.relay_beamwidth_3db": (float, 0.0),   # 0 = omnidirectional
        "scheme.list": (str, "basic,baseline,selection,feedback"),
        "engine": (str, "both"),
        "sweep.axis": (str, "none"),
        "sweep.values": (str, ""),
        "mc.trials": (int, 100_000),
        "mc.seed": (int, 20260809),
        "mc.threads": (int, 1),
        "mc.counting": (str, "as_printed"),
        "cdf.thresholds": (str, "auto"),
        "cdf.positions": (int, 2000),
        "cdf.inner_trials": (int, 4000),
        "output": (str, "results.csv"),
    }

    def __init__(self, raw: dict):
        unknown = set(raw) - set(self.FIELDS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        self.raw = {}
        for key, (parse, default) in self.FIELDS.items():
            if key in raw:
                try:
                    self.raw[key] = parse(raw[key])
                except ValueError as e:
                    raise ConfigError(f"bad value for {key}: {raw[key]!r} ({e})") from None
            else:
                self.raw[key] = default
        self._validate()

    def _validate(self):
        r = self.raw
        if r["engine"] not in self.ENGINES:
            raise ConfigError(f"engine must be one of {self.ENGINES}, got {r['engine']!r}")
        if r["sweep.axis"] not in self.SWEEP_AXES:
            raise ConfigError(f"sweep.axis must be one of {self.SWEEP_AXES}, got {r['sweep.axis']!r}")
        if r["mc.counting"] not in ("as_printed", "per_packet"):
            raise ConfigError(f"mc.counting must be as_printed or per_packet")
        if _db_to_linear(r["params.theta_dB"]) < 1.0:
            raise ConfigError(
                f"theta = {r['params.theta_dB']} dB is below 0 dB; the decode model "
                "requires a threshold of at least one (the two-signal cancellation "
                "expressions assume it)")
        if r["mc.trials"] < 1000:
            raise ConfigError("mc.trials must be at least 1000")
        if r["mc.threads"] < 1:
            raise ConfigError("mc.threads must be >= 1")
        try:
            self.schemes = [SchemeSpec.parse(s) for s in r["scheme.list"].split(",") if s.strip()]
        except ValueError as e:
            raise ConfigError(f"bad scheme.list: {e}") from None
        if not self.schemes:
            raise ConfigError("scheme.list is empty")
        if r["sweep.axis"] != "none":
            try:
                self.sweep_values = [float(v) for v in r["sweep.values"].split(",") if v.strip()]
            except ValueError as e:
                raise ConfigError(f"bad sweep.values: {e}") from None
            if not self.sweep_values:
                raise ConfigError("sweep.values is empty")
            if any(b <= a for a, b in zip(self.sweep_values, self.sweep_values[1:])):
                raise ConfigError("sweep.values must be strictly increasing")
        else:
            self.sweep_values = [float("nan")]
        # every sweep value must yield valid parameters
        for v in self.sweep_values:
            self.params_at(v)

    def base_params(self) -> NetworkParams:
        return self.params_at(float("nan"))

    def params_at(self, value: float) -> NetworkParams:
        r = self.raw
        Pt = _dbm_to_watt(r["params.Pt_dBm"])
        d_rb = r["params.d_rb"]
        kr = r["params.kr"]
        pr_ratio = r["params.Pr_over_Pt"]
        bw = r["params.relay_beamwidth_3db"]
        axis = r["sweep.axis"]
        if axis != "none" and not math.isnan(value):
            if axis == "d_rb":
                d_rb = value
            elif axis == "kr":
                kr = int(value)
                if kr != value:
                    raise ConfigError(f"kr sweep values must be integers, got {value}")
            elif axis == "Pr_over_Pt":
                pr_ratio = value
            elif axis == "beamwidth_3db":
                bw = value
            # a beta sweep rewrites the schemes, not the parameters
        pattern = AntennaPattern(beamwidth3db_to_k(bw), normalized=True) if bw > 0 else AntennaPattern(0.0)
        try:
            return NetworkParams(
                lam=r["params.lambda"],
                A=r["params.A"],
                alpha=r["params.alpha"],
                N0=_dbm_to_watt(r["params.N0_dBm"]),
                Pt=Pt,
                Pr=pr_ratio * Pt,
                eta=r["params.eta"],
                theta_thresh=_db_to_linear(r["params.theta_dB"]),
                kr=kr,
                d_rb=d_rb,
                slot_T=r["params.slot_T"],
                rx_pattern_relay=pattern,
            )
        except ValueError as e:
            raise ConfigError(f"invalid parameters at sweep value {value}: {e}") from None

    def schemes_at(self, value: float):
        """Schemes for one sweep point; a beta sweep rewrites the SC split."""
        if self.raw["sweep.axis"] == "beta" and not math.isnan(value):
            from .model import ScPolicy

            out = []
            for s in self.schemes:
                if s.sc.off:
                    out.append(s)
                else:
                    out.append(SchemeSpec(s.protocol, s.receiver, ScPolicy(ScPolicy.FIXED, beta=value)))
            return out
        return self.schemes

    def resolved(self) -> dict:
        return dict(self.raw)


def parse_config(text: str) -> ExperimentConfig:
    """Parse flat ``key = value`` lines (or a resolved-config JSON document)."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(text)
        raw = doc.get("config", doc)
        return ExperimentConfig({k: str(v) for k, v in raw.items()})
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value.strip()
    return ExperimentConfig(raw)


def _load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf"
        return format(x, ".12g")
    return str(x)


RUN_COLUMNS = ["scheme", "receiver", "sc_mode", "axis", "value", "throughput", "throughput_se",
               "energy_per_packet", "energy_se", "energy_per_packet_norm",
               "engine", "n_trials", "seed"]
CDF_COLUMNS = ["threshold", "prob", "scheme", "engine", "axis", "value"]


def _scheme_cols(scheme: SchemeSpec):
    if scheme.sc.off:
        sc_mode = "off"
    elif scheme.sc.kind == "fixed":
        sc_mode = f"beta={scheme.sc.beta:g}"
    else:
        sc_mode = scheme.sc.kind
    return scheme.protocol, scheme.receiver, sc_mode


def _row_seed(master: int, i_value: int, i_scheme: int) -> int:
    # stable per-cell seeds: independent of execution order and thread count
    return (master * 1_000_003 + i_value * 1009 + i_scheme) % 2**63


def _analytic_point(params, scheme):
    tp = analytic.average_throughput(params, scheme)
    duty = analytic.average_relay_duty(params, scheme)
    num = params.slot_T * (2.0 * params.Pt + params.Pr_radiated * duty)
    energy = num / tp if tp > 0 else math.inf
    return tp, energy


def _mc_point(params, scheme, trials, seed, threads, counting):
    policy = simulator.RngPolicy(seed)
    res = simulator.estimate(params, scheme, trials, policy, geom=None,
                             counting=counting, threads=threads)
    return res


def cmd_run(config: ExperimentConfig, out_path: str | None = None, echo=print) -> int:
    """Sweep evaluation; one CSV row per (scheme, sweep value, engine)."""
    r = config.raw
    out_path = out_path or r["output"]
    engines = {"analytic": ["analytic"], "mc": ["montecarlo"], "both": ["analytic", "montecarlo"]}[r["engine"]]
    axis = r["sweep.axis"]

    rows = []
    timings = []
    for iv, value in enumerate(config.sweep_values):
        params = config.params_at(value)
        schemes = config.schemes_at(value)
        # basic-scheme reference energies for the normalized column
        ref_energy = {}
        for engine in engines:
            per_scheme = {}
            for isch, scheme in enumerate(schemes):
                t0 = time.perf_counter()
                if engine == "analytic":
                    if scheme.receiver != Receiver.SIC:
                        continue  # no analytic counterpart; MC rows carry these schemes
                    tp, energy = _analytic_point(params, scheme)
                    row = dict(tp=tp, tp_se=0.0, en=energy, en_se=0.0,
                               n_trials=0, seed="")
                else:
                    seed = _row_seed(r["mc.seed"], iv, isch)
                    res = _mc_point(params, scheme, r["mc.trials"], seed, r["mc.threads"],
                                    r["mc.counting"])
                    row = dict(tp=res["throughput"].value, tp_se=res["throughput"].stderr,
                               en=res["energy"].value, en_se=res["energy"].stderr,
                               n_trials=res["throughput"].n_trials, seed=seed)
                per_scheme[scheme.label] = row
                if scheme.protocol == Protocol.BASIC and scheme.receiver == Receiver.SIC and scheme.sc.off:
                    ref_energy[engine] = row["en"]
                timings.append({"value": value, "scheme": scheme.label, "engine": engine,
                                "wall_time_s": time.perf_counter() - t0})
            for isch, scheme in enumerate(schemes):
                if scheme.label not in per_scheme:
                    continue
                row = per_scheme[scheme.label]
                proto, recv, sc_mode = _scheme_cols(scheme)
                norm = row["en"] / ref_energy[engine] if engine in ref_energy and ref_energy[engine] > 0 else None
                rows.append([proto, recv, sc_mode, axis, _fmt(value), _fmt(row["tp"]),
                             _fmt(row["tp_se"]), _fmt(row["en"]), _fmt(row["en_se"]),
                             _fmt(norm), engine, row["n_trials"], _fmt(row["seed"])])
                per_scheme.pop(scheme.label)

    _write_outputs(out_path, RUN_COLUMNS, rows, config, timings, echo)
    return EXIT_OK


def cmd_cdf(config: ExperimentConfig, out_path: str | None = None, echo=print) -> int:
    """Throughput-CDF evaluation; one CSV row per (threshold, scheme, engine)."""
    r = config.raw
    out_path = out_path or r["output"]
    engines = {"analytic": ["analytic"], "mc": ["montecarlo"], "both": ["analytic", "montecarlo"]}[r["engine"]]
    axis = r["sweep.axis"]

    rows = []
    timings = []
    for iv, value in enumerate(config.sweep_values):
        params = config.params_at(value)
        schemes = config.schemes_at(value)
        for isch, scheme in enumerate(schemes):
            sc_on = not scheme.sc.off
            if r["cdf.thresholds"] == "auto":
                top = 4.0 if sc_on else 2.0
                thresholds = [round(0.05 * i, 10) for i in range(int(top / 0.05) + 1)]
            else:
                thresholds = [float(t) for t in r["cdf.thresholds"].split(",")]
            for engine in engines:
                t0 = time.perf_counter()
                if engine == "analytic":
                    if scheme.receiver != Receiver.SIC:
                        continue
                    curve = analytic.throughput_cdf(params, scheme, thresholds)
                else:
                    seed = _row_seed(r["mc.seed"], iv, isch)
                    policy = simulator.RngPolicy(seed)
                    _, _, means = simulator.conditional_throughput_samples(
                        params, scheme, r["cdf.positions"], r["cdf.inner_trials"], policy,
                        counting=r["mc.counting"])
                    curve = simulator.empirical_cdf(means, thresholds)
                timings.append({"value": value, "scheme": scheme.label, "engine": engine,
                                "wall_time_s": time.perf_counter() - t0})
                for thr, prob in zip(curve.thresholds, curve.probs):
                    rows.append([_fmt(thr), _fmt(prob), scheme.label, engine, axis, _fmt(value)])

    _write_outputs(out_path, CDF_COLUMNS, rows, config, timings, echo)
    return EXIT_OK


def _write_outputs(out_path, columns, rows, config, timings, echo):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(row)
    data = buf.getvalue().encode()
    with open(out_path, "wb") as fh:
        fh.write(data)
        fh.flush()
    sidecar = {
        "config": config.resolved(),
        "csv_sha256": hashlib.sha256(data).hexdigest(),
        "n_rows": len(rows),
        "timings": timings,
        "total_wall_time_s": sum(t["wall_time_s"] for t in timings),
    }
    with open(out_path + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")
    echo(f"wrote {len(rows)} rows to {out_path} (sha256 {sidecar['csv_sha256'][:12]}...)")


def cmd_validate(config: ExperimentConfig | None, fast: bool = False, echo=print) -> int:
    """Run the acceptance checks and report one pass/fail line per criterion."""
    from . import acceptance

    report = acceptance.run_all(fast=fast, echo=echo)
    failed = [c for c in report if not c.passed]
    echo(f"\n{len(report) - len(failed)}/{len(report)} checks passed")
    return EXIT_OK if not failed else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="relaylab",
                                     description="uplink relay throughput/energy experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "sweep evaluation to CSV"),
                        ("cdf", "throughput CDF to CSV"),
                        ("validate", "run the acceptance checks")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", default=None, help="experiment config file")
        sp.add_argument("--out", default=None, help="output CSV path")
        sp.add_argument("--engine", choices=ExperimentConfig.ENGINES, default=None)
        sp.add_argument("--trials", type=int, default=None, help="Monte Carlo trials")
        sp.add_argument("--seed", type=int, default=None, help="master seed")
        sp.add_argument("--threads", type=int, default=None, help="worker processes")
        if name == "validate":
            sp.add_argument("--fast", action="store_true",
                            help="reduced trial counts (smoke test, not the acceptance gate)")

    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code not in (0, None) else 0

    try:
        if args.config is not None:
            config = _load_config(args.config)
        elif args.command == "validate":
            config = None
        else:
            raise ConfigError("--config is required for run/cdf")
        if config is not None:
            overrides = {"engine": args.engine, "mc.trials": args.trials,
                         "mc.seed": args.seed, "mc.threads": args.threads}
            raw = {k: str(v) for k, v in config.resolved().items()}
            for k, v in overrides.items():
                if v is not None:
                    raw[k] = str(v)
            config = ExperimentConfig(raw)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "run":
            return cmd_run(config, args.out)
        if args.command == "cdf":
            return cmd_cdf(config, args.out)
        return cmd_validate(config, fast=getattr(args, "fast", False))
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, ArithmeticError, ValueError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
