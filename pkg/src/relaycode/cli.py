"""Command-line front end: ``relaycode analyze|simulate|sweep|compare``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .errors import NeverCompletes
from .field import get_field
from .markov import ChannelParams
from .simulator import RelayPolicy, SimConfig, measure_uncoded_gap, run_batch
from .systematic import expected_uncoded_gain, t_sys
from .markov import t_non_sys

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MODEL = 3

SWEEP_COLUMNS = (
    "p1",
    "p2",
    "p3",
    "m",
    "relay",
    "field",
    "t_analytic",
    "t_mc_mean",
    "t_mc_stderr",
    "u_gain_analytic",
    "u_gain_mc",
)
CONFIG_KEYS = {"m", "p1", "p2", "p3", "relay_policy", "field", "trials", "seed", "relay_lag"}
DEFAULTS = {
    "m": 8,
    "p1": 0.2,
    "p2": 0.2,
    "p3": 0.2,
    "relay_policy": "systematic",
    "field": "inf",
    "trials": 10000,
    "seed": 0,
    "relay_lag": False,
}


class UsageError(Exception):
    pass


def parse_field(text):
    """'inf' -> None; '2^m' or a power of two q -> FieldSpec."""
    text = str(text).strip().lower()
    if text in ("inf", "infinite", "infinity"):
        return None
    match = re.fullmatch(r"2\^(\d+)", text)
    if match:
        m = int(match.group(1))
    elif text.isdigit() and int(text) > 1 and int(text) & (int(text) - 1) == 0:
        m = int(text).bit_length() - 1
    else:
        raise UsageError(f"field must be 'inf', '2^m' or a power of two, got {text!r}")
    try:
        return get_field(m)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def field_label(field) -> str:
    return "inf" if field is None else f"2^{field.m}"


def relay_time(params: ChannelParams, policy: RelayPolicy) -> float:
    if policy is RelayPolicy.SYSTEMATIC:
        return t_sys(params)
    return t_non_sys(params)


def fmt(x):
    """Six significant digits; inf/nan become None for JSON."""
    if x is None:
        return None
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            return None
        return float(f"{x:.6g}")
    return x


def csv_cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        if math.isnan(x):
            return ""
        return f"{x:.6g}"
    return str(x)


@dataclass(frozen=True)
class SweepSpec:
    vary: str
    start: float
    stop: float
    step: float
    fixed: dict
    m: int
    policies: tuple
    fields: tuple
    trials: int
    seed: int

    def __post_init__(self):
        if self.vary not in ("p1", "p2", "p3"):
            raise UsageError(f"--vary must be p1, p2 or p3, got {self.vary!r}")
        if not (0.0 <= self.start <= self.stop <= 1.0):
            raise UsageError("sweep range must satisfy 0 <= from <= to <= 1")
        if not self.step > 0:
            raise UsageError("sweep step must be positive")

    def grid(self) -> list:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [round(self.start + n * self.step, 10) for n in range(count)]


def _sweep_point(spec: SweepSpec, value: float, workers: int) -> list:
    probs = dict(spec.fixed)
    probs[spec.vary] = value
    params = ChannelParams(m=spec.m, **probs)
    gain = expected_uncoded_gain(params).expected_gain
    rows = []
    for field in spec.fields:
        batches = {}
        if spec.trials > 0:
            for policy in spec.policies:
                config = SimConfig(params, policy, field, trials=spec.trials, master_seed=spec.seed)
                try:
                    batches[policy] = run_batch(config, workers)
                except NeverCompletes:
                    batches[policy] = None
        u_gain_mc = None
        both = RelayPolicy.SYSTEMATIC in batches and RelayPolicy.NON_SYSTEMATIC in batches
        if both and batches[RelayPolicy.SYSTEMATIC] and batches[RelayPolicy.NON_SYSTEMATIC]:
            u_gain_mc = (
                batches[RelayPolicy.SYSTEMATIC].mean_u - batches[RelayPolicy.NON_SYSTEMATIC].mean_u
            )
        for policy in spec.policies:
            t_analytic = None
            if field is None:
                try:
                    t_analytic = relay_time(params, policy)
                except NeverCompletes:
                    t_analytic = math.inf
            mc_mean = mc_se = None
            if policy in batches:
                batch = batches[policy]
                if batch is None:
                    mc_mean = mc_se = math.inf
                else:
                    mc_mean, mc_se = batch.mean_completion, batch.stderr_completion
            rows.append(
                {
                    "p1": params.p1,
                    "p2": params.p2,
                    "p3": params.p3,
                    "m": params.m,
                    "relay": policy.value,
                    "field": field_label(field),
                    "t_analytic": t_analytic,
                    "t_mc_mean": mc_mean,
                    "t_mc_stderr": mc_se,
                    "u_gain_analytic": gain if field is None else None,
                    "u_gain_mc": u_gain_mc,
                }
            )
    return rows


def run_sweep(spec: SweepSpec, threads: int | None = None, workers: int = 1) -> list:
    """Rows in grid order; grid points may be evaluated concurrently."""
    if threads is None:
        threads = _thread_cap()
    values = spec.grid()
    if threads <= 1:
        chunks = [_sweep_point(spec, v, workers) for v in values]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda v: _sweep_point(spec, v, workers), values))
    return [row for chunk in chunks for row in chunk]


def _thread_cap() -> int:
    env = os.environ.get("RELAYCODE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"RELAYCODE_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def rows_to_csv(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([csv_cell(row[c]) for c in columns])
    return buf.getvalue()


def _json_ready(obj):
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_json_ready(v) for v in obj]
    return fmt(obj)


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return data


def resolve(args, **overrides) -> dict:
    """Defaults, then the config file, then explicit flags."""
    values = {**DEFAULTS, **overrides}
    if getattr(args, "config", None):
        values.update(load_config(args.config))
    flag_map = {
        "packets": "m",
        "p1": "p1",
        "p2": "p2",
        "p3": "p3",
        "relay": "relay_policy",
        "field": "field",
        "trials": "trials",
        "seed": "seed",
        "relay_lag": "relay_lag",
    }
    for flag, key in flag_map.items():
        value = getattr(args, flag, None)
        if value is not None:
            values[key] = value
    return values


def _params(values) -> ChannelParams:
    try:
        return ChannelParams(
            p1=float(values["p1"]), p2=float(values["p2"]), p3=float(values["p3"]), m=int(values["m"])
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _policy(value) -> RelayPolicy:
    try:
        return RelayPolicy(str(value).replace("_", "-"))
    except ValueError:
        raise UsageError(f"relay policy must be systematic or non-systematic, got {value!r}") from None


def _echo(params: ChannelParams) -> dict:
    return {"m": params.m, "p1": params.p1, "p2": params.p2, "p3": params.p3}


def cmd_analyze(args) -> dict:
    values = resolve(args)
    params = _params(values)
    policy = _policy(values["relay_policy"])
    t_mean = relay_time(params, policy)
    gain = expected_uncoded_gain(params)
    direct = params.m * (1.0 - params.p1)
    return {
        "command": "analyze",
        **_echo(params),
        "relay": policy.value,
        "t_mean": t_mean,
        "t_per_packet": t_mean / params.m,
        "uncoded_gain": gain.expected_gain,
        "uncoded_fraction": gain.fraction,
        "expected_uncoded": direct + (gain.expected_gain if policy is RelayPolicy.SYSTEMATIC else 0.0),
    }


def _sim_config(values, params, policy) -> SimConfig:
    trials = int(values["trials"])
    if trials < 1:
        raise UsageError("--trials must be >= 1")
    return SimConfig(
        params,
        policy,
        parse_field(values["field"]),
        relay_lag=bool(values["relay_lag"]),
        trials=trials,
        master_seed=int(values["seed"]),
    )


def cmd_simulate(args) -> dict:
    values = resolve(args)
    params = _params(values)
    policy = _policy(values["relay_policy"])
    config = _sim_config(values, params, policy)
    batch = run_batch(config, _thread_cap())
    t_analytic = relay_time(params, policy) if config.field is None else None
    return {
        "command": "simulate",
        **_echo(params),
        "relay": policy.value,
        "field": config.field_label,
        "relay_lag": config.relay_lag,
        "seed": config.master_seed,
        "trials": batch.trials,
        "mean_completion": batch.mean_completion,
        "stderr_completion": batch.stderr_completion,
        "mean_u": batch.mean_u,
        "stderr_u": batch.stderr_u,
        "t_analytic": t_analytic,
    }


def cmd_compare(args) -> dict:
    values = resolve(args, trials=0)
    params = _params(values)
    ts = t_sys(params)
    tn = t_non_sys(params)
    gain = expected_uncoded_gain(params)
    report = {
        "command": "compare",
        **_echo(params),
        "t_sys": ts,
        "t_non_sys": tn,
        "t_gap": ts - tn,
        "t_sys_per_packet": ts / params.m,
        "t_non_sys_per_packet": tn / params.m,
        "uncoded_gain": gain.expected_gain,
        "uncoded_fraction": gain.fraction,
        "simulation": None,
    }
    if int(values["trials"]) > 0:
        sys_cfg = _sim_config(values, params, RelayPolicy.SYSTEMATIC)
        non_cfg = _sim_config(values, params, RelayPolicy.NON_SYSTEMATIC)
        gap = measure_uncoded_gap(sys_cfg, non_cfg, _thread_cap())
        report["simulation"] = {
            "field": sys_cfg.field_label,
            "trials": sys_cfg.trials,
            "seed": sys_cfg.master_seed,
            "t_sys_mean": gap.systematic.mean_completion,
            "t_sys_stderr": gap.systematic.stderr_completion,
            "t_non_sys_mean": gap.non_systematic.mean_completion,
            "t_non_sys_stderr": gap.non_systematic.stderr_completion,
            "u_gain_mean": gap.gap,
            "u_gain_stderr": gap.stderr,
        }
    return report


def cmd_sweep(args) -> list:
    values = resolve(args, trials=0)
    fixed = {k: float(values[k]) for k in ("p1", "p2", "p3") if k != args.vary}
    if args.relay in (None, "both"):
        policies = (RelayPolicy.SYSTEMATIC, RelayPolicy.NON_SYSTEMATIC)
    else:
        policies = tuple(_policy(p) for p in args.relay.split(","))
    fields = tuple(parse_field(f) for f in str(values["field"]).split(","))
    trials = int(values["trials"])
    if trials < 0:
        raise UsageError("--trials must be >= 0")
    try:
        ChannelParams(m=int(values["m"]), p1=0.0, p2=0.0, p3=0.0)
        for p in fixed.values():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"fixed probability {p} outside [0, 1]")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    spec = SweepSpec(
        vary=args.vary,
        start=args.start,
        stop=args.stop,
        step=args.step,
        fixed=fixed,
        m=int(values["m"]),
        policies=policies,
        fields=fields,
        trials=trials,
        seed=int(values["seed"]),
    )
    return run_sweep(spec)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--packets", type=int, help="number of source packets M (default 8)")
    common.add_argument("--p1", type=float, help="source->receiver erasure probability")
    common.add_argument("--p2", type=float, help="source->relay erasure probability")
    common.add_argument("--p3", type=float, help="relay->receiver erasure probability")
    common.add_argument("--config", help="JSON file with default values; flags override it")
    common.add_argument("--output", choices=("json", "csv"), help="output format")
    common.add_argument("--out", help="write to FILE instead of stdout")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--trials", type=int, help="Monte-Carlo trials")
    sim.add_argument("--seed", type=int, help="master seed")
    sim.add_argument("--field", help="'inf' or 2^m, e.g. 2^4")

    relay_choices = ("systematic", "non-systematic")
    parser = argparse.ArgumentParser(
        prog="relaycode",
        description="Completion time and uncoded-packet gain of systematic vs non-systematic relaying.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="exact expected completion time")
    p.add_argument("--relay", choices=relay_choices)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", parents=[common, sim], help="Monte-Carlo simulation")
    p.add_argument("--relay", choices=relay_choices)
    p.add_argument("--relay-lag", dest="relay_lag", action="store_const", const=True,
                   help="relay transmits one slot behind the source")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", parents=[common, sim], help="systematic vs non-systematic relay")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", parents=[common, sim], help="CSV sweep over one erasure probability")
    p.add_argument("--vary", choices=("p1", "p2", "p3"), required=True)
    p.add_argument("--from", dest="start", type=float, default=0.0)
    p.add_argument("--to", dest="stop", type=float, default=1.0)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--relay", default="both",
                   help="'both' or a comma list of systematic,non-systematic")
    p.set_defaults(func=cmd_sweep, output_default="csv")
    return parser


def emit(result, args):
    fmt_name = args.output or getattr(args, "output_default", "json")
    if fmt_name == "csv":
        if isinstance(result, list):
            text = rows_to_csv(result, SWEEP_COLUMNS)
        else:
            flat = {k: v for k, v in result.items() if not isinstance(v, dict)}
            text = rows_to_csv([flat], list(flat))
    else:
        text = json.dumps(_json_ready(result), indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"relaycode: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NeverCompletes as exc:
        print(f"relaycode: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    emit(result, args)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())


def report_schema() -> dict:
    """The JSON schema that every ``--output json`` report validates against."""
    from importlib import resources

    text = resources.files("relaycode").joinpath("schemas/report.schema.json").read_text("utf-8")
    return json.loads(text)
