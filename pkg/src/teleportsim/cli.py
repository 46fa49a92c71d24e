"""Command-line front end: run scenarios, sweep channels, verify invariants.

Subcommands::

    teleportsim run    --scheme typical --b2 0.25 --alpha 0.6 --beta 0.8 \\
                       --trials 100000 --seed 42 --format json
    teleportsim sweep  --scheme typical --b2-grid 0.05:0.5:0.05 \\
                       --alpha 0.6 --beta 0.8 --trials 20000 --seed 7
    teleportsim verify --level full

Exit codes: 0 on success, 1 on usage or configuration errors, 2 when a
verification check or a run-time invariant fails.  Output is deterministic
for identical invocations: floats are printed with 12 significant digits
and no timestamps appear in any format.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .analysis import (
    RandomInput,
    Report,
    ScenarioConfig,
    analytic_success,
    monte_carlo,
)
from .backend import available_backends
from .errors import (
    BackendError,
    InvalidArgument,
    InvalidChannel,
    InvalidConfig,
    InvariantViolation,
)
from .operators import ChannelParams, InputQubit
from .protocols import (
    RELAY_SCENARIOS,
    SCHEME_CIRCUIT,
    SCHEME_POVM,
    SCHEME_TYPICAL,
)
from .verify import FAST, FULL, format_result, run_checks

__all__ = ["main"]

_SCHEMES = (
    SCHEME_TYPICAL,
    SCHEME_POVM,
    SCHEME_CIRCUIT,
    *RELAY_SCENARIOS,
)

_SWEEP_COLUMNS = "b2,analytic_success,exact_success,empirical_success,mean_success_fidelity"

# Sentinel for "--random-input given without a seed".
_UNSEEDED = object()


class _UsageError(Exception):
    """Raised for anything that should exit with code 1 and a diagnostic."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: A003 - argparse API
        raise _UsageError(message)


def _fmt(x: float) -> str:
    return f"{float(x):.12g}"


# ---------------------------------------------------------------------------
# Argument wiring
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--trials", type=int, default=100_000, help="Monte Carlo trials")
    parser.add_argument("--seed", type=int, default=42, help="trial-stream seed")
    parser.add_argument(
        "--backend",
        choices=("numba", "numpy"),
        default=None,
        help="force a trial engine (default: fastest available, "
        "or the TELEPORTSIM_BACKEND environment variable)",
    )


def _add_input_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=None, help="input |0> amplitude (real part)")
    parser.add_argument("--beta", type=float, default=None, help="input |1> amplitude (real part)")
    parser.add_argument("--alpha-im", type=float, default=0.0, help="input |0> amplitude, imaginary part")
    parser.add_argument("--beta-im", type=float, default=0.0, help="input |1> amplitude, imaginary part")
    parser.add_argument(
        "--random-input",
        nargs="?",
        const=_UNSEEDED,
        default=None,
        metavar="SEED",
        help="draw a fresh Haar-random input each trial; optional stream seed",
    )


def _add_channel_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--b2", type=float, default=None, help="single-hop channel weight |b|^2 in (0, 0.5]")
    parser.add_argument("--b-phase", type=float, default=0.0, help="phase of b in radians")
    parser.add_argument("--d2", type=float, default=None, help="relay hop-1 weight |d|^2 in (0, 0.5]")
    parser.add_argument("--d-phase", type=float, default=0.0, help="phase of d in radians")
    parser.add_argument("--f2", type=float, default=None, help="relay hop-2 weight |f|^2 in (0, 0.5]")
    parser.add_argument("--f-phase", type=float, default=0.0, help="phase of f in radians")


def build_parser() -> _Parser:
    parser = _Parser(
        prog="teleportsim",
        description="Probabilistic teleportation over partially entangled channels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario and print a report")
    run.add_argument("--scheme", choices=_SCHEMES, default=None)
    _add_channel_flags(run)
    _add_input_flags(run)
    _add_common(run)
    run.add_argument(
        "--relay-variant",
        choices=(SCHEME_CIRCUIT, SCHEME_POVM),
        default=SCHEME_CIRCUIT,
        help="realization of the sender-side hop in relay scenarios",
    )
    run.add_argument("--format", choices=("table", "json", "csv"), default="table")
    run.add_argument("--config", default=None, metavar="PATH", help="load a JSON scenario config")
    run.add_argument(
        "--dump-config",
        action="store_true",
        help="print the scenario as a JSON config and exit without running",
    )
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="sweep channel entanglement; CSV on stdout")
    sweep.add_argument("--scheme", choices=_SCHEMES, required=True)
    sweep.add_argument(
        "--b2-grid",
        default=None,
        metavar="START:STOP:STEP",
        help="inclusive |b|^2 grid for single-hop schemes",
    )
    sweep.add_argument(
        "--f2-grid",
        default=None,
        metavar="START:STOP:STEP",
        help="inclusive hop-2 |f|^2 grid for relay scenarios (requires --d2)",
    )
    sweep.add_argument("--d2", type=float, default=None, help="fixed hop-1 weight for relay sweeps")
    sweep.add_argument("--b-phase", type=float, default=0.0, help="phase applied to every grid point")
    sweep.add_argument("--d-phase", type=float, default=0.0, help="phase of the fixed hop-1 channel")
    _add_input_flags(sweep)
    _add_common(sweep)
    sweep.add_argument(
        "--relay-variant",
        choices=(SCHEME_CIRCUIT, SCHEME_POVM),
        default=SCHEME_CIRCUIT,
    )
    sweep.set_defaults(func=cmd_sweep)

    verify = sub.add_parser("verify", help="run the self-verification suite")
    verify.add_argument("--level", choices=(FAST, FULL), default=FAST)
    verify.add_argument(
        "--backend",
        choices=("numba", "numpy"),
        default=None,
        help="trial engine for the statistical checks",
    )
    verify.set_defaults(func=cmd_verify)
    return parser


# ---------------------------------------------------------------------------
# Config assembly
# ---------------------------------------------------------------------------


def _input_from_flags(args) -> InputQubit | RandomInput:
    if args.random_input is not None:
        if args.alpha is not None or args.beta is not None:
            raise _UsageError("--random-input excludes --alpha/--beta")
        if args.random_input is _UNSEEDED:
            return RandomInput()
        try:
            return RandomInput(int(args.random_input))
        except ValueError:
            raise _UsageError("--random-input seed must be an integer") from None
    if args.alpha is None or args.beta is None:
        raise _UsageError("choose an input: --alpha and --beta, or --random-input")
    alpha = complex(args.alpha, args.alpha_im)
    beta = complex(args.beta, args.beta_im)
    norm = (abs(alpha) ** 2 + abs(beta) ** 2) ** 0.5
    if norm < 1e-12:
        raise _UsageError("input amplitudes are all zero")
    # Convenience renormalization: "--alpha 3 --beta 4" means (0.6, 0.8).
    return InputQubit(alpha / norm, beta / norm)


def _channels_from_flags(args) -> tuple[ChannelParams, ...]:
    if args.scheme is None:
        raise _UsageError("--scheme is required (or provide --config)")
    if args.scheme in RELAY_SCENARIOS:
        if args.b2 is not None:
            raise _UsageError(f"scheme {args.scheme} uses --d2/--f2, not --b2")
        if args.d2 is None or args.f2 is None:
            raise _UsageError(f"scheme {args.scheme} needs --d2 and --f2")
        return (
            ChannelParams.from_b_squared(args.d2, phase=args.d_phase),
            ChannelParams.from_b_squared(args.f2, phase=args.f_phase),
        )
    if args.d2 is not None or args.f2 is not None:
        raise _UsageError(f"scheme {args.scheme} uses --b2, not --d2/--f2")
    if args.b2 is None:
        raise _UsageError(f"scheme {args.scheme} needs --b2")
    return (ChannelParams.from_b_squared(args.b2, phase=args.b_phase),)


def _scenario_from_flags(args) -> ScenarioConfig:
    return ScenarioConfig(
        scheme=args.scheme,
        channels=_channels_from_flags(args),
        input_state=_input_from_flags(args),
        trials=args.trials,
        seed=args.seed,
        relay_variant=args.relay_variant,
    )


def _channel_from_entry(index: int, entry) -> ChannelParams:
    if not isinstance(entry, dict):
        raise _UsageError(f"channels[{index}] must be an object")
    unknown = set(entry) - {"a2", "b2", "b_phase"}
    if unknown:
        raise _UsageError(f"channels[{index}]: unknown field {sorted(unknown)[0]!r}")
    has_a = "a2" in entry
    has_b = "b2" in entry
    if has_a == has_b:
        raise _UsageError(f"channels[{index}]: specify exactly one of a2/b2")
    phase = entry.get("b_phase", 0.0)
    if not isinstance(phase, (int, float)) or isinstance(phase, bool):
        raise _UsageError(f"channels[{index}].b_phase must be a number")
    weight = entry["b2"] if has_b else entry["a2"]
    if not isinstance(weight, (int, float)) or isinstance(weight, bool):
        field = "b2" if has_b else "a2"
        raise _UsageError(f"channels[{index}].{field} must be a number")
    b2 = float(weight) if has_b else 1.0 - float(weight)
    return ChannelParams.from_b_squared(b2, phase=float(phase))


def _input_from_entry(entry) -> InputQubit | RandomInput:
    if entry == "random":
        return RandomInput()
    if isinstance(entry, dict) and set(entry) == {"random"}:
        seed = entry["random"]
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise _UsageError("input.random must be an integer seed")
        return RandomInput(seed)
    if isinstance(entry, dict):
        required = {"alpha_re", "alpha_im", "beta_re", "beta_im"}
        if set(entry) != required:
            raise _UsageError(
                "input must have exactly the fields alpha_re, alpha_im, beta_re, beta_im"
            )
        for key in sorted(required):
            if not isinstance(entry[key], (int, float)) or isinstance(entry[key], bool):
                raise _UsageError(f"input.{key} must be a number")
        return InputQubit(
            complex(entry["alpha_re"], entry["alpha_im"]),
            complex(entry["beta_re"], entry["beta_im"]),
        )
    raise _UsageError('input must be an amplitude object, "random", or {"random": seed}')


def _scenario_from_file(path: str) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            document = json.load(fh)
    except OSError as exc:
        raise _UsageError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise _UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise _UsageError("config must be a JSON object")
    allowed = {"scheme", "channels", "input", "trials", "seed", "relay_variant"}
    unknown = set(document) - allowed
    if unknown:
        raise _UsageError(f"config: unknown field {sorted(unknown)[0]!r}")
    for field in ("scheme", "channels", "input", "trials", "seed"):
        if field not in document:
            raise _UsageError(f"config: missing field {field!r}")
    if not isinstance(document["scheme"], str):
        raise _UsageError("config: scheme must be a string")
    if not isinstance(document["channels"], list):
        raise _UsageError("config: channels must be a list")
    channels = tuple(
        _channel_from_entry(i, entry) for i, entry in enumerate(document["channels"])
    )
    for field in ("trials", "seed"):
        if not isinstance(document[field], int) or isinstance(document[field], bool):
            raise _UsageError(f"config: {field} must be an integer")
    variant = document.get("relay_variant", SCHEME_CIRCUIT)
    return ScenarioConfig(
        scheme=document["scheme"],
        channels=channels,
        input_state=_input_from_entry(document["input"]),
        trials=document["trials"],
        seed=document["seed"],
        relay_variant=variant,
    )


def _scenario_to_json(config: ScenarioConfig) -> dict:
    spec = config.input_state
    if isinstance(spec, InputQubit):
        input_part: object = {
            "alpha_re": spec.alpha.real,
            "alpha_im": spec.alpha.imag,
            "beta_re": spec.beta.real,
            "beta_im": spec.beta.imag,
        }
    elif spec.seed is None:
        input_part = "random"
    else:
        input_part = {"random": spec.seed}
    return {
        "scheme": config.scheme,
        "channels": [
            {"b2": ch.b_squared, "b_phase": ch.b_phase} for ch in config.channels
        ],
        "input": input_part,
        "trials": config.trials,
        "seed": config.seed,
        "relay_variant": config.relay_variant,
    }


# ---------------------------------------------------------------------------
# Output formatting
# ---------------------------------------------------------------------------


def _describe_input(config: ScenarioConfig) -> str:
    spec = config.input_state
    if isinstance(spec, RandomInput):
        if spec.seed is None:
            return "haar-random (derived from trial seed)"
        return f"haar-random (seed {spec.seed})"
    return f"alpha={_fmt(spec.alpha.real)}{spec.alpha.imag:+.12g}j beta={_fmt(spec.beta.real)}{spec.beta.imag:+.12g}j"


def _format_table(report: Report) -> str:
    config = report.config
    lines = [
        f"scheme                 {config.scheme}",
    ]
    for i, ch in enumerate(config.channels):
        name = "channel" if len(config.channels) == 1 else f"channel {i + 1}"
        lines.append(
            f"{name:<22} b2={_fmt(ch.b_squared)} b_phase={_fmt(ch.b_phase)}"
        )
    lines += [
        f"input                  {_describe_input(config)}",
        f"trials                 {config.trials}",
        f"seed                   {config.seed}",
        f"backend                {report.backend}",
        f"analytic success       {_fmt(report.analytic_success)}",
        f"exact success          {_fmt(report.exact_success)}",
        f"empirical success      {_fmt(report.empirical_success)}",
        f"mean success fidelity  {_fmt(report.mean_success_fidelity)}",
        "",
        f"{'outcome':<16} {'exact':>16} {'empirical':>16}",
    ]
    for stat in report.per_outcome:
        lines.append(
            f"{stat.label:<16} {_fmt(stat.exact):>16} {_fmt(stat.empirical):>16}"
        )
    return "\n".join(lines)


def _format_csv(report: Report) -> str:
    lines = ["label,exact,empirical"]
    for stat in report.per_outcome:
        lines.append(f"{stat.label},{_fmt(stat.exact)},{_fmt(stat.empirical)}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    if args.config is not None:
        flag_scenario = (
            args.scheme is not None
            or args.b2 is not None
            or args.d2 is not None
            or args.f2 is not None
            or args.alpha is not None
            or args.beta is not None
            or args.random_input is not None
        )
        if flag_scenario:
            raise _UsageError("use either --config or inline scenario flags, not both")
        config = _scenario_from_file(args.config)
    else:
        config = _scenario_from_flags(args)
    if args.dump_config:
        print(json.dumps(_scenario_to_json(config), indent=2))
        return 0
    report = monte_carlo(config, backend=args.backend)
    if args.format == "json":
        print(json.dumps(report.to_dict(), indent=2))
    elif args.format == "csv":
        print(_format_csv(report))
    else:
        print(_format_table(report))
    return 0


def _parse_grid(text: str, flag: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise _UsageError(f"{flag} must be START:STOP:STEP")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise _UsageError(f"{flag} must contain numbers") from None
    if step <= 0:
        raise _UsageError(f"{flag} step must be positive")
    if stop < start:
        raise _UsageError(f"{flag} stop must not precede start")
    values = []
    i = 0
    while True:
        value = start + i * step
        if value > stop + 1e-9 * step:
            break
        values.append(float(f"{value:.12g}"))
        i += 1
    if not values:
        raise _UsageError(f"{flag} produced an empty grid")
    for value in values:
        if not 0.0 < value <= 0.5:
            raise _UsageError(f"b2 must lie in (0, 0.5], got {value!r}")
    return values


def cmd_sweep(args) -> int:
    inp = _input_from_flags(args)
    relay = args.scheme in RELAY_SCENARIOS
    if relay:
        if args.b2_grid is not None:
            raise _UsageError(f"scheme {args.scheme} sweeps --f2-grid, not --b2-grid")
        if args.f2_grid is None or args.d2 is None:
            raise _UsageError(f"scheme {args.scheme} needs --f2-grid and --d2")
        grid = _parse_grid(args.f2_grid, "--f2-grid")
        fixed = ChannelParams.from_b_squared(args.d2, phase=args.d_phase)
    else:
        if args.f2_grid is not None or args.d2 is not None:
            raise _UsageError(f"scheme {args.scheme} sweeps --b2-grid, not --f2-grid")
        if args.b2_grid is None:
            raise _UsageError(f"scheme {args.scheme} needs --b2-grid")
        grid = _parse_grid(args.b2_grid, "--b2-grid")
        fixed = None
    rows = [_SWEEP_COLUMNS]
    for value in grid:
        swept = ChannelParams.from_b_squared(value, phase=args.b_phase)
        channels = (fixed, swept) if relay else (swept,)
        config = ScenarioConfig(
            scheme=args.scheme,
            channels=channels,
            input_state=inp,
            trials=args.trials,
            seed=args.seed,
            relay_variant=args.relay_variant,
        )
        report = monte_carlo(config, backend=args.backend)
        rows.append(
            ",".join(
                (
                    _fmt(value),
                    _fmt(report.analytic_success),
                    _fmt(report.exact_success),
                    _fmt(report.empirical_success),
                    _fmt(report.mean_success_fidelity),
                )
            )
        )
    print("\n".join(rows))
    return 0


def cmd_verify(args) -> int:
    results = run_checks(args.level, backend=args.backend)
    for result in results:
        print(format_result(result))
    failed = sum(not r.passed for r in results)
    total = len(results)
    print(f"{total - failed}/{total} checks passed")
    return 0 if failed == 0 else 2


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InvalidArgument, InvalidChannel, InvalidConfig, BackendError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
