"""Command-line front end: binds flag/config-file values to harness runs and
emits CSV (schema in :mod:`cvtrap.harness`) to stdout or ``--out``, with a
human-readable recap on stderr.

Exit codes: 0 success, 2 invalid arguments or configuration, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

from . import harness

_REQUIRED = object()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvtrap",
        description="Monte Carlo laboratory for a CV trap-code authentication scheme",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, scheme=True, attack=False):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--out", help="CSV output path (default: stdout)")
        p.add_argument("--seed", type=int, help="master seed (default 0)")
        p.add_argument("--no-timing", action="store_true",
                       help="write 0 for wallclock so output is byte-reproducible")
        if scheme:
            p.add_argument("--n", type=int, help="message modes")
            p.add_argument("--z", type=int, help="traps per quadrature")
            p.add_argument("--t", type=int, help="correctable modes")
            p.add_argument("--r", type=float, help="trap squeezing parameter")
            p.add_argument("--eps", type=float, help="verification threshold")
            p.add_argument("--delta", type=float, help="message-noise threshold (default eps/sqrt(2))")
            p.add_argument("--Delta", type=float, help="one-time-pad std dev (default 10*eps)")
            p.add_argument("--margin", type=float, help="required eps / e^(-r/2) ratio (default 5)")
            p.add_argument("--trials", type=int, help="Monte Carlo trials (default 100000)")
            p.add_argument("--workers", type=int, help="parallel worker processes (default 1)")
            p.add_argument("--outputs", help="comma list of extra estimands (e.g. trap_histograms)")
        if attack:
            p.add_argument("--attack-file", help="attack description file")
            p.add_argument("--attack-gen", help="generator: identity | fixed_modes | random_modes")
            p.add_argument("--u", type=int, help="number of attacked modes for generators")
            p.add_argument("--amp", help="attack amplitude (complex, e.g. '5+0j')")
            p.add_argument("--branches", type=int, help="branches for random_modes (default 1)")
            p.add_argument("--gen-seed", type=int, help="seed for random_modes generation (default 0)")

    p = sub.add_parser("noattack", help="accept rate of untampered ciphertexts")
    add_common(p)
    p = sub.add_parser("attack", help="accept and traps-pass-uncorrectable rates under attack")
    add_common(p, attack=True)
    p = sub.add_parser("equiv", help="full vs reduced pipeline accept rates")
    add_common(p, attack=True)
    p = sub.add_parser("sweep", help="repeat an experiment along one parameter axis")
    add_common(p, attack=True)
    p.add_argument("--axis", help="one of r, eps, z, u, Delta, trials")
    p.add_argument("--values", help="comma-separated decimals")
    p = sub.add_parser("twirl", help="Monte Carlo check of the displacement-twirl factor")
    add_common(p, scheme=False)
    p.add_argument("--Delta", type=float, help="averaging std dev")
    p.add_argument("--beta-diff", type=float, help="real offset between the two displacements")
    p.add_argument("--trials", type=int, help="number of phase samples (default 1000000)")
    p = sub.add_parser("bounds", help="placement probabilities and the security bound (no Monte Carlo)")
    add_common(p, scheme=False)
    p.add_argument("--n", type=int)
    p.add_argument("--z", type=int)
    p.add_argument("--t", type=int)
    return parser


def _merged(args, cfg, key, cast, default=_REQUIRED):
    value = getattr(args, key, None)
    if value is None:
        value = cfg.get(key)
    if value is None:
        if default is _REQUIRED:
            raise ValueError(f"missing required --{key.replace('_', '-')}")
        return default
    try:
        return cast(value)
    except (TypeError, ValueError):
        raise ValueError(f"bad value for --{key.replace('_', '-')}: {value!r}")


def _scheme_params(args, cfg) -> harness.SchemeParams:
    eps = _merged(args, cfg, "eps", float)
    kwargs = dict(
        n=_merged(args, cfg, "n", int),
        z=_merged(args, cfg, "z", int),
        t=_merged(args, cfg, "t", int),
        r=_merged(args, cfg, "r", float),
        eps=eps,
        Delta=_merged(args, cfg, "Delta", float, 10.0 * eps),
        delta=_merged(args, cfg, "delta", float, None),
    )
    margin = _merged(args, cfg, "margin", float, None)
    if margin is not None:
        kwargs["margin"] = margin
    return harness.SchemeParams(**kwargs)


def _attack_fields(args, cfg, need_attack):
    path = _merged(args, cfg, "attack_file", str, None)
    gen = _merged(args, cfg, "attack_gen", str, None)
    if path is not None and gen is not None:
        raise ValueError("give either --attack-file or --attack-gen, not both")
    if path is not None:
        return "file", {"path": path}, path
    if gen is None:
        if need_attack:
            raise ValueError("an attack is required: --attack-file or --attack-gen")
        return None, {}, "none"
    gen_args = {}
    u = _merged(args, cfg, "u", int, None)
    amp = _merged(args, cfg, "amp", complex, None)
    if u is not None:
        gen_args["u"] = u
    if amp is not None:
        gen_args["amp"] = amp
    branches = _merged(args, cfg, "branches", int, None)
    if branches is not None:
        gen_args["branches"] = branches
    gen_seed = _merged(args, cfg, "gen_seed", int, None)
    if gen_seed is not None:
        gen_args["gen_seed"] = gen_seed
    label = gen if not gen_args else gen + "(" + ",".join(
        f"{k}={v}" for k, v in sorted(gen_args.items())) + ")"
    return gen, gen_args, label


def _experiment_config(args, cfg, need_attack=False) -> harness.ExperimentConfig:
    params = _scheme_params(args, cfg)
    gen, gen_args, attack_id = _attack_fields(args, cfg, need_attack)
    outputs = ["accept_rate"]
    if need_attack or gen is not None:
        outputs.append("gminusi_rate")
    extra = _merged(args, cfg, "outputs", str, None)
    if extra:
        outputs.extend(name.strip() for name in extra.split(",") if name.strip())
    return harness.ExperimentConfig(
        params=params,
        trials=_merged(args, cfg, "trials", int, 100_000),
        master_seed=_merged(args, cfg, "seed", int, 0),
        attack_gen=gen,
        gen_args=gen_args,
        attack_id=attack_id,
        outputs=tuple(dict.fromkeys(outputs)),
        workers=_merged(args, cfg, "workers", int, 1),
        record_timing=not getattr(args, "no_timing", False),
    )


def _dispatch(args) -> list:
    cfg = harness.load_config_file(args.config) if getattr(args, "config", None) else {}
    command = args.command
    if command == "bounds":
        return [harness.bounds_table(
            n=_merged(args, cfg, "n", int),
            z=_merged(args, cfg, "z", int),
            t=_merged(args, cfg, "t", int),
            seed=_merged(args, cfg, "seed", int, 0),
        )]
    if command == "twirl":
        diff = _merged(args, cfg, "beta_diff", float)
        return [harness.run_twirl_check(
            beta=0j,
            betap=complex(diff),
            Delta=_merged(args, cfg, "Delta", float),
            samples=_merged(args, cfg, "trials", int, 1_000_000),
            seed=_merged(args, cfg, "seed", int, 0),
            record_timing=not getattr(args, "no_timing", False),
        )]
    if command == "noattack":
        return [harness.run_no_attack(_experiment_config(args, cfg))]
    if command == "attack":
        return [harness.run_attack(_experiment_config(args, cfg, need_attack=True))]
    if command == "equiv":
        return [harness.run_pipeline_equivalence(_experiment_config(args, cfg, need_attack=True))]
    if command == "sweep":
        axis = _merged(args, cfg, "axis", str)
        raw = _merged(args, cfg, "values", str)
        values = [float(tok) for tok in raw.split(",") if tok.strip()]
        config = _experiment_config(args, cfg)
        return harness.run_sweep(config, axis, values)
    raise ValueError(f"unknown command {command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports bad/unknown flags itself
        code = exc.code
        return code if isinstance(code, int) else 2

    try:
        summaries = _dispatch(args)
    except (ValueError, KeyError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1

    try:
        text = harness.summaries_to_csv(summaries)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        for summary in summaries:
            for res in summary.results:
                extra = "" if res.analytic is None else (
                    f" analytic={res.analytic:.6g} abs_err={res.abs_err:.3g}")
                print(
                    f"[{summary.experiment}] {res.name}: {res.estimate:.6g}"
                    f" (stderr {res.stderr:.3g}){extra}",
                    file=sys.stderr,
                )
    except Exception as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
