"""Seeded Monte Carlo experiment runner.

Every trial gets its own random stream derived only from
``(master_seed, stream id, trial index)`` via ``numpy.random.SeedSequence``,
and all estimates are accumulated as exact integer event counters, so results
are bit-identical regardless of how trials are chunked across workers.

CSV schema (header mandatory, 12 significant digits, empty cell for "none"):

    experiment,n,z,t,r,eps,delta,Delta,attack_id,trials,seed,estimand,
    estimate,stderr,analytic,abs_err,wallclock_s
"""

from __future__ import annotations

import csv
import dataclasses
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .adversary import AttackSpec, attack_fixed_modes, attack_identity, attack_random_modes, parse_attack_file
from .analytics import (
    SchemeParams,
    eps_dec,
    hamming_weight_delta,
    p_exact,
    twirl_factor,
    twirl_mc_oracle,
)
from .cvgauss import displace_all
from .trapauth import (
    Flag,
    LogicalMessage,
    apply_attack,
    decode,
    encode_state,
    keygen,
    measure_traps,
    plain_state,
)

_SQRT2 = math.sqrt(2.0)

# stream ids for per-trial SeedSequence spawn keys
_STREAM_SETUP = 0
_STREAM_MEASURE = 1
_STREAM_MEASURE_REDUCED = 2
_STREAM_STANDALONE = 4

# message used by pipeline experiments; any fixed coherent label works, a
# nonzero one exercises recovery
DEFAULT_MESSAGE = 0.8 - 0.3j

ESTIMANDS = ("accept_rate", "gminusi_rate", "trap_histograms", "twirl_check")

CSV_COLUMNS = (
    "experiment", "n", "z", "t", "r", "eps", "delta", "Delta", "attack_id",
    "trials", "seed", "estimand", "estimate", "stderr", "analytic", "abs_err",
    "wallclock_s",
)

_HIST_BINS = 12  # uniform bins on [-3 eps, 3 eps], plus underflow/overflow


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: scheme parameters, optional attack, trial count, seed.

    ``attack`` may be given directly, or as a generator reference
    (``attack_gen`` in {"identity", "fixed_modes", "random_modes", "file"}
    with ``gen_args``) so sweeps can rebuild it when the mode count changes.
    ``record_timing=False`` writes 0 for wallclock, making the CSV output
    byte-reproducible.
    """

    params: SchemeParams
    trials: int
    master_seed: int
    attack: AttackSpec | None = None
    attack_gen: str | None = None
    gen_args: dict = field(default_factory=dict)
    attack_id: str = "none"
    outputs: tuple = ("accept_rate",)
    workers: int = 1
    record_timing: bool = True
    message: complex = DEFAULT_MESSAGE

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.outputs:
            raise ValueError("outputs must be non-empty")
        for name in self.outputs:
            if name not in ESTIMANDS:
                raise ValueError(f"unknown estimand {name!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class EstimandResult:
    name: str
    estimate: float
    stderr: float
    analytic: float | None = None
    abs_err: float | None = None


@dataclass(frozen=True)
class ExperimentSummary:
    """Per-estimand results plus the identifying columns of the CSV schema."""

    experiment: str
    results: tuple
    trials: int
    seed: int
    wallclock: float
    attack_id: str = "none"
    param_cols: dict = field(default_factory=dict)

    def by_name(self, name: str) -> EstimandResult:
        for res in self.results:
            if res.name == name:
                return res
        raise KeyError(name)


def _param_cols(params: SchemeParams) -> dict:
    return {
        "n": params.n, "z": params.z, "t": params.t, "r": params.r,
        "eps": params.eps, "delta": params.delta, "Delta": params.Delta,
    }


def _trial_rng(master_seed: int, stream: int, trial: int) -> np.random.Generator:
    ss = np.random.SeedSequence(master_seed, spawn_key=(stream, trial))
    return np.random.Generator(np.random.PCG64(ss))


def _bernoulli(name, count, trials, analytic=None) -> EstimandResult:
    p = count / trials
    se = math.sqrt(p * (1.0 - p) / trials)
    err = None if analytic is None else abs(p - analytic)
    return EstimandResult(name, p, se, analytic, err)


def _hist_edges(params: SchemeParams) -> np.ndarray:
    return np.linspace(-3.0 * params.eps, 3.0 * params.eps, _HIST_BINS + 1)


def _run_chunk(params, attack, message, master_seed, start, stop, want_hist):
    """Count accept and traps-pass-but-uncorrectable events on trials
    [start, stop); optionally histogram all trap outcomes."""
    plain = plain_state(params, LogicalMessage(message))
    edges = _hist_edges(params) if want_hist else None
    hist = np.zeros(_HIST_BINS + 2, dtype=np.int64) if want_hist else None
    accepts = 0
    gminusi = 0
    for i in range(start, stop):
        setup = _trial_rng(master_seed, _STREAM_SETUP, i)
        meas = _trial_rng(master_seed, _STREAM_MEASURE, i)
        key = keygen(params, setup)
        cipher = encode_state(plain, key)
        if attack is not None:
            cipher = apply_attack(cipher, attack, setup)
        result = decode(params, key, cipher, meas)
        if result.flag is Flag.ACC:
            accepts += 1
        if result.gminusi_event:
            gminusi += 1
        if want_hist:
            outcomes = [rec.outcome for rec in result.traps]
            inner, _ = np.histogram(outcomes, bins=edges)
            hist[1:-1] += inner
            hist[0] += sum(1 for o in outcomes if o < edges[0])
            hist[-1] += sum(1 for o in outcomes if o >= edges[-1])
    return accepts, gminusi, hist


def _run_chunk_reduced(params, attack, message, master_seed, start, stop):
    """Reduced pipeline: no one-time pad and no mode permutation; the sampled
    attack vector is applied directly to the plain state after mapping it
    through the inverse key permutation. Key draws mirror the full pipeline so
    the two see matched permutations and attack branches."""
    plain = plain_state(params, LogicalMessage(message))
    accepts = 0
    for i in range(start, stop):
        setup = _trial_rng(master_seed, _STREAM_SETUP, i)
        meas = _trial_rng(master_seed, _STREAM_MEASURE_REDUCED, i)
        key = keygen(params, setup)  # otp drawn for stream alignment, unused
        st = plain
        if attack is not None:
            alpha = attack.sample(setup)
            st = displace_all(plain, alpha[key.perm])
        accept, _, _ = measure_traps(st, params, meas)
        if accept:
            accepts += 1
    return accepts


def _chunk_ranges(trials: int, workers: int):
    bounds = np.linspace(0, trials, workers + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _run_trials(config: ExperimentConfig, attack, want_hist: bool):
    """Dispatch trial chunks, possibly across processes; merge integer
    counters (order-independent, so results do not depend on parallelism)."""
    args = (config.params, attack, config.message, config.master_seed)
    ranges = _chunk_ranges(config.trials, config.workers)
    if config.workers == 1:
        parts = [_run_chunk(*args, a, b, want_hist) for a, b in ranges]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_run_chunk, *args, a, b, want_hist) for a, b in ranges]
            parts = [f.result() for f in futures]
    accepts = sum(p[0] for p in parts)
    gminusi = sum(p[1] for p in parts)
    hist = None
    if want_hist:
        hist = np.zeros(_HIST_BINS + 2, dtype=np.int64)
        for p in parts:
            hist += p[2]
    return accepts, gminusi, hist


def _hist_rows(hist: np.ndarray, params: SchemeParams, trials: int):
    edges = _hist_edges(params)
    total = 2 * params.z * trials  # outcomes per trial
    rows = [_bernoulli(f"trap_hist(-inf,{edges[0]:.6g})", int(hist[0]), total)]
    for k in range(_HIST_BINS):
        name = f"trap_hist[{edges[k]:.6g},{edges[k + 1]:.6g})"
        rows.append(_bernoulli(name, int(hist[k + 1]), total))
    rows.append(_bernoulli(f"trap_hist[{edges[-1]:.6g},inf)", int(hist[-1]), total))
    return rows


def resolve_attack(config: ExperimentConfig, params: SchemeParams | None = None):
    """Materialize the configured attack for the given parameters (an inline
    spec is returned as-is; a generator reference is rebuilt, which is what
    makes mode-count sweeps possible)."""
    params = params or config.params
    if config.attack is not None:
        if config.attack.modes != params.modes:
            raise ValueError(
                f"attack acts on {config.attack.modes} modes, scheme has {params.modes}"
            )
        return config.attack
    if config.attack_gen is None:
        return None
    return make_attack(config.attack_gen, params.modes, config.gen_args)


def make_attack(name: str, m: int, args: dict) -> AttackSpec:
    """Attack generator registry used by the CLI and by sweeps."""
    if name == "identity":
        return attack_identity(m)
    if name == "fixed_modes":
        amp = complex(args["amp"])
        modes = args.get("modes")
        if modes is None:
            modes = range(int(args["u"]))
        return attack_fixed_modes(m, modes, amp)
    if name == "random_modes":
        rng = np.random.default_rng(int(args.get("gen_seed", 0)))
        return attack_random_modes(
            m, int(args["u"]), float(args["amp"]), rng, int(args.get("branches", 1))
        )
    if name == "file":
        return parse_attack_file(args["path"])
    raise ValueError(f"unknown attack generator {name!r}")


def _gminusi_target(attack: AttackSpec, params: SchemeParams) -> float | None:
    """Analytic traps-pass-but-uncorrectable rate for attacks in the far
    regime: every component magnitude is either at least ``10 eps`` (hot) or
    below the counting threshold by at least ``5 e^{-r/2}`` (cold). Outside
    that regime the soft thresholds are not step-like and no target applies.
    """
    soft = 5.0 * math.exp(-params.r / 2.0)
    thr = min(params.delta, params.eps / _SQRT2)
    total = 0.0
    for weight, alpha in attack.branches:
        mags = np.abs(alpha)
        hot = mags >= 10.0 * params.eps
        cold = mags <= thr - soft
        if not np.all(hot | cold):
            return None
        u = int(np.count_nonzero(hot))
        if u > params.t:
            total += weight * p_exact(u, params.n, params.z)
    return total


def run_no_attack(config: ExperimentConfig) -> ExperimentSummary:
    """Estimate the untampered accept rate; analytic target ``1 - eps_dec``."""
    t0 = time.perf_counter()
    want_hist = "trap_histograms" in config.outputs
    accepts, _, hist = _run_trials(config, None, want_hist)
    wall = time.perf_counter() - t0 if config.record_timing else 0.0
    target = 1.0 - eps_dec(config.params)
    rows = [_bernoulli("accept_rate", accepts, config.trials, target)]
    if want_hist:
        rows.extend(_hist_rows(hist, config.params, config.trials))
    return ExperimentSummary(
        experiment="noattack",
        results=tuple(rows),
        trials=config.trials,
        seed=config.master_seed,
        wallclock=wall,
        attack_id="none",
        param_cols=_param_cols(config.params),
    )


def run_attack(config: ExperimentConfig) -> ExperimentSummary:
    """Estimate accept rate and traps-pass-but-uncorrectable rate under the
    configured displacement attack."""
    attack = resolve_attack(config)
    if attack is None:
        raise ValueError("run_attack needs an attack (spec or generator)")
    t0 = time.perf_counter()
    want_hist = "trap_histograms" in config.outputs
    accepts, gminusi, hist = _run_trials(config, attack, want_hist)
    wall = time.perf_counter() - t0 if config.record_timing else 0.0
    rows = [
        _bernoulli("accept_rate", accepts, config.trials),
        _bernoulli("gminusi_rate", gminusi, config.trials,
                   _gminusi_target(attack, config.params)),
    ]
    if want_hist:
        rows.extend(_hist_rows(hist, config.params, config.trials))
    return ExperimentSummary(
        experiment="attack",
        results=tuple(rows),
        trials=config.trials,
        seed=config.master_seed,
        wallclock=wall,
        attack_id=config.attack_id,
        param_cols=_param_cols(config.params),
    )


def run_twirl_check(
    beta: complex,
    betap: complex,
    Delta: float,
    samples: int,
    seed: int,
    record_timing: bool = True,
) -> ExperimentSummary:
    """Compare the Monte Carlo phase average against the closed-form damping
    factor. Phases lie on the unit circle, so ``1/sqrt(samples)`` bounds the
    standard error of both components."""
    t0 = time.perf_counter()
    rng = _trial_rng(seed, _STREAM_STANDALONE, 0)
    est = twirl_mc_oracle(beta, betap, Delta, samples, rng)
    wall = time.perf_counter() - t0 if record_timing else 0.0
    target = twirl_factor(beta, betap, Delta)
    bound = 1.0 / math.sqrt(samples)
    rows = (
        EstimandResult("twirl_real", est.real, bound, target, abs(est.real - target)),
        EstimandResult("twirl_imag", est.imag, bound, 0.0, abs(est.imag)),
    )
    return ExperimentSummary(
        experiment="twirl",
        results=rows,
        trials=samples,
        seed=seed,
        wallclock=wall,
        attack_id="none",
        param_cols={"Delta": Delta},
    )


SWEEP_AXES = ("r", "eps", "z", "u", "Delta", "trials")


def run_sweep(config: ExperimentConfig, axis: str, values) -> list:
    """Run the configured experiment once per axis value, reusing the same
    master seed for every point (common random numbers)."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    summaries = []
    for value in values:
        cfg = _config_for_axis(config, axis, value)
        has_attack = cfg.attack is not None or cfg.attack_gen is not None
        summaries.append(run_attack(cfg) if has_attack else run_no_attack(cfg))
    return summaries


def _config_for_axis(config: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    params = config.params
    if axis == "trials":
        return dataclasses.replace(config, trials=int(value))
    if axis == "u":
        if config.attack_gen is None:
            raise ValueError("sweeping u requires a generator-based attack")
        args = dict(config.gen_args, u=int(value))
        return dataclasses.replace(
            config, gen_args=args, attack=None,
            attack_id=f"{config.attack_gen}(u={int(value)})",
        )
    if axis == "z":
        new_params = dataclasses.replace(params, z=int(value))
        if config.attack is not None:
            raise ValueError("sweeping z requires a generator-based attack (mode count changes)")
        return dataclasses.replace(config, params=new_params)
    if axis == "eps":
        # delta tracks its default eps/sqrt(2) across the sweep
        new_params = dataclasses.replace(params, eps=float(value), delta=None)
        return dataclasses.replace(config, params=new_params)
    new_params = dataclasses.replace(params, **{axis: float(value)})
    return dataclasses.replace(config, params=new_params)


def run_pipeline_equivalence(config: ExperimentConfig) -> ExperimentSummary:
    """Run the full pipeline (permute + one-time pad + invert) and the reduced
    pipeline (attack vector unpermuted onto the bare plain state) on matched
    keys and attack branches but independent measurement noise; their accept
    rates estimate the same quantity, so the difference targets 0."""
    attack = resolve_attack(config)
    t0 = time.perf_counter()
    accepts_full, _, _ = _run_trials(config, attack, False)

    args = (config.params, attack, config.message, config.master_seed)
    ranges = _chunk_ranges(config.trials, config.workers)
    if config.workers == 1:
        parts = [_run_chunk_reduced(*args, a, b) for a, b in ranges]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_run_chunk_reduced, *args, a, b) for a, b in ranges]
            parts = [f.result() for f in futures]
    accepts_red = sum(parts)
    wall = time.perf_counter() - t0 if config.record_timing else 0.0

    full = _bernoulli("accept_rate_full", accepts_full, config.trials)
    red = _bernoulli("accept_rate_reduced", accepts_red, config.trials)
    diff = full.estimate - red.estimate
    se = math.hypot(full.stderr, red.stderr)
    rows = (full, red, EstimandResult("accept_rate_diff", diff, se, 0.0, abs(diff)))
    return ExperimentSummary(
        experiment="equiv",
        results=rows,
        trials=config.trials,
        seed=config.master_seed,
        wallclock=wall,
        attack_id=config.attack_id,
        param_cols=_param_cols(config.params),
    )


# --- analytic bound table (no Monte Carlo) -----------------------------------

def bounds_table(n: int, z: int, t: int, seed: int = 0) -> ExperimentSummary:
    """Placement probabilities ``p_exact(u)`` for u = 0..n and the security
    bound, as a pure-analytics summary (estimate == analytic, stderr 0)."""
    rows = []
    for u in range(n + 1):
        v = p_exact(u, n, z)
        rows.append(EstimandResult(f"p_exact_u{u}", v, 0.0, v, 0.0))
    eta = eta_bound(n, z, t)
    rows.append(EstimandResult("eta_bound", eta, 0.0, eta, 0.0))
    return ExperimentSummary(
        experiment="bounds",
        results=tuple(rows),
        trials=0,
        seed=seed,
        wallclock=0.0,
        attack_id="none",
        param_cols={"n": n, "z": z, "t": t},
    )


# --- CSV output ---------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def write_summaries_csv(summaries, fileobj) -> None:
    """One row per estimand, schema per the module docstring."""
    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for summary in summaries:
        cols = summary.param_cols
        base = [
            summary.experiment,
            _fmt(cols.get("n")), _fmt(cols.get("z")), _fmt(cols.get("t")),
            _fmt(cols.get("r")), _fmt(cols.get("eps")), _fmt(cols.get("delta")),
            _fmt(cols.get("Delta")),
            summary.attack_id, _fmt(summary.trials), _fmt(summary.seed),
        ]
        for res in summary.results:
            writer.writerow(
                base
                + [res.name, _fmt(res.estimate), _fmt(res.stderr),
                   _fmt(res.analytic), _fmt(res.abs_err), _fmt(summary.wallclock)]
            )


def summaries_to_csv(summaries) -> str:
    import io

    buf = io.StringIO()
    write_summaries_csv(summaries, buf)
    return buf.getvalue()


# --- config files --------------------------------------------------------------

CONFIG_KEYS = (
    "n", "z", "t", "r", "eps", "delta", "Delta", "margin", "trials", "seed",
    "workers", "attack_file", "attack_gen", "u", "amp", "branches", "gen_seed",
    "outputs", "axis", "values", "beta_diff",
)


def load_config_file(path) -> dict:
    """Flat ``key = value`` file, ``#`` comments; returns raw string values."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value
    return out
