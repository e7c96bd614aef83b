"""
Acceptance suite.

Desk-scale checks of the simulator: exact reductions between modes and
policies, the exact-Hessian delay compensation identity, statistical
comparisons on heavy-tailed quadratics and the module invariants.
Each criterion returns its measured values; a criterion that raises is
reported as failed with the error, never crashes the suite.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .aggregator import AggregationPolicy, ModelHistory, PolicyKind, ServerState, compute_delta
from .clipping import ClipMode, PowerSchedule, PresetName, SchedulePreset, ScheduleSet, clip, resolve_preset
from .exceptions import DivergenceError
from .experiment import HessianSource, Mode, RunConfig
from .metrics import metrics_csv, rate_slope
from .noise import NoiseKind, NoiseSpec
from .problems import ProblemKind, ProblemSpec, build_problem
from .runtimes import ClientGroup, RuntimeClass, client_mix
from .simulation import run_simulation
from .utils.logger import logger
from .worker import ClientUpdate


@dataclass
class CriterionResult:
    key: str
    title: str
    passed: bool
    measured: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        values = " ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        if self.error:
            values = f"{values} error={self.error}".strip()
        return f"{self.key} {status} {self.title}: {values}"


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def schedules(eta_outer=1.0, eta_local=0.05, u_local=1.0, u_outer=1.0) -> ScheduleSet:
    def make(value):
        return PowerSchedule.infinite() if math.isinf(value) else PowerSchedule.constant(value)

    return ScheduleSet(make(eta_outer), make(eta_local), make(u_local), make(u_outer))


def fixed_clients(*runtimes: float) -> List[ClientGroup]:
    return [ClientGroup(RuntimeClass.FIXED, 1, r) for r in runtimes]


def zero_asynchrony_config(**changes) -> RunConfig:
    """8 clients with equal fixed runtimes, buffer of 8: every consumed delay is 1."""
    dim = 20
    cfg = RunConfig(
        problem=ProblemSpec(ProblemKind.QUADRATIC_DIAG, dim),
        noise=NoiseSpec(NoiseKind.GAUSSIAN, dim=dim),
        mode=Mode.SERVER_CENTRIC,
        n_clients=8,
        buffer_size=8,
        local_steps=2,
        rounds=100,
        policy=PolicyKind.CLIP2,
        schedules=schedules(),
        clients=[ClientGroup(RuntimeClass.FIXED, 8, 1.0)],
        name="zero-asynchrony",
    )
    return cfg.with_overrides(**changes)


def same_trajectory(a, b) -> bool:
    return a.trajectory.shape == b.trajectory.shape and np.array_equal(a.trajectory, b.trajectory)


def max_gap(a, b) -> float:
    return float(np.max(np.abs(a.trajectory - b.trajectory)))


def sync_equals_async() -> Dict[str, Any]:
    asynchronous = run_simulation(zero_asynchrony_config())
    synchronous = run_simulation(zero_asynchrony_config(mode=Mode.SYNCHRONOUS))
    return {
        "passed": same_trajectory(asynchronous, synchronous),
        "max_gap": max_gap(asynchronous, synchronous),
    }


def buffer_one_modes() -> Dict[str, Any]:
    cfg = RunConfig(
        problem=ProblemSpec(ProblemKind.QUADRATIC_DIAG, 10),
        noise=NoiseSpec(NoiseKind.PARETO, 1.5, dim=10),
        mode=Mode.SERVER_CENTRIC,
        n_clients=10,
        buffer_size=1,
        local_steps=2,
        rounds=200,
        policy=PolicyKind.CLIP2,
        schedules=schedules(eta_outer=0.5),
        clients=client_mix("large", 10),
        name="buffer-one",
    )
    server = run_simulation(cfg)
    client = run_simulation(cfg.with_overrides(mode=Mode.CLIENT_CENTRIC))
    same_delays = [r.delays for r in server.records] == [r.delays for r in client.records]
    return {
        "passed": same_trajectory(server, client) and same_delays,
        "max_gap": max_gap(server, client),
        "max_delay": max(max(r.delays) for r in server.records),
    }


def downplaying_rescales() -> bool:
    """Delays 4 and 1 on deltas [4] and [2] must average to 1.5."""
    history = ModelHistory(8)
    for t in range(4):
        history.put(t, np.zeros(1))
    state = ServerState(np.zeros(1), 3, history, AggregationPolicy(PolicyKind.SGDCLIP_SD))
    updates = [ClientUpdate(0, 0, np.array([4.0])), ClientUpdate(1, 3, np.array([2.0]))]
    return bool(np.allclose(compute_delta(state, updates), [1.5]))


def unit_delay_downplaying() -> Dict[str, Any]:
    measured = {}
    pairs = ((PolicyKind.SGDCLIP, PolicyKind.SGDCLIP_SD), (PolicyKind.CLIP2, PolicyKind.CLIP2_SD))
    for plain, downplayed in pairs:
        a = run_simulation(zero_asynchrony_config(policy=plain))
        b = run_simulation(zero_asynchrony_config(policy=downplayed))
        unit = all(p == 1 for r in a.records for p in r.delays)
        measured[downplayed.value] = unit and same_trajectory(a, b)
    measured["rescale"] = downplaying_rescales()
    return {"passed": all(measured.values()), **measured}


def zero_staleness_compensation() -> Dict[str, Any]:
    plain = run_simulation(zero_asynchrony_config(mode=Mode.SYNCHRONOUS))
    compensated = run_simulation(zero_asynchrony_config(mode=Mode.SYNCHRONOUS, policy=PolicyKind.CLIP2_DC))
    return {"passed": same_trajectory(plain, compensated), "max_gap": max_gap(plain, compensated)}


def exact_hessian_compensation() -> Dict[str, Any]:
    """Zero noise, K = 1, no clipping: the corrected direction is -eta_l * grad F(x_t) on a quadratic."""
    eta_local = 0.1
    cfg = RunConfig(
        problem=ProblemSpec(ProblemKind.QUADRATIC_DIAG, 5),
        noise=NoiseSpec(NoiseKind.ZERO, dim=5),
        mode=Mode.CLIENT_CENTRIC,
        n_clients=2,
        buffer_size=1,
        local_steps=1,
        rounds=50,
        policy=PolicyKind.CLIP2_DC,
        schedules=schedules(eta_local=eta_local, u_local=math.inf, u_outer=math.inf),
        clients=fixed_clients(1.0, 2.5),
        dc_hessian=HessianSource.ORACLE,
        name="exact-hessian",
    )
    problem = build_problem(cfg.problem)
    errors = []

    def check(previous, step, _):
        expected = -eta_local * problem.grad(previous.x)
        errors.append(float(np.max(np.abs(step.direction - expected))))

    result = run_simulation(cfg, on_round=check)
    max_delay = max(max(r.delays) for r in result.records)
    max_error = max(errors)
    return {"passed": max_error <= 1e-12 and max_delay >= 3, "max_error": max_error, "max_delay": max_delay}


def clipping_rescues(n_seeds: int = 20, required_wins: int = 16) -> Dict[str, Any]:
    """Clip2 (Clip2Vanilla rates) against plain async SGD on a heavy-tailed quadratic with stragglers."""
    dim, rounds, alpha = 10, 500, 1.5
    x_star = np.ones(dim)
    bases = schedules(eta_outer=1.0, eta_local=0.3, u_local=1.0, u_outer=1.0)
    common = dict(
        problem=ProblemSpec(
            ProblemKind.QUADRATIC_DIAG,
            dim,
            params={"h": np.linspace(1, 10, dim).tolist(), "x_star": x_star.tolist()},
        ),
        noise=NoiseSpec(NoiseKind.PARETO, alpha, dim=dim),
        mode=Mode.CLIENT_CENTRIC,
        n_clients=10,
        buffer_size=4,
        local_steps=5,
        rounds=rounds,
        clients=client_mix("large", 10),
        alpha=alpha,
    )
    clipped = RunConfig(policy=PolicyKind.CLIP2, preset=PresetName.CLIP2_VANILLA, schedules=bases, **common)
    sgd_schedules = resolve_preset(SchedulePreset(PresetName.SGDCLIP_VANILLA, alpha, rounds), bases=bases)
    sgd_schedules = sgd_schedules._replace(u_local=PowerSchedule.infinite())
    plain = RunConfig(policy=PolicyKind.SGDCLIP, schedules=sgd_schedules, **common)
    radius = float(np.linalg.norm(x_star))

    wins, excursions, diverged = 0, 0, 0
    for seed in range(n_seeds):
        clip_loss = _final_loss(clipped.with_overrides(seed=seed))
        try:
            result = run_simulation(plain.with_overrides(seed=seed))
            sgd_loss = result.final.loss
            excursion = float(np.max(np.linalg.norm(result.trajectory, axis=1))) > 10 * radius
        except DivergenceError:
            sgd_loss, excursion = math.inf, True
            diverged += 1
        wins += clip_loss < sgd_loss
        excursions += excursion
    return {
        "passed": wins >= required_wins and excursions >= 1,
        "clip_wins": f"{wins}/{n_seeds}",
        "sgd_excursions": excursions,
        "sgd_diverged": diverged,
    }


def _final_loss(cfg: RunConfig) -> float:
    try:
        loss = run_simulation(cfg).final.loss
    except DivergenceError:
        return math.inf
    return math.inf if math.isnan(loss) else loss


def rate_slope_check(
    n_seeds: int = 10, horizons: Sequence[int] = (256, 512, 1024, 2048, 4096), ceiling: float = -0.05
) -> Dict[str, Any]:
    """One run per seed up to the largest horizon; shorter horizons are prefixes of it."""
    alpha, dim = 1.5, 10
    cfg = RunConfig(
        problem=ProblemSpec(ProblemKind.QUADRATIC_DIAG, dim),
        noise=NoiseSpec(NoiseKind.PARETO, alpha, dim=dim),
        mode=Mode.SERVER_CENTRIC,
        n_clients=4,
        buffer_size=2,
        local_steps=1,
        rounds=max(horizons),
        policy=PolicyKind.SGDCLIP,
        preset=PresetName.SGDCLIP_VANILLA,
        alpha=alpha,
        schedules=schedules(eta_outer=1.0, eta_local=0.1, u_local=1.0),
        clients=[ClientGroup(RuntimeClass.SMALL, 4)],
    )
    per_seed = [run_simulation(cfg.with_overrides(seed=seed)) for seed in range(n_seeds)]
    medians = [float(np.median([r.min_grad_norm_sq_at(h) for r in per_seed])) for h in horizons]
    slope = rate_slope(list(zip(horizons, medians)))
    return {"passed": slope <= ceiling, "slope": slope, "reference": -(alpha - 1) / (2 * alpha)}


def downplaying_robustness(rounds: int = 1000, blowup: float = 1e3) -> Dict[str, Any]:
    """4x4 learning-rate cross with 10% Small and 90% LargeSevere clients, buffer of 1."""
    dim = 10
    base = RunConfig(
        problem=ProblemSpec(ProblemKind.QUADRATIC_DIAG, dim, params={"h": np.linspace(1, 25, dim).tolist()}),
        noise=NoiseSpec(NoiseKind.PARETO, 1.5, dim=dim),
        mode=Mode.CLIENT_CENTRIC,
        n_clients=100,
        buffer_size=1,
        local_steps=5,
        rounds=rounds,
        clients=[ClientGroup(RuntimeClass.SMALL, 10), ClientGroup(RuntimeClass.LARGE_SEVERE, 90)],
    )
    initial = build_problem(base.problem).loss(base.initial_point())
    rates = (0.1, 0.01, 0.001, 0.0001)

    def worst_loss(cfg: RunConfig) -> float:
        try:
            losses = [r.loss for r in run_simulation(cfg).records]
        except DivergenceError:
            return math.inf
        return math.inf if not np.all(np.isfinite(losses)) else max(losses)

    sd_finite, sgd_blowups = 0, 0
    for eta_outer in rates:
        for eta_local in rates:
            bases = schedules(eta_outer=eta_outer, eta_local=eta_local, u_local=math.inf, u_outer=math.inf)
            sd = worst_loss(base.with_overrides(policy=PolicyKind.SGDCLIP_SD, schedules=bases))
            sgd = worst_loss(base.with_overrides(policy=PolicyKind.SGDCLIP, schedules=bases))
            sd_finite += math.isfinite(sd)
            sgd_blowups += not math.isfinite(sgd) or sgd > blowup * initial
    n = len(rates) ** 2
    return {
        "passed": sd_finite == n and sgd_blowups >= 1,
        "sd_finite": f"{sd_finite}/{n}",
        "sgd_blowups": sgd_blowups,
    }


def buffer_ablation(buffers: Sequence[int] = (1, 10, 20, 30), rounds: int = 50) -> Dict[str, Any]:
    dim = 5
    base = RunConfig(
        problem=ProblemSpec(ProblemKind.QUADRATIC_DIAG, dim),
        noise=NoiseSpec(NoiseKind.GAUSSIAN, dim=dim),
        n_clients=40,
        buffer_size=40,
        local_steps=1,
        rounds=rounds,
        policy=PolicyKind.CLIP2,
        schedules=schedules(),
        clients=client_mix("large", 40),
    )
    sync_clock = run_simulation(base.with_overrides(mode=Mode.SYNCHRONOUS)).total_time
    measured: Dict[str, Any] = {"sync": sync_clock}
    passed = True
    for mode in (Mode.SERVER_CENTRIC, Mode.CLIENT_CENTRIC):
        clocks = [run_simulation(base.with_overrides(mode=mode, buffer_size=m)).total_time for m in buffers]
        increasing = all(a < b for a, b in zip(clocks, clocks[1:]))
        passed = passed and increasing and max(clocks) < sync_clock
        measured[mode.value] = "/".join(f"{c:.1f}" for c in clocks)
    return {"passed": passed, **measured}


def invariant_suite(n_cases: int = 10_000) -> Dict[str, Any]:
    rng = np.random.default_rng(0)
    failures: Dict[str, int] = {}

    def count(name: str, bad: int):
        failures[name] = failures.get(name, 0) + int(bad)

    # clip algebra
    grads = rng.standard_normal((n_cases, 6)) * rng.pareto(1.2, (n_cases, 1))
    thresholds = rng.uniform(0.0, 3.0, n_cases)
    for u, g in zip(thresholds, grads):
        c = clip(u, g)
        count("clip_bound", np.any(np.abs(c) > u))
        count("clip_sign", np.any(np.sign(c) * np.sign(g) < 0))
        count("clip_idempotent", not np.array_equal(clip(u, c), c))
        count("clip_l2_bound", np.linalg.norm(clip(u, g, ClipMode.L2)) > u * (1 + 1e-12))
    count("clip_infinite", not np.array_equal(clip(math.inf, grads), grads))

    # schedule monotonicity and floor
    t = rng.integers(1, 10_000, n_cases)
    decaying = PowerSchedule(base=2.0, exponent=-0.5, floor=0.01)
    values = np.array([decaying.value(int(s)) for s in t])
    count("schedule_floor", np.any(values < 0.01))
    order = np.argsort(t)
    count("schedule_monotone", np.any(np.diff(values[order]) > 0))

    # run-level invariants in both asynchronous modes
    for mode in (Mode.SERVER_CENTRIC, Mode.CLIENT_CENTRIC):
        cfg = RunConfig(
            problem=ProblemSpec(ProblemKind.QUADRATIC_DIAG, 6),
            noise=NoiseSpec(NoiseKind.PARETO, 1.5, dim=6),
            mode=mode,
            n_clients=12,
            buffer_size=3,
            local_steps=2,
            rounds=300,
            policy=PolicyKind.CLIP2,
            schedules=schedules(eta_outer=0.8, u_outer=0.5),
            clients=client_mix("large", 12),
        )
        steps = []
        first = run_simulation(cfg, on_round=lambda _, step, __: steps.append(step))
        second = run_simulation(cfg)
        records = first.records
        gns = np.array([r.grad_norm_sq for r in records])
        best = np.array([r.min_grad_norm_sq for r in records])
        clocks = np.array([r.clock for r in records])

        count(f"{mode.value}_deterministic", metrics_csv(records) != metrics_csv(second.records))
        count(f"{mode.value}_conservation", not first.counters.conserved)
        count(f"{mode.value}_in_flight", first.counters.in_flight > cfg.n_clients)
        count(f"{mode.value}_staleness_floor", any(p < 1 for r in records for p in r.delays))
        count(f"{mode.value}_running_min", not np.array_equal(best, np.minimum.accumulate(gns)))
        count(f"{mode.value}_clock", np.any(np.diff(clocks) < 0))
        count(f"{mode.value}_rows", len(records) != cfg.rounds)
        over_bound = [np.any(np.abs(s.step) > s.eta * s.u * (1 + 1e-12)) for s in steps]
        count(f"{mode.value}_step_bound", any(over_bound))

    broken = {name: n for name, n in failures.items() if n}
    return {"passed": not broken, "cases": n_cases, "broken": broken or "none"}


CRITERIA: Dict[str, Tuple[str, Callable[[], Dict[str, Any]]]] = {
    "A1": ("server-centric equals synchronous at zero asynchrony", sync_equals_async),
    "A2": ("M=1 server-centric equals client-centric", buffer_one_modes),
    "A3": ("downplaying is a no-op at unit delay", unit_delay_downplaying),
    "A4": ("delay compensation is a no-op at zero staleness", zero_staleness_compensation),
    "A5": ("exact-Hessian delay compensation", exact_hessian_compensation),
    "A6": ("clipping rescues heavy-tailed async SGD", clipping_rescues),
    "A7": ("negative rate slope for SGDClipVanilla", rate_slope_check),
    "A8": ("downplaying is robust to learning rates under extreme delay", downplaying_robustness),
    "A9": ("simulated runtime grows with the buffer size", buffer_ablation),
    "A10": ("invariant suite", invariant_suite),
}


def evaluate(key: str) -> CriterionResult:
    title, check = CRITERIA[key]
    try:
        measured = check()
    except Exception as e:
        logger.error(f"Acceptance criterion {key} raised", exception=e)
        return CriterionResult(key, title, False, error=f"{e.__class__.__name__}: {e}")
    passed = bool(measured.pop("passed"))
    return CriterionResult(key, title, passed, measured)


def run_acceptance(keys: Optional[Sequence[str]] = None) -> List[CriterionResult]:
    keys = list(keys or CRITERIA)
    unknown = [k for k in keys if k not in CRITERIA]
    if unknown:
        raise ValueError(f"unknown acceptance criteria {unknown}, expected some of {list(CRITERIA)}")
    return [evaluate(key) for key in logger.progress(keys, desc="Acceptance", unit="criterion")]


def format_report(results: Sequence[CriterionResult]) -> str:
    lines = [result.line() for result in results]
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} criteria passed")
    return "\n".join(lines)
