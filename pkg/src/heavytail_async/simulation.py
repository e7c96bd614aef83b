"""
Discrete-event simulation of buffered asynchronous training.

N clients with heterogeneous runtimes feed a server that aggregates every
M updates. Three schedules are simulated:

    Synchronous    every round all clients start from x_{t-1}, the server waits for all of them
    ServerCentric  finished clients idle until the server broadcasts x_t after an aggregation
    ClientCentric  finished clients immediately pull the current model and restart

Job completions are processed in (time, client_id, dispatch_seq) order and
every random draw comes from a stream keyed by (client, dispatch index), so
a (config, seed) pair reproduces a run bit for bit.
"""

import heapq
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Deque, List, Optional, Set, Tuple

import numpy as np

from .aggregator import AggregationStep, ServerState, aggregation_step, apply_step
from .config import Config, config
from .experiment import HessianSource, Mode, RunConfig
from .metrics import MetricsRecord, RunResult, SimulationCounters, measure
from .problems import build_problem
from .runtimes import default_history_capacity
from .utils.logger import logger, timer
from .worker import ClientUpdate, run_local

NOISE_STREAM = 0
RUNTIME_STREAM = 1

Observer = Callable[[ServerState, AggregationStep, ServerState], None]


@dataclass(order=True, frozen=True)
class SimulationEvent:
    time: float
    client_id: int
    dispatch_seq: int
    payload: ClientUpdate = field(compare=False)


class EventQueue:
    """Pending job completions, earliest first."""

    def __init__(self):
        self._heap: List[SimulationEvent] = []

    def push(self, event: SimulationEvent):
        heapq.heappush(self._heap, event)

    def pop(self) -> SimulationEvent:
        return heapq.heappop(self._heap)

    def __len__(self):
        return len(self._heap)


class ClientStreams:
    """
    Independent generators derived from one master seed. The stream of a
    job only depends on (purpose, client_id, dispatch index), never on the
    order in which jobs are simulated.
    """

    def __init__(self, master_seed: int, n_clients: int):
        if n_clients < 1:
            raise ValueError(f"n_clients must be >= 1 (got {n_clients})")
        self.master_seed = master_seed
        self.n_clients = n_clients

    def _generator(self, stream: int, client_id: int, dispatch: int) -> np.random.Generator:
        if not 0 <= client_id < self.n_clients:
            raise ValueError(f"client_id must lie in [0, {self.n_clients}) (got {client_id})")
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(stream, client_id, dispatch))
        return np.random.default_rng(seq)

    def noise(self, client_id: int, dispatch: int) -> np.random.Generator:
        return self._generator(NOISE_STREAM, client_id, dispatch)

    def runtime(self, client_id: int, dispatch: int) -> np.random.Generator:
        return self._generator(RUNTIME_STREAM, client_id, dispatch)


def make_client_rngs(master_seed: int, n_clients: int) -> ClientStreams:
    return ClientStreams(master_seed, n_clients)


class Simulation:
    def __init__(self, cfg: RunConfig, on_round: Optional[Observer] = None, conf: Config = config):
        self.cfg = cfg
        self.on_round = on_round
        self.problem = build_problem(cfg.problem)
        self.schedules = cfg.resolved_schedules()
        self.profiles = cfg.runtime_profiles()
        self.streams = make_client_rngs(cfg.seed, cfg.n_clients)

        capacity = cfg.history_capacity or default_history_capacity(
            self.profiles, cfg.buffer_size, conf.history_factor
        )
        self.state = ServerState.initial(cfg.initial_point(), cfg.aggregation_policy(), capacity)

        self.clock = 0.0
        self.records: List[MetricsRecord] = []
        self.trajectory: List[np.ndarray] = [self.state.x.copy()]
        self.counters = SimulationCounters()
        self._dispatches = [0] * cfg.n_clients

    @property
    def done(self) -> bool:
        return self.state.t >= self.cfg.rounds

    def launch(self, client_id: int, now: float) -> Tuple[ClientUpdate, float]:
        """Run one job of `client_id` on the current model; returns the update and its runtime."""
        cfg = self.cfg
        j = self._dispatches[client_id]
        self._dispatches[client_id] += 1

        update = run_local(
            self.problem,
            cfg.noise,
            self.state.x,
            s=self.state.t,
            K=cfg.local_steps,
            eta_local=self.schedules.eta_local,
            u_local=self.schedules.u_local,
            track_hessian=cfg.uses_hessian,
            rng=self.streams.noise(client_id, j),
            client_id=client_id,
            clip_mode=cfg.clip_mode,
            hessian_oracle=cfg.dc_hessian is HessianSource.ORACLE,
        )
        runtime = self.profiles[client_id].sample(self.streams.runtime(client_id, j))
        update.sim_finish_time = now + runtime
        update.dispatch_seq = j
        self.counters.dispatched += 1
        return update, runtime

    def aggregate(self, updates: List[ClientUpdate], clock: float):
        previous = self.state
        step = aggregation_step(previous, updates)
        self.state = apply_step(previous, step)
        self.clock = clock
        self.counters.consumed += len(updates)

        record = measure(
            self.problem,
            self.state.x,
            self.state.t,
            clock,
            step.delays,
            self.records[-1] if self.records else None,
            self.cfg.policy.value,
            self.cfg.mode.value,
        )
        self.records.append(record)
        self.trajectory.append(self.state.x.copy())
        if self.on_round is not None:
            self.on_round(previous, step, self.state)

    def run(self) -> RunResult:
        if self.cfg.mode is Mode.SYNCHRONOUS:
            self._run_synchronous()
        else:
            self._run_async()
        return RunResult(self.cfg, self.records, np.array(self.trajectory), self.counters)

    def _run_synchronous(self):
        n = self.cfg.n_clients
        while not self.done:
            launched = [self.launch(c, self.clock) for c in range(n)]
            round_time = max(runtime for _, runtime in launched)
            self.aggregate([update for update, _ in launched], self.clock + round_time)

    def _submit(self, events: EventQueue, client_id: int, now: float):
        update, _ = self.launch(client_id, now)
        events.push(SimulationEvent(update.sim_finish_time, client_id, update.dispatch_seq, update))

    def _run_async(self):
        cfg = self.cfg
        server_centric = cfg.mode is Mode.SERVER_CENTRIC
        events = EventQueue()
        arrivals: Deque[ClientUpdate] = deque()
        idle: Set[int] = set()

        for client_id in range(cfg.n_clients):
            self._submit(events, client_id, 0.0)

        while not self.done:
            if len(events) == 0:
                raise RuntimeError(f"no job in flight at round {self.state.t} with {len(arrivals)} queued")
            event = events.pop()
            arrivals.append(event.payload)
            idle.add(event.client_id)

            while len(arrivals) >= cfg.buffer_size and not self.done:
                batch = [arrivals.popleft() for _ in range(cfg.buffer_size)]
                self.aggregate(batch, event.time)
                if server_centric and not self.done:
                    for client_id in sorted(idle):
                        self._submit(events, client_id, event.time)
                    idle.clear()

            if not server_centric and not self.done:
                idle.discard(event.client_id)
                self._submit(events, event.client_id, event.time)

        self.counters.queued = len(arrivals)
        self.counters.in_flight = len(events)


@timer
def run_simulation(cfg: RunConfig, on_round: Optional[Observer] = None, conf: Config = config) -> RunResult:
    """Execute T aggregations of `cfg`; DivergenceError and StalenessOverflowError propagate."""
    logger.debug(
        f"{cfg.name}: {cfg.mode.value} {cfg.policy.value} N={cfg.n_clients} M={cfg.buffer_size} "
        f"K={cfg.local_steps} T={cfg.rounds} seed={cfg.seed}"
    )
    return Simulation(cfg, on_round, conf).run()
