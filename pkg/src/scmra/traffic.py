"""Grant-free traffic simulation: packet arrivals, UE placement, symbol-rate
world stepping, episode execution, and Monte Carlo packet-error estimation."""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import channel as channel_mod
from . import protocol
from .config import SimConfig, db_to_linear
from .linalg import complex_normal, random_unit_vector
from .scm import ScmParameters, bits_to_phases, scm_reflect

# Minimum alignment ||H b|| / ||H||_F for associating a spawned task with a
# UE; rejects noise-triggered tasks whose beamformer points nowhere.
ASSOC_MIN_ALIGNMENT = 0.3

# Episodes are scheduled in fixed-size chunks so stopping decisions (and
# therefore results) do not depend on the worker count.
_EPISODE_CHUNK = 4


@dataclass
class PacketDescriptor:
    """One UE transmission; channel and position are drawn on activation."""

    ue_id: int
    arrival_symbol: int
    bits: np.ndarray
    phases: np.ndarray
    guard_length: int
    position: np.ndarray | None = None
    channel: np.ndarray | None = None
    channel_fro: float = 0.0
    detections: list[int] = field(default_factory=list)
    detection_task_ids: list[int] = field(default_factory=list)

    @property
    def length(self) -> int:
        return len(self.phases)

    @property
    def end_symbol(self) -> int:
        """First symbol index after the packet."""
        return self.arrival_symbol + self.length


@dataclass(frozen=True)
class PacketOutcome:
    ue_id: int
    arrival_symbol: int
    counted: bool
    detected: bool
    setup_symbols: int | None
    n_tasks: int
    fully_decoded: bool
    bit_errors: int
    bits_compared: int


class EventLog:
    """Ordered structured records of one simulation episode."""

    def __init__(self):
        self.records: list[dict] = []

    def append(self, **record) -> None:
        self.records.append(record)

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def of_type(self, event: str) -> list[dict]:
        return [r for r in self.records if r.get("event") == event]


@dataclass
class WorldState:
    """Mutable state of one simulation episode."""

    cfg: SimConfig
    horizon: int
    symbol_index: int
    pending: list[PacketDescriptor]   # arrival-ordered, not yet active
    active: list[PacketDescriptor]
    all_packets: list[PacketDescriptor]
    scout: protocol.ScoutingState
    tasks: list[protocol.CommTaskState]
    finished_tasks: list[protocol.CommTaskState]
    db: protocol.SharedDatabase
    thresholds: protocol.ProtocolThresholds
    scm_params: ScmParameters
    sigma_sq: float
    sigma_w_sq: float
    rng_arrival: np.random.Generator
    rng_channel: np.random.Generator
    rng_noise: np.random.Generator
    rng_protocol: np.random.Generator
    events: EventLog
    next_task_id: int = 0
    scout_gammas: list[float] | None = None


def generate_arrivals(offered_traffic: float, packet_symbols: int,
                      horizon_symbols: int, rng: np.random.Generator) -> np.ndarray:
    """Packet arrival symbol indices within the horizon.

    Inter-arrival times are i.i.d. exponential with mean
    packet_symbols / offered_traffic, quantized to symbol boundaries by
    ceiling (so two packets never share an arrival symbol).
    """
    if offered_traffic <= 0:
        raise ValueError("offered traffic must be positive")
    mean_gap = packet_symbols / offered_traffic
    arrivals = []
    symbol = 0
    while True:
        symbol += math.ceil(rng.exponential(mean_gap))
        if symbol >= horizon_symbols:
            break
        arrivals.append(symbol)
    return np.asarray(arrivals, dtype=int)


def place_ue(rng: np.random.Generator,
             center_m=(0.0, 0.0, 10.0), size_m=(10.0, 10.0)) -> np.ndarray:
    """Uniform UE position over the rectangle centered at `center_m`."""
    cx, cy, cz = center_m
    sx, sy = size_m
    return np.array([cx + rng.uniform(-sx / 2.0, sx / 2.0),
                     cy + rng.uniform(-sy / 2.0, sy / 2.0),
                     cz])


def synthetic_round_trip_eigenvalues(cfg: SimConfig) -> np.ndarray:
    """Eigenvalues of A that realize cfg.synthetic_snr_max_db at scouting power."""
    snr = np.array([db_to_linear(s) for s in cfg.synthetic_snr_max_db])
    return np.sqrt(snr * cfg.sigma_sq_w / cfg.scout_power_w)


def draw_channel(cfg: SimConfig, position, rng: np.random.Generator) -> np.ndarray:
    """Per-packet channel matrix H according to the configured channel type."""
    if cfg.channel_type == "synthetic-rank":
        return channel_mod.synthetic_channel_matrix(
            cfg.m_scm, cfg.n_bs, synthetic_round_trip_eigenvalues(cfg),
            cfg.scm_gain, rng)
    bs_geom = cfg.bs_geometry()
    scm_geom = cfg.scm_geometry(tuple(position))
    if cfg.channel_type == "los-free-space":
        return channel_mod.los_channel(bs_geom, scm_geom, cfg.wavelength_m,
                                       cfg.bs_element_gain, cfg.scm_element_gain)
    return channel_mod.nlos_multipath_channel(
        bs_geom, scm_geom, cfg.wavelength_m, cfg.cluster_count,
        cfg.delay_spread_s, cfg.pathloss_exponent, rng,
        cfg.bs_element_gain, cfg.scm_element_gain)


def make_world(cfg: SimConfig, episode_index: int = 0,
               horizon: int | None = None) -> WorldState:
    """Build an episode world with independent seeded RNG streams."""
    horizon = cfg.horizon_symbols if horizon is None else horizon
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(episode_index,))
    rng_arrival, rng_channel, rng_noise, rng_protocol = (
        np.random.default_rng(child) for child in ss.spawn(4))

    arrivals = generate_arrivals(cfg.offered_traffic, cfg.packet_symbols,
                                 horizon, rng_arrival)
    packets = []
    for ue_id, arrival in enumerate(arrivals):
        bits = rng_arrival.integers(0, 2, size=cfg.payload_symbols)
        packets.append(PacketDescriptor(
            ue_id=ue_id, arrival_symbol=int(arrival), bits=bits,
            phases=bits_to_phases(bits, cfg.guard_symbols),
            guard_length=cfg.guard_symbols))

    sigma_eta = 0.0 if cfg.disable_noise else cfg.sigma_eta_sq_w
    world = WorldState(
        cfg=cfg, horizon=horizon, symbol_index=0,
        pending=list(packets), active=[], all_packets=packets,
        scout=protocol.ScoutingState(random_unit_vector(rng_protocol, cfg.n_bs)),
        tasks=[], finished_tasks=[],
        db=protocol.SharedDatabase(cfg.n_bs),
        thresholds=protocol.ProtocolThresholds.from_config(cfg),
        scm_params=ScmParameters(cfg.scm_gain, sigma_eta, cfg.m_scm),
        sigma_sq=cfg.sigma_sq_w, sigma_w_sq=cfg.sigma_w_sq_w,
        rng_arrival=rng_arrival, rng_channel=rng_channel,
        rng_noise=rng_noise, rng_protocol=rng_protocol,
        events=EventLog(),
        scout_gammas=[] if cfg.record_traces else None,
    )
    return world


def _activate_arrivals(world: WorldState) -> None:
    k = world.symbol_index
    while world.pending and world.pending[0].arrival_symbol == k:
        pkt = world.pending.pop(0)
        if pkt.channel is None:  # fixtures may inject a hand-built channel
            pkt.position = place_ue(world.rng_channel,
                                    world.cfg.ue_area_center_m,
                                    world.cfg.ue_area_size_m)
            pkt.channel = draw_channel(world.cfg, pkt.position, world.rng_channel)
            pkt.channel_fro = float(np.linalg.norm(pkt.channel))
        world.active.append(pkt)
        pos = None if pkt.position is None else [float(v) for v in pkt.position]
        world.events.append(event="arrival", symbol=k, ue_id=pkt.ue_id,
                            position=pos, payload_bits=int(pkt.bits.size))


def _associate_task(b: np.ndarray, active_packets) -> PacketDescriptor | None:
    """Ground-truth task-to-UE association by channel alignment (simulator
    bookkeeping only; the protocol itself never sees UE identities)."""
    best = None
    best_score = 0.0
    for pkt in active_packets:
        score = float(np.linalg.norm(pkt.channel @ b)) / pkt.channel_fro
        if score > best_score:
            best, best_score = pkt, score
    if best is not None and best_score >= ASSOC_MIN_ALIGNMENT:
        return best
    return None


def symbol_step(world: WorldState, cfg: SimConfig | None = None) -> WorldState:
    """Advance the world by one symbol interval.

    Sequence: compose the transmit vector, bounce it off every active SCM,
    aggregate at the BS with receiver noise, run the scouting update and
    detection rule (possibly spawning a task), then run every task's
    correlation/demodulation/drop processing, and finally retire packets
    whose last symbol elapsed.
    """
    cfg = world.cfg if cfg is None else cfg
    k = world.symbol_index
    _activate_arrivals(world)

    scout = world.scout
    if scout.needs_reinit:
        basis = world.db.matrix
        scout = protocol.ScoutingState(
            random_unit_vector(world.rng_protocol, cfg.n_bs,
                               () if basis is None else basis))
        world.scout = scout

    x = protocol.compose_transmit(scout, world.tasks, world.thresholds,
                                  beam_sum=world.db.beam_sum)

    y = np.zeros(cfg.n_bs, dtype=np.complex128)
    for pkt in world.active:
        z = pkt.channel @ x
        r = scm_reflect(z, pkt.phases[k - pkt.arrival_symbol],
                        world.scm_params, world.rng_noise)
        y += pkt.channel.T @ r
    if not cfg.disable_noise:
        y += complex_normal(world.rng_noise, cfg.n_bs, world.sigma_w_sq)

    # Scouting first: detection may add a database entry; existing tasks then
    # process the same received vector with their frozen beamformers.
    gamma_prev = scout.gamma_prev
    scout, gamma = protocol.scouting_update(scout, y, world.db, world.sigma_sq)
    world.scout = scout
    if world.scout_gammas is not None:
        world.scout_gammas.append(gamma)

    if protocol.detection_rule(gamma, gamma_prev, world.thresholds):
        if len(world.db) >= world.db.capacity:
            world.events.append(event="detection_skipped", symbol=k,
                                reason="subspace exhausted")
        else:
            task_id = world.next_task_id
            world.next_task_id += 1
            stored = world.db.add(scout.x0, task_id)
            task = protocol.CommTaskState(
                task_id=task_id, b=stored, start_symbol=k + 1,
                gamma_trace=[] if cfg.record_traces else None)
            pkt = _associate_task(stored, world.active)
            if pkt is not None:
                task.ue_id = pkt.ue_id
                pkt.detections.append(k)
                pkt.detection_task_ids.append(task_id)
            world.tasks.append(task)
            world.events.append(
                event="detection", symbol=k, task_id=task_id,
                ue_id=task.ue_id, gamma_db=_db_or_none(gamma))
            world.scout = protocol.ScoutingState(scout.x0, None, True)

    dropped = False
    if world.tasks:
        # task list and database stay insertion-aligned, so one matrix-vector
        # product yields every task's decision variable b^H conj(y)
        u_all = np.conj(world.db.matrix.T @ y)
        for idx, task in enumerate(world.tasks):
            if task.start_symbol > k:
                continue
            u = complex(u_all[idx])
            task.decoded_bits.append(protocol.bpsk_demodulate(u))
            task.gamma = abs(u) ** 2 / world.sigma_sq
            if task.gamma_trace is not None:
                task.gamma_trace.append(task.gamma)
            if protocol.drop_rule(u, world.sigma_sq, world.thresholds):
                world.db.remove(task.task_id)
                task.active = False
                dropped = True
                world.events.append(event="drop", symbol=k, task_id=task.task_id)
    if dropped:
        world.finished_tasks.extend(t for t in world.tasks if not t.active)
        world.tasks = [t for t in world.tasks if t.active]
        world.scout = protocol.ScoutingState(world.scout.x0, None, True)

    still_active = []
    for pkt in world.active:
        if k + 1 >= pkt.end_symbol:
            pkt.channel = None  # free the channel matrix
        else:
            still_active.append(pkt)
    world.active = still_active

    world.symbol_index = k + 1
    return world


def _db_or_none(gamma: float) -> float | None:
    return None if gamma <= 0 else float(10.0 * math.log10(gamma))


def run_world(cfg: SimConfig, episode_index: int = 0,
              horizon: int | None = None) -> WorldState:
    """Run a full episode and return the final world state."""
    world = make_world(cfg, episode_index, horizon)
    for _ in range(world.horizon):
        symbol_step(world)
    world.finished_tasks.extend(world.tasks)
    for task in world.tasks:
        task.active = False
    world.tasks = []
    return world


def _task_packet_comparison(task: protocol.CommTaskState,
                            pkt: PacketDescriptor) -> tuple[bool, int, int]:
    """Compare a task's decoded bits to the packet payload over their overlap.

    Returns (covered_through_end, bit_errors, bits_compared).
    """
    payload_start = pkt.arrival_symbol + pkt.guard_length
    end = pkt.end_symbol
    cmp_start = max(task.start_symbol, payload_start)
    decoded_end = task.start_symbol + len(task.decoded_bits)
    covered = decoded_end >= end
    stop = min(end, decoded_end)
    if cmp_start >= stop:
        return covered, 0, 0
    tx = pkt.bits[cmp_start - payload_start:stop - payload_start]
    rx = np.asarray(task.decoded_bits[cmp_start - task.start_symbol:
                                      stop - task.start_symbol])
    n_err = int(np.sum(tx != rx))
    return covered, n_err, int(tx.size)


def packet_outcomes(world: WorldState) -> list[PacketOutcome]:
    """Per-packet detection/decoding outcomes for one finished episode."""
    cfg = world.cfg
    tasks_by_ue: dict[int, list[protocol.CommTaskState]] = {}
    for task in world.finished_tasks:
        if task.ue_id is not None:
            tasks_by_ue.setdefault(task.ue_id, []).append(task)

    outcomes = []
    for pkt in world.all_packets:
        counted = (pkt.arrival_symbol >= cfg.warmup_symbols
                   and pkt.end_symbol <= world.horizon)
        detected = bool(pkt.detections)
        setup = pkt.detections[0] - pkt.arrival_symbol if detected else None
        fully = False
        best_err, best_cmp = 0, 0
        for task in tasks_by_ue.get(pkt.ue_id, []):
            covered, n_err, n_cmp = _task_packet_comparison(task, pkt)
            if covered and n_cmp > 0 and n_err == 0:
                fully = True
            if n_cmp > best_cmp or (n_cmp == best_cmp and n_err < best_err):
                best_err, best_cmp = n_err, n_cmp
        outcomes.append(PacketOutcome(
            ue_id=pkt.ue_id, arrival_symbol=pkt.arrival_symbol,
            counted=counted, detected=detected, setup_symbols=setup,
            n_tasks=len(pkt.detection_task_ids), fully_decoded=fully,
            bit_errors=best_err, bits_compared=best_cmp))
    return outcomes


def finalize_events(world: WorldState,
                    outcomes: list[PacketOutcome] | None = None) -> EventLog:
    """Append task summaries, the scouting trace, and per-packet results to a
    finished world's event log."""
    log = world.events
    for task in sorted(world.finished_tasks, key=lambda t: t.task_id):
        record = dict(event="task_summary", task_id=task.task_id,
                      ue_id=task.ue_id, start_symbol=task.start_symbol,
                      end_symbol=task.start_symbol + len(task.decoded_bits),
                      bits="".join(str(b) for b in task.decoded_bits))
        if task.gamma_trace is not None:
            record["gamma_trace_db"] = [_db_or_none(g) for g in task.gamma_trace]
        log.records.append(record)
    if world.scout_gammas is not None:
        log.records.append(dict(event="scout_gamma_trace",
                                gamma_db=[_db_or_none(g) for g in world.scout_gammas]))
    if outcomes is None:
        outcomes = packet_outcomes(world)
    for o in outcomes:
        log.records.append(dict(
            event="packet_result", ue_id=o.ue_id,
            arrival_symbol=o.arrival_symbol, counted=o.counted,
            detected=o.detected, setup_symbols=o.setup_symbols,
            n_tasks=o.n_tasks, fully_decoded=o.fully_decoded,
            bit_errors=o.bit_errors, bits_compared=o.bits_compared))
    return log


def run_episode(cfg: SimConfig, episode_index: int = 0) -> EventLog:
    """Run one episode and return its event log, including per-packet results
    and per-task summaries."""
    return finalize_events(run_world(cfg, episode_index))


# ----------------------------------------------------------------------
# Monte Carlo packet-error estimation
# ----------------------------------------------------------------------

def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson 95% (by default) confidence interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1.0 + z ** 2 / trials
    center = (p + z ** 2 / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / trials + z ** 2 / (4 * trials ** 2))
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class PerEstimate:
    """Monte Carlo packet-error-rate estimate at one offered load."""

    offered_traffic: float
    n_packets: int
    n_detected: int
    n_errors: int
    per: float
    ci_low: float
    ci_high: float
    n_episodes: int
    setup_symbols: tuple[int, ...]
    fully_decoded_rate: float

    @property
    def setup_median(self) -> float | None:
        if not self.setup_symbols:
            return None
        return float(np.median(self.setup_symbols))

    def setup_cdf_at(self, symbols: int) -> float | None:
        if not self.setup_symbols:
            return None
        arr = np.asarray(self.setup_symbols)
        return float(np.mean(arr <= symbols))


def _episode_outcomes(args: tuple[SimConfig, int]) -> list[PacketOutcome]:
    cfg, episode_index = args
    world = run_world(cfg, episode_index, horizon=cfg.episode_symbols)
    return [o for o in packet_outcomes(world) if o.counted]


def monte_carlo_per(cfg: SimConfig, min_errors: int | None = None,
                    max_packets: int | None = None,
                    min_detected: int | None = None,
                    workers: int = 1) -> PerEstimate:
    """Estimate the packet error rate (1 - detection probability) at the
    configured offered traffic.

    Episodes of cfg.episode_symbols symbols run (optionally across worker
    processes) until at least `min_errors` packet errors have been counted,
    `min_detected` detections collected (when given), or `max_packets`
    counted packets simulated. Results are independent of the worker count.
    """
    cfg = dataclasses.replace(cfg, record_traces=False)
    if min_errors is None:
        min_errors = cfg.min_packet_errors
    if max_packets is None:
        max_packets = cfg.max_packets_per_point

    n_packets = n_detected = n_errors = n_fully = 0
    setups: list[int] = []
    next_index = 0
    n_episodes = 0

    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        done = False
        while not done:
            chunk = [(cfg, next_index + i) for i in range(_EPISODE_CHUNK)]
            next_index += _EPISODE_CHUNK
            if pool is not None:
                results = list(pool.map(_episode_outcomes, chunk))
            else:
                results = [_episode_outcomes(job) for job in chunk]
            for outcomes in results:
                n_episodes += 1
                for o in outcomes:
                    n_packets += 1
                    if o.detected:
                        n_detected += 1
                        setups.append(o.setup_symbols)
                    else:
                        n_errors += 1
                    if o.fully_decoded:
                        n_fully += 1
                if ((n_errors >= min_errors)
                        or (min_detected is not None and n_detected >= min_detected)
                        or n_packets >= max_packets):
                    done = True
                    break
    finally:
        if pool is not None:
            pool.shutdown()

    ci_low, ci_high = wilson_interval(n_errors, n_packets)
    per = n_errors / n_packets if n_packets else 0.0
    fully_rate = n_fully / n_packets if n_packets else 0.0
    return PerEstimate(
        offered_traffic=cfg.offered_traffic, n_packets=n_packets,
        n_detected=n_detected, n_errors=n_errors, per=per,
        ci_low=ci_low, ci_high=ci_high, n_episodes=n_episodes,
        setup_symbols=tuple(setups), fully_decoded_rate=fully_rate)
