"""Scenario scripts: replay user arrivals, departures and CSI refreshes.

A script is JSON Lines.  An optional first line holds the configuration,
every other non-blank line is one event::

    {"config": {"antennas": 100, "rho_db": 10, "mode": "zf", "seed": 7, "verify_every": 1}}
    {"event": "add", "user": "alice"}
    {"event": "update_csi", "user": "alice"}
    {"event": "remove", "user": "alice"}

See ``docs/scenario-format.md`` for the full field list.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Hashable

import numpy as np

from . import channel as ch
from . import fast_update as fu
from .codec import constellation
from .decoder import DecoderMode, DecoderState, decode_indices, rebuild
from .linalg import relative_error

__all__ = [
    "ORACLE_TOLERANCE",
    "ScenarioError",
    "ScenarioConfig",
    "Event",
    "ScenarioScript",
    "EventRecord",
    "RunReport",
    "parse_script",
    "load_script",
    "validate",
    "run_script",
    "run_scenario",
    "random_script",
    "dump_script",
]

ORACLE_TOLERANCE = 1e-9
EVENT_KINDS = ("add", "remove", "update_csi")


class ScenarioError(ValueError):
    """Invalid script; `index` is the zero-based event index (None for config)."""

    def __init__(self, message: str, index: int | None = None):
        self.index = index
        prefix = f"event {index}: " if index is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class ScenarioConfig:
    antennas: int = 100
    rho_db: float = 10.0
    mode: str = "zf"
    seed: int = 0
    verify_every: int = 1
    refresh_every: int = 64
    beta_policy: str = "ones"
    shadow_db: float = 8.0
    constellation: str = "qpsk"
    probe_blocks: int = 16

    @property
    def rho(self) -> float:
        return ch.db_to_linear(self.rho_db)

    def system(self) -> ch.SystemConfig:
        return ch.SystemConfig(self.antennas, self.rho, self.seed, self.beta_policy, self.shadow_db)

    def decoder_mode(self) -> DecoderMode:
        return DecoderMode(self.mode, self.rho)


@dataclass(frozen=True)
class Event:
    kind: str
    user: Hashable
    beta: float | None = None


@dataclass
class ScenarioScript:
    config: ScenarioConfig = field(default_factory=ScenarioConfig)
    events: list[Event] = field(default_factory=list)


# xxxxxxxxxxxxxxx Parsing / validation xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
_CONFIG_FIELDS = {f.name for f in fields(ScenarioConfig)}


def _parse_config(obj, overrides: dict | None) -> ScenarioConfig:
    if not isinstance(obj, dict):
        raise ScenarioError("config must be an object")
    unknown = set(obj) - _CONFIG_FIELDS
    if unknown:
        raise ScenarioError(f"unknown config fields {sorted(unknown)}")
    merged = {**obj, **{k: v for k, v in (overrides or {}).items() if v is not None}}
    try:
        cfg = ScenarioConfig(**merged)
        cfg.system()
        cfg.decoder_mode()
        constellation(cfg.constellation)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"bad config: {exc}") from None
    if cfg.verify_every < 0 or cfg.refresh_every < 0 or cfg.probe_blocks < 0:
        raise ScenarioError("verify_every, refresh_every and probe_blocks must be >= 0")
    return cfg


def _parse_event(obj, index: int) -> Event:
    if not isinstance(obj, dict) or "event" not in obj:
        raise ScenarioError("expected an object with an 'event' field", index)
    unknown = set(obj) - {"event", "user", "beta"}
    if unknown:
        raise ScenarioError(f"unknown fields {sorted(unknown)}", index)
    kind = obj["event"]
    if kind not in EVENT_KINDS:
        raise ScenarioError(f"unknown event {kind!r}; expected one of {EVENT_KINDS}", index)
    user = obj.get("user")
    if not isinstance(user, (str, int)) or isinstance(user, bool):
        raise ScenarioError("'user' must be a string or integer", index)
    beta = obj.get("beta")
    if beta is not None:
        if kind == "remove":
            raise ScenarioError("'beta' is not allowed on remove", index)
        if not isinstance(beta, (int, float)) or not 0 < beta <= 1:
            raise ScenarioError("'beta' must be a number in (0, 1]", index)
        beta = float(beta)
    return Event(kind, user, beta)


def parse_script(text: str, overrides: dict | None = None) -> ScenarioScript:
    """Parse JSON Lines text; `overrides` replace config fields when not None."""
    config_obj = {}
    events = []
    seen_event = seen_config = False
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"line {lineno}: invalid JSON ({exc.msg})", len(events) if seen_event else None)
        if isinstance(obj, dict) and "config" in obj:
            if seen_event or seen_config:
                raise ScenarioError(f"line {lineno}: config must be the first line")
            config_obj = obj["config"]
            seen_config = True
            if set(obj) != {"config"}:
                raise ScenarioError(f"line {lineno}: config line has extra fields")
            continue
        seen_event = True
        events.append(_parse_event(obj, len(events)))
    script = ScenarioScript(_parse_config(config_obj, overrides), events)
    validate(script)
    return script


def load_script(path, overrides: dict | None = None) -> ScenarioScript:
    return parse_script(Path(path).read_text(), overrides)


def validate(script: ScenarioScript) -> None:
    """Check user references and ZF capacity before anything runs."""
    present = set()
    limit = script.config.antennas // 2 if script.config.mode == "zf" else None
    for i, ev in enumerate(script.events):
        if ev.kind == "add":
            if ev.user in present:
                raise ScenarioError(f"user {ev.user!r} is already present", i)
            present.add(ev.user)
            if limit is not None and len(present) > limit:
                raise ScenarioError(
                    f"ZF with {script.config.antennas} antennas supports at most {limit} users", i
                )
        elif ev.user not in present:
            raise ScenarioError(f"user {ev.user!r} is not present", i)
        elif ev.kind == "remove":
            present.discard(ev.user)


# xxxxxxxxxxxxxxx Replay xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
@dataclass
class EventRecord:
    index: int
    event: str
    user: Hashable
    users_before: int
    users_after: int
    verified: bool = False
    oracle_error: float = math.nan
    decisions_match: bool | None = None
    fast_ns: int = 0
    rebuild_ns: int | None = None

    @property
    def ok(self) -> bool:
        if not self.verified:
            return True
        return self.oracle_error <= ORACLE_TOLERANCE and self.decisions_match is not False


CSV_COLUMNS = (
    "index", "event", "user", "users_before", "users_after",
    "verified", "oracle_error", "decisions_match", "fast_ns", "rebuild_ns",
)
TIMING_COLUMNS = ("fast_ns", "rebuild_ns")


@dataclass
class RunReport:
    records: list[EventRecord] = field(default_factory=list)
    final_users: list = field(default_factory=list)
    final_state: DecoderState | None = None

    @property
    def max_error(self) -> float:
        errs = [r.oracle_error for r in self.records if r.verified]
        return max(errs) if errs else 0.0

    @property
    def mean_speedup(self) -> float:
        ratios = [r.rebuild_ns / r.fast_ns for r in self.records
                  if r.rebuild_ns and r.fast_ns]
        return float(np.mean(ratios)) if ratios else math.nan

    @property
    def failed(self) -> bool:
        return any(not r.ok for r in self.records)

    @property
    def first_failure(self) -> EventRecord | None:
        return next((r for r in self.records if not r.ok), None)

    def to_csv(self, timing: bool = True) -> str:
        cols = [c for c in CSV_COLUMNS if timing or c not in TIMING_COLUMNS]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.records:
            row = {
                "index": r.index,
                "event": r.event,
                "user": r.user,
                "users_before": r.users_before,
                "users_after": r.users_after,
                "verified": int(r.verified),
                "oracle_error": f"{r.oracle_error:.6e}" if r.verified else "",
                "decisions_match": "" if r.decisions_match is None else int(r.decisions_match),
                "fast_ns": r.fast_ns,
                "rebuild_ns": "" if r.rebuild_ns is None else r.rebuild_ns,
            }
            w.writerow([row[c] for c in cols])
        return buf.getvalue()


def _probe_decisions(state: DecoderState, fresh: DecoderState, cfg: ScenarioConfig, index: int) -> bool:
    """Decode identical noisy probe blocks with both states and compare."""
    if state.num_users == 0 or cfg.probe_blocks == 0:
        return True
    cons = constellation(cfg.constellation)
    rng = ch.stream(cfg.seed, ch.SYMBOLS, "probe", index)
    idx = rng.integers(len(cons), size=(4 * state.num_users, cfg.probe_blocks))
    y = ch.received_signal(state.G, cons.points[idx], cfg.rho, ch.noise_stream(cfg.seed, "probe", index))
    return bool(np.array_equal(decode_indices(state, y, cons), decode_indices(fresh, y, cons)))


def run_script(script: ScenarioScript) -> RunReport:
    """Replay events through the fast updates, checking against rebuilds."""
    validate(script)
    cfg = script.config
    system = cfg.system()
    state = DecoderState(cfg.antennas, cfg.decoder_mode(), refresh_every=cfg.refresh_every)
    versions: dict = {}
    report = RunReport()

    def draw(ev: Event) -> ch.UserChannel:
        v = versions.get(ev.user, 0)
        versions[ev.user] = v + 1
        return ch.draw_user_channel(system, ch.channel_stream(cfg.seed, ev.user, v), ev.user, ev.beta)

    for i, ev in enumerate(script.events):
        before = state.num_users
        if ev.kind == "add":
            user = draw(ev)
            t0 = time.perf_counter_ns()
            state = fu.add_user(state, user)
        elif ev.kind == "remove":
            t0 = time.perf_counter_ns()
            state = fu.remove_user(state, ev.user)
        else:
            user = draw(ev)
            t0 = time.perf_counter_ns()
            state = fu.update_csi(state, ev.user, user)
        rec = EventRecord(i, ev.kind, ev.user, before, state.num_users,
                          fast_ns=time.perf_counter_ns() - t0)

        if cfg.verify_every and (i + 1) % cfg.verify_every == 0:
            t0 = time.perf_counter_ns()
            fresh = rebuild(state)
            rec.rebuild_ns = time.perf_counter_ns() - t0
            rec.verified = True
            rec.oracle_error = relative_error(state.Zinv, fresh.Zinv)
            rec.decisions_match = _probe_decisions(state, fresh, cfg, i)
        report.records.append(rec)

    report.final_users = state.user_ids
    report.final_state = state
    return report


def run_scenario(path, out_csv=None, overrides: dict | None = None) -> RunReport:
    """Load, replay and optionally write the per-event CSV."""
    report = run_script(load_script(path, overrides))
    if out_csv is not None:
        Path(out_csv).write_text(report.to_csv())
    return report


# xxxxxxxxxxxxxxx Generation xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def random_script(
    seed: int,
    events: int = 64,
    max_users: int = 30,
    min_users: int = 1,
    config: ScenarioConfig | None = None,
) -> ScenarioScript:
    """Random valid event sequence keeping the population in
    ``[min_users, max_users]`` once `min_users` have arrived."""
    if not 0 <= min_users <= max_users:
        raise ValueError("need 0 <= min_users <= max_users")
    rng = np.random.default_rng(seed)
    present: list[int] = []
    next_id = 0
    out = []
    for _ in range(events):
        m = len(present)
        choices = []
        if m < max_users:
            choices.append("add")
        if m > min_users:
            choices.append("remove")
        if m > 0:
            choices.append("update_csi")
        kind = "add" if m < min_users else choices[rng.integers(len(choices))]
        if kind == "add":
            present.append(next_id)
            out.append(Event("add", next_id))
            next_id += 1
        else:
            user = present[rng.integers(m)]
            if kind == "remove":
                present.remove(user)
            out.append(Event(kind, user))
    return ScenarioScript(config or ScenarioConfig(seed=seed), out)


def dump_script(script: ScenarioScript) -> str:
    """Serialize to the JSON Lines format read by :func:`parse_script`."""
    cfg = {f.name: getattr(script.config, f.name) for f in fields(ScenarioConfig)}
    lines = [json.dumps({"config": cfg})]
    for ev in script.events:
        obj = {"event": ev.kind, "user": ev.user}
        if ev.beta is not None:
            obj["beta"] = ev.beta
        lines.append(json.dumps(obj))
    return "\n".join(lines) + "\n"
