"""Deterministic discrete-event message bus with adversary interposition.

Events are delivered in (time, seq) order.  Before delivery each event
passes the jamming model and then every attached adversary hook in
registration order; hooks may observe, drop, modify or inject depending
on their capabilities.  A transcript records every delivery and drop, and
its export hashes identically across runs with the same seed.
"""

from __future__ import annotations

import enum
import hashlib
import heapq
import json
import logging
import os
from dataclasses import dataclass, field

from . import messages
from .randomness import RandomStream, StreamFactory

log = logging.getLogger("fivegsim")


def configure_logging() -> None:
    """Wire FIVEGSIM_LOG={off,info,trace} to stderr diagnostics."""
    level = os.environ.get("FIVEGSIM_LOG", "off").lower()
    mapping = {"off": logging.CRITICAL + 10, "info": logging.INFO, "trace": logging.DEBUG}
    logging.basicConfig(format="%(name)s %(levelname)s %(message)s")
    log.setLevel(mapping.get(level, logging.CRITICAL + 10))


class Channel(enum.Enum):
    RADIO_RRC = "RadioRrc"
    RADIO_NAS = "RadioNas"
    N2 = "N2"
    N3 = "N3"
    SEPP_LINK = "SeppLink"
    SBI = "Sbi"
    INTERNAL = "Internal"  # timers, triggers, administration; never a wire


WIRE_CHANNELS = frozenset(
    {Channel.RADIO_RRC, Channel.RADIO_NAS, Channel.N2, Channel.N3,
     Channel.SEPP_LINK, Channel.SBI}
)
RADIO_CHANNELS = frozenset({Channel.RADIO_RRC, Channel.RADIO_NAS})


class TimeInPast(ValueError):
    """Attempt to schedule an event before the current simulated time."""


@dataclass
class SimEvent:
    time: int
    seq: int
    channel: Channel
    src: str
    dst: str
    payload: bytes
    origin: str = ""  # "entity:<id>", "adversary:<id>" or "world"


@dataclass
class Annotations:
    observed: bool = False
    modified: bool = False
    injected: bool = False
    dropped: bool = False


@dataclass
class TranscriptEntry:
    event: SimEvent
    msg_type: str
    annotations: Annotations

    def export(self) -> dict:
        # 'observed' is adversary-private: a purely passive adversary must
        # leave the exported transcript byte-identical to an unobserved run.
        return {
            "time": self.event.time,
            "seq": self.event.seq,
            "channel": self.event.channel.value,
            "src": self.event.src,
            "dst": self.event.dst,
            "msg": self.msg_type,
            "payload": self.event.payload.hex(),
            "origin": self.event.origin,
            "modified": self.annotations.modified,
            "injected": self.annotations.injected,
            "dropped": self.annotations.dropped,
        }


class Transcript:
    """Append-only record of every delivered or dropped event."""

    def __init__(self):
        self.entries: list[TranscriptEntry] = []

    def append(self, event: SimEvent, annotations: Annotations) -> None:
        try:
            msg_type = messages.peek_type(event.payload)
        except Exception:
            msg_type = "?"
        self.entries.append(TranscriptEntry(event, msg_type, annotations))

    def to_jsonl(self) -> str:
        return "\n".join(
            json.dumps(entry.export(), sort_keys=True) for entry in self.entries
        )

    def sha256(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode()).hexdigest()

    def delivered(self, channels=None):
        for entry in self.entries:
            if entry.annotations.dropped:
                continue
            if channels is None or entry.event.channel in channels:
                yield entry

    def scan_payloads(self, pattern: bytes, channels=None) -> int:
        """Count occurrences of a byte pattern across delivered payloads."""
        total = 0
        for entry in self.delivered(channels):
            total += entry.event.payload.count(pattern)
        return total


class Capability(enum.Enum):
    OBSERVE = "Observe"
    DROP = "Drop"
    INJECT = "Inject"
    MODIFY = "Modify"
    IMPERSONATE = "Impersonate"


class Knowledge:
    """What an adversary has seen and which secrets it was granted."""

    def __init__(self):
        self.seen: list[tuple[str, bytes, int]] = []  # (channel, payload, time)
        self.keys: dict[str, object] = {}

    def see(self, channel: Channel, payload: bytes, time: int = 0) -> None:
        self.seen.append((channel.value, payload, time))

    def grant(self, name: str, value) -> None:
        self.keys[name] = value

    def contains(self, pattern: bytes) -> bool:
        return any(pattern in payload for _, payload, _t in self.seen)

    def payloads(self, channel: Channel | None = None,
                 after: int | None = None) -> list[bytes]:
        return [
            p for name, p, t in self.seen
            if (channel is None or name == channel.value)
            and (after is None or t >= after)
        ]


@dataclass
class Action:
    """What an adversary handler wants done with the current event."""

    drop: bool = False
    replace_payload: bytes | None = None
    inject: list[tuple[int, Channel, str, str, bytes]] = field(default_factory=list)
    # inject items: (delay, channel, src, dst, payload)


@dataclass
class AdversaryHook:
    adversary_id: str
    vantage: frozenset
    capabilities: frozenset
    knowledge: Knowledge = field(default_factory=Knowledge)
    handler: object = None  # callable(world, hook, event) -> Action | None
    cost_note: str = ""  # scenario metadata only

    def can(self, capability: Capability) -> bool:
        return capability in self.capabilities


@dataclass(frozen=True)
class JamWindow:
    target_cell: str
    t_start: int
    t_end: int
    kind: str = "RachLogical"  # or "Physical"
    suppressed: bool = False

    def __post_init__(self):
        if self.t_start >= self.t_end:
            raise ValueError("jam window must have t_start < t_end")
        if self.kind not in ("Physical", "RachLogical"):
            raise ValueError("jam kind is Physical or RachLogical")

    def covers(self, t: int) -> bool:
        return self.t_start <= t < self.t_end


class StepContext:
    """Facade handed to an entity for one transition."""

    def __init__(self, world: "World", entity_id: str):
        self._world = world
        self.entity_id = entity_id
        self.now = world.time
        self.out: list[tuple[int, Channel, str, bytes]] = []
        self.ignored = False

    def emit(self, channel: Channel, dst: str, msg, delay: int = 1) -> None:
        self.out.append((delay, channel, dst, messages.encode(msg)))

    def emit_raw(self, channel: Channel, dst: str, payload: bytes, delay: int = 1) -> None:
        self.out.append((delay, channel, dst, payload))

    def timer(self, delay: int, timer_id: int) -> None:
        self.emit(Channel.INTERNAL, self.entity_id, messages.TimerFired(timer_id=timer_id), delay)

    def rng(self, label: str) -> RandomStream:
        return self._world.streams.stream(f"{self.entity_id}:{label}")

    def ignore(self) -> None:
        self.ignored = True


# Message types whose radio delivery a jammer can suppress (access attempts).
_REGISTRATION_INITIATING = frozenset({"RrcConnectionRequest"})


class World:
    """One simulated deployment: entities, queue, adversaries, transcript."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.streams = StreamFactory(seed)
        self.entities: dict[str, object] = {}
        self.time = 0
        self._seq = 0
        self._queue: list[tuple[int, int, SimEvent]] = []
        self.transcript = Transcript()
        self.adversaries: list[AdversaryHook] = []
        self.jams: list[JamWindow] = []
        self.link_protected: dict[Channel, bool] = {
            Channel.SEPP_LINK: True,
        }
        self._actions: dict[int, object] = {}

    # -- construction ------------------------------------------------------

    def add_entity(self, entity) -> None:
        if entity.entity_id in self.entities:
            raise ValueError(f"duplicate entity id {entity.entity_id}")
        self.entities[entity.entity_id] = entity

    def remove_entity(self, entity_id: str) -> None:
        self.entities.pop(entity_id, None)

    def attach_adversary(self, hook: AdversaryHook) -> str:
        self.adversaries.append(hook)
        return hook.adversary_id

    def apply_jam(self, jam: JamWindow) -> None:
        self.jams.append(jam)

    # -- scheduling --------------------------------------------------------

    def schedule(self, time: int, channel: Channel, src: str, dst: str,
                 payload: bytes, origin: str) -> SimEvent:
        if time < self.time:
            raise TimeInPast(f"cannot schedule at {time}, now is {self.time}")
        event = SimEvent(time=time, seq=self._seq, channel=channel, src=src,
                         dst=dst, payload=payload, origin=origin)
        self._seq += 1
        heapq.heappush(self._queue, (time, event.seq, event))
        return event

    def schedule_message(self, delay: int, channel: Channel, src: str, dst: str,
                         msg, origin: str | None = None) -> SimEvent:
        return self.schedule(self.time + delay, channel, src, dst,
                             messages.encode(msg), origin or f"entity:{src}")

    def schedule_action(self, time: int, label: str, fn) -> None:
        """Run a scripted world mutation at a fixed time (deterministic)."""
        event = self.schedule(time, Channel.INTERNAL, "world", "__world__",
                              messages.encode(messages.WorldAction(label=label)), "world")
        self._actions[event.seq] = fn

    # -- adversary/link visibility ------------------------------------------

    def channel_readable(self, hook: AdversaryHook, channel: Channel) -> bool:
        if channel in RADIO_CHANNELS:
            return True
        if not self.link_protected.get(channel, False):
            return True
        return f"link:{channel.value}" in hook.knowledge.keys

    # -- cells ---------------------------------------------------------------

    def active_cells(self) -> list[messages.CellInfo]:
        cells = []
        for entity_id in sorted(self.entities):
            entity = self.entities[entity_id]
            info = getattr(entity, "broadcast_info", None)
            if callable(info):
                cell = info()
                if cell is not None:
                    cells.append(cell)
        return cells

    # -- main loop -----------------------------------------------------------

    def _jam_applies(self, event: SimEvent) -> bool:
        if event.channel not in RADIO_CHANNELS:
            return False
        try:
            msg_type = messages.peek_type(event.payload)
        except Exception:
            return False
        if msg_type not in _REGISTRATION_INITIATING:
            return False
        target = self.entities.get(event.dst)
        for jam in self.jams:
            if jam.target_cell == event.dst and jam.covers(event.time):
                suppression = (
                    jam.suppressed
                    and target is not None
                    and getattr(target, "jam_suppression_enabled", False)
                )
                if not suppression:
                    return True
        return False

    def run_until(self, t_end: int) -> Transcript:
        while self._queue and self._queue[0][0] <= t_end:
            _, _, event = heapq.heappop(self._queue)
            self.time = event.time
            annotations = Annotations(injected=event.origin.startswith("adversary:"))

            if event.dst == "__world__":
                fn = self._actions.pop(event.seq, None)
                if fn is not None:
                    fn(self)
                self.transcript.append(event, annotations)
                continue

            if self._jam_applies(event):
                annotations.dropped = True
                self.transcript.append(event, annotations)
                continue

            dropped = False
            for hook in self.adversaries:
                if event.channel not in hook.vantage:
                    continue
                if hook.can(Capability.OBSERVE) and self.channel_readable(hook, event.channel):
                    hook.knowledge.see(event.channel, event.payload, event.time)
                    annotations.observed = True
                if hook.handler is None:
                    continue
                action = hook.handler(self, hook, event)
                if action is None:
                    continue
                if action.replace_payload is not None and hook.can(Capability.MODIFY):
                    event.payload = action.replace_payload
                    annotations.modified = True
                if action.inject and hook.can(Capability.INJECT):
                    for delay, channel, src, dst, payload in action.inject:
                        self.schedule(self.time + delay, channel, src, dst,
                                      payload, f"adversary:{hook.adversary_id}")
                if action.drop and hook.can(Capability.DROP):
                    dropped = True
                    break
            if dropped:
                annotations.dropped = True
                self.transcript.append(event, annotations)
                continue

            if event.dst == "__ether__":
                self.transcript.append(event, annotations)
                self.schedule(self.time + 1, Channel.INTERNAL, "__ether__", event.src,
                              messages.encode(messages.CellScanResponse(cells=self.active_cells())),
                              "world")
                continue

            entity = self.entities.get(event.dst)
            self.transcript.append(event, annotations)
            if entity is None:
                continue  # removed or unknown node: explicit no-op
            try:
                msg = messages.decode(event.payload)
            except Exception:
                log.info("undecodable payload for %s ignored", event.dst)
                continue
            ctx = StepContext(self, event.dst)
            entity.step(msg, event, ctx)
            for delay, channel, dst, payload in ctx.out:
                self.schedule(self.time + delay, channel, event.dst, dst,
                              payload, f"entity:{event.dst}")
        self.time = max(self.time, t_end)
        return self.transcript

    def run_to_quiescence(self, t_max: int = 1_000_000) -> Transcript:
        return self.run_until(t_max)
