"""High-level drivers: run a registration to quiescence, push user data,
scan transcripts for identifier leakage."""

from __future__ import annotations

from dataclasses import dataclass

from . import messages
from .entities import Amf, Ue
from .identity import SecurityContext
from .netsim import Channel, RADIO_CHANNELS, Transcript, World

DEFAULT_HORIZON = 20_000


def trigger(world: World, ue_id: str, msg, delay: int = 1) -> None:
    """Schedule an internal control message toward a device."""
    world.schedule(world.time + delay, Channel.INTERNAL, "world", ue_id,
                   messages.encode(msg), "world")


@dataclass
class RegistrationOutcome:
    success: bool
    outcome: str
    ue_context: SecurityContext | None
    amf_context: SecurityContext | None
    transcript: Transcript

    @property
    def failure(self) -> str | None:
        """Coarse failure class: Timeout (loss budget exceeded) or
        AuthFailure (response-hash or home-network check failed)."""
        if self.success:
            return None
        if self.outcome == "timeout":
            return "Timeout"
        if self.outcome.startswith(("auth_rejected", "auth_failure")):
            return "AuthFailure"
        return self.outcome


def find_amf_session(amf: Amf, ue: Ue):
    """The AMF session owning this device's current temporary identity."""
    if ue.guti is not None:
        sid = amf.contexts.get(ue.guti.hex())
        if sid is not None:
            return amf.sessions[sid]
    return None


def run_registration(world: World, ue_id: str, target_cell: str = "",
                     horizon: int = DEFAULT_HORIZON) -> RegistrationOutcome:
    """Trigger one registration and drive the world to quiescence."""
    ue = world.entities[ue_id]
    trigger(world, ue_id, messages.TriggerRegistration(target_cell=target_cell))
    world.run_until(world.time + horizon)
    outcome = ue.last_outcome() or "stalled"
    amf_context = None
    for entity in world.entities.values():
        if isinstance(entity, Amf):
            session = find_amf_session(entity, ue)
            if session is not None:
                amf_context = session.context
                break
    return RegistrationOutcome(
        success=outcome == "registered",
        outcome=outcome,
        ue_context=ue.context,
        amf_context=amf_context,
        transcript=world.transcript,
    )


def establish_user_plane(world: World, ue_id: str,
                         horizon: int = 2_000) -> bool:
    trigger(world, ue_id, messages.TriggerPduSession())
    world.run_until(world.time + horizon)
    return world.entities[ue_id].up_active


def send_app_data(world: World, ue_id: str, payload: bytes,
                  horizon: int = 1_000) -> None:
    trigger(world, ue_id, messages.TriggerAppData(payload=payload))
    world.run_until(world.time + horizon)


def radio_plaintext_count(transcript: Transcript, pattern: bytes) -> int:
    """Occurrences of a byte pattern on the two radio channels."""
    return transcript.scan_payloads(pattern, RADIO_CHANNELS)
