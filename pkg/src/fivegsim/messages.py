"""Wire messages and their canonical binary codec.

Every message carried on a simulated channel is a registered dataclass.
The encoding is length-prefixed and canonical: a 2-byte type tag followed
by the fields in declaration order (ints as 8-byte big-endian, byte
strings and text length-prefixed, lists counted).  Transcripts mirror the
same bytes as hex, so byte-level scans of a transcript see exactly what
an on-path observer sees.
"""

from __future__ import annotations

import typing
from dataclasses import dataclass, fields

_REGISTRY: list[type] = []
_BY_NAME: dict[str, type] = {}


def wire(cls):
    """Register a dataclass as a wire message/struct."""
    cls = dataclass(cls)
    _REGISTRY.append(cls)
    _BY_NAME[cls.__name__] = cls
    return cls


def _tag(cls) -> int:
    return _REGISTRY.index(cls)


def _encode_value(value, ftype) -> bytes:
    origin = typing.get_origin(ftype)
    if origin is list:
        (inner,) = typing.get_args(ftype)
        out = len(value).to_bytes(2, "big")
        for item in value:
            out += _encode_value(item, inner)
        return out
    if ftype is int:
        return int(value).to_bytes(8, "big", signed=True)
    if ftype is bool:
        return b"\x01" if value else b"\x00"
    if ftype is bytes:
        return len(value).to_bytes(4, "big") + value
    if ftype is str:
        raw = value.encode("utf-8")
        return len(raw).to_bytes(4, "big") + raw
    if ftype in _REGISTRY:
        body = _encode_body(value)
        return len(body).to_bytes(4, "big") + body
    raise TypeError(f"unsupported wire field type {ftype!r}")


def _decode_value(data: bytes, pos: int, ftype):
    origin = typing.get_origin(ftype)
    if origin is list:
        (inner,) = typing.get_args(ftype)
        count = int.from_bytes(data[pos:pos + 2], "big")
        pos += 2
        items = []
        for _ in range(count):
            item, pos = _decode_value(data, pos, inner)
            items.append(item)
        return items, pos
    if ftype is int:
        return int.from_bytes(data[pos:pos + 8], "big", signed=True), pos + 8
    if ftype is bool:
        return data[pos] == 1, pos + 1
    if ftype is bytes:
        n = int.from_bytes(data[pos:pos + 4], "big")
        pos += 4
        return data[pos:pos + n], pos + n
    if ftype is str:
        n = int.from_bytes(data[pos:pos + 4], "big")
        pos += 4
        return data[pos:pos + n].decode("utf-8"), pos + n
    if ftype in _REGISTRY:
        n = int.from_bytes(data[pos:pos + 4], "big")
        pos += 4
        return _decode_body(ftype, data[pos:pos + n]), pos + n
    raise TypeError(f"unsupported wire field type {ftype!r}")


def _field_types(cls) -> list[tuple[str, object]]:
    hints = typing.get_type_hints(cls)
    return [(f.name, hints[f.name]) for f in fields(cls)]


def _encode_body(msg) -> bytes:
    out = b""
    for name, ftype in _field_types(type(msg)):
        out += _encode_value(getattr(msg, name), ftype)
    return out


def _decode_body(cls, data: bytes):
    pos = 0
    values = {}
    for name, ftype in _field_types(cls):
        values[name], pos = _decode_value(data, pos, ftype)
    if pos != len(data):
        raise ValueError(f"trailing bytes decoding {cls.__name__}")
    return cls(**values)


def encode(msg) -> bytes:
    """Length-prefixed canonical encoding of a registered message."""
    body = _tag(type(msg)).to_bytes(2, "big") + _encode_body(msg)
    return len(body).to_bytes(4, "big") + body


def decode(data: bytes):
    total = int.from_bytes(data[:4], "big")
    if total != len(data) - 4:
        raise ValueError("bad message framing")
    cls = _REGISTRY[int.from_bytes(data[4:6], "big")]
    return _decode_body(cls, data[6:])


def peek_type(data: bytes) -> str:
    """Message type name without a full decode."""
    return _REGISTRY[int.from_bytes(data[4:6], "big")].__name__


# ---------------------------------------------------------------------------
# Radio control plane (RRC)
# ---------------------------------------------------------------------------


@wire
class RrcConnectionRequest:
    c_rnti: bytes
    slice_id: str
    ue_nonce: bytes


@wire
class RrcConnectionSetup:
    c_rnti: bytes
    ran_ue_id: int


@wire
class RrcConnectionReject:
    cause: str


@wire
class AsSecurityModeCommand:
    nea_id: int
    nia_id: int


@wire
class AsSecurityModeComplete:
    pass


@wire
class SecuredRrc:
    """Integrity/ciphering wrapper for RRC signaling after AS security."""

    count: int
    direction: int
    nea_id: int
    nia_id: int
    mac_tag: bytes
    body: bytes


@wire
class SecuredUp:
    """User-plane radio packet protected with the UP keys."""

    count: int
    direction: int
    nea_id: int
    nia_id: int
    mac_tag: bytes
    body: bytes


@wire
class AppData:
    payload: bytes


# ---------------------------------------------------------------------------
# NAS (UE <-> core control plane)
# ---------------------------------------------------------------------------


@wire
class RegistrationRequest:
    suci: bytes
    slice_id: str
    ue_nonce: bytes


@wire
class AttachRequest4G:
    """Legacy attach used in non-standalone mode: identity in clear."""

    imsi: str
    slice_id: str
    ue_nonce: bytes


@wire
class RegistrationReject:
    cause: int
    signature: bytes  # empty = unsigned


@wire
class AuthenticationRequest:
    rand: bytes
    autn: bytes
    ngksi: int
    abba: bytes


@wire
class AuthenticationResponse:
    res: bytes


@wire
class AuthenticationFailure:
    cause: str


@wire
class AuthenticationReject:
    pass


@wire
class NasSecurityModeCommand:
    nea_id: int
    nia_id: int
    ngksi: int
    request_pei: bool


@wire
class NasSecurityModeComplete:
    pei: str


@wire
class RegistrationAccept:
    guti: bytes


@wire
class PduSessionRequest:
    slice_id: str


@wire
class PduSessionAccept:
    up_ciphering: bool
    up_integrity: bool


@wire
class SecuredNas:
    """Integrity/ciphering wrapper for NAS messages after security mode setup."""

    count: int
    direction: int
    nea_id: int
    nia_id: int
    mac_tag: bytes
    body: bytes


# ---------------------------------------------------------------------------
# N2 / N3 (RAN <-> core)
# ---------------------------------------------------------------------------


@wire
class InitialUeMessage:
    ran_ue_id: int
    cell_id: str
    plmn: str
    ue_radio_ref: str
    nas: bytes


@wire
class UplinkNas:
    ran_ue_id: int
    nas: bytes


@wire
class DownlinkNas:
    ran_ue_id: int
    nas: bytes


@wire
class InitialContextSetupRequest:
    ran_ue_id: int
    ue_radio_ref: str
    k_gnb: bytes
    nea_id: int
    nia_id: int


@wire
class InitialContextSetupResponse:
    ran_ue_id: int


@wire
class UeContextActive:
    ran_ue_id: int


@wire
class PduResourceSetup:
    ran_ue_id: int
    up_ciphering: bool
    up_integrity: bool


@wire
class GtpData:
    teid: int
    payload: bytes


# ---------------------------------------------------------------------------
# Service-based interfaces (core <-> core)
# ---------------------------------------------------------------------------


@wire
class AuthRequestSbi:
    session: str
    suci: bytes
    serving_network_name: str


@wire
class AuthResponseSbi:
    session: str
    rand: bytes
    autn: bytes
    hxres: bytes
    k_seaf: bytes


@wire
class AuthRejectSbi:
    session: str
    cause: str


@wire
class UdmAuthRequest:
    session: str
    suci: bytes
    serving_network_name: str


@wire
class UdmAuthResponse:
    session: str
    supi: str
    rand: bytes
    autn: bytes
    xres: bytes
    k_ausf: bytes


@wire
class UdmAuthReject:
    session: str
    cause: str


@wire
class ConfirmRequestSbi:
    session: str
    res: bytes


@wire
class ConfirmResponseSbi:
    session: str
    success: bool
    supi: str


@wire
class SmfSessionRequest:
    session: str
    slice_id: str


@wire
class SmfSessionResponse:
    session: str
    up_ciphering: bool
    up_integrity: bool


@wire
class NfToken:
    consumer_id: str
    service: str
    expiry: int


@wire
class NfTokenRequest:
    consumer_id: str
    producer_service: str


@wire
class NfTokenResponse:
    ok: bool
    token: bytes
    error: str


@wire
class NfServiceRequest:
    consumer_id: str
    service: str
    token: bytes


@wire
class NfServiceResponse:
    ok: bool
    error: str


# ---------------------------------------------------------------------------
# Inter-operator link (SEPP <-> SEPP)
# ---------------------------------------------------------------------------


@wire
class SeppHello:
    plmn: str
    peer_plmn: str
    nonce: bytes
    signature: bytes


@wire
class SeppHelloAck:
    plmn: str
    peer_plmn: str
    echo_nonce: bytes
    signature: bytes


@wire
class SeppReject:
    reason: str


@wire
class SeppForward:
    inner: bytes


# ---------------------------------------------------------------------------
# Internal bus traffic (timers, triggers, administration)
# ---------------------------------------------------------------------------


@wire
class TimerFired:
    timer_id: int


@wire
class TriggerRegistration:
    target_cell: str  # empty = pick by signal strength


@wire
class TriggerPduSession:
    pass


@wire
class TriggerAppData:
    payload: bytes


@wire
class PowerCycle:
    pass


@wire
class CellScanRequest:
    pass


@wire
class CellInfo:
    cell_id: str
    plmn: str
    strength: int
    kind: str
    verification_key: bytes  # empty = none broadcast
    blacklist: list[str]


@wire
class CellScanResponse:
    cells: list[CellInfo]


@wire
class AdminSetActive:
    active: bool


@wire
class AdminSetNetworkName:
    serving_network_name: str


@wire
class WorldAction:
    label: str
