"""Sender side: threat quantisation and alert messages."""

from __future__ import annotations

import logging
from typing import Callable, Optional

from models import AlertMessage, NodeId, ThreatLevel, TrustRecord, TrustState
from trust_engine import TrustTable

logger = logging.getLogger(__name__)

DetailFn = Callable[[TrustRecord], bytes]


def assign_threat_level(t_mal: int, g: int, k: int = 3) -> ThreatLevel:
    """Quantise a malicious node's trust into one of k threat bands.

    The untrustworthy zone [0, 50 - g) is split into k equal bands; the
    lowest band is H_k. A trust value on a band edge belongs to the band
    above it (lower threat).
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ceiling = 50 - g
    if t_mal < 0:
        raise ValueError(f"trust must be non-negative, got {t_mal}")
    if t_mal >= ceiling:
        raise ValueError(f"trust {t_mal} is outside the untrustworthy zone [0, {ceiling})")
    index = k - (t_mal * k) // ceiling
    return ThreatLevel(index=index, k=k)


def build_alert(
    sender: NodeId,
    accused: NodeId,
    level: ThreatLevel,
    detail: bytes = b"",
) -> AlertMessage:
    return AlertMessage(sender=sender, accused=accused, level=level, detail=bytes(detail))


def default_detail(record: TrustRecord) -> bytes:
    s, u = record.window_counts
    return f"T={record.trust};S={s};U={u}".encode("ascii")


def detect_and_alert(
    table: TrustTable,
    k: int = 3,
    detail_fn: Optional[DetailFn] = None,
) -> list[AlertMessage]:
    """Alerts for every record that turned Untrustworthy at the last scoring."""
    detail_fn = detail_fn or default_detail
    alerts = []
    for subject in sorted(table.records):
        rec = table.records[subject]
        if rec.state is not TrustState.UNTRUSTWORTHY:
            continue
        if rec.previous_state is TrustState.UNTRUSTWORTHY or subject in table.malicious:
            continue
        level = assign_threat_level(rec.trust, table.boundaries.g, k)
        alerts.append(build_alert(table.owner, subject, level, detail_fn(rec)))
        logger.debug("n%s raises %s alert on n%s (T=%s)", table.owner, level.label, subject, rec.trust)
    return alerts


def encode_alert(alert: AlertMessage) -> tuple[int, int, int, int, bytes]:
    """Wire form: (sender, accused, level index, detail length, detail)."""
    return (alert.sender, alert.accused, alert.level.index, len(alert.detail), alert.detail)


def decode_alert(wire: tuple[int, int, int, int, bytes], k: int = 3) -> AlertMessage:
    if len(wire) != 5:
        raise ValueError(f"alert wire tuple must have 5 fields, got {len(wire)}")
    sender, accused, index, length, detail = wire
    if length != len(detail):
        raise ValueError(f"detail length field {length} does not match payload of {len(detail)} bytes")
    return build_alert(int(sender), int(accused), ThreatLevel(int(index), k), bytes(detail))


def alert_log_row(tick: int, alert: AlertMessage) -> dict:
    return {
        "tick": tick,
        "sender": alert.sender,
        "accused": alert.accused,
        "level": alert.level.index,
        "detail_hex": alert.detail.hex(),
    }
