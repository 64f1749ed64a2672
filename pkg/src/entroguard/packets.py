"""Packet ingestion: classic pcap parsing, summary CSV read/write, device mapping.

The canonical interchange format is the summary CSV with header
``timestamp,src_ip,dst_ip,src_port,dst_port,protocol,length,device_id``.
Captures that are not classic pcap (pcapng, radiotap, ...) must be converted
to that CSV by external tooling first.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field
from typing import Iterable, Iterator

# Protocol labels carried by PacketRecord.
PROTOCOLS = frozenset({"ARP", "ICMP", "TCP", "UDP", "DNS", "TLS", "OTHER"})
# Protocols for which src/dst ports must be present.
PORT_PROTOCOLS = frozenset({"TCP", "UDP", "DNS", "TLS"})

UNKNOWN_DEVICE = "unknown"

CSV_HEADER = "timestamp,src_ip,dst_ip,src_port,dst_port,protocol,length,device_id"


class IngestError(Exception):
    """Base class for ingestion failures."""


class BadMagic(IngestError):
    """Input does not start with a classic pcap magic number."""


class Truncated(IngestError):
    """Capture ends before a declared header or payload is complete."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class UnsupportedLinkType(IngestError):
    """Capture link type is not Ethernet."""


class SchemaMismatch(IngestError):
    """Summary CSV header does not match the canonical schema."""


class RowError(IngestError):
    """A summary CSV data row is malformed."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True, slots=True)
class PacketRecord:
    """One observed packet, normalized to the attributes the detectors use.

    ``src_ip``/``dst_ip`` are dotted-quad IPv4 strings, or None when the frame
    carries no IPv4 addresses (e.g. IPv6 classified as OTHER). Ports are
    present exactly for TCP/UDP/DNS/TLS.
    """

    timestamp: float
    src_ip: str | None
    dst_ip: str | None
    src_port: int | None
    dst_port: int | None
    protocol: str
    length: int
    device_id: str

    def __post_init__(self):
        if not (self.timestamp >= 0.0 and self.timestamp == self.timestamp):
            raise ValueError(f"timestamp must be finite and non-negative: {self.timestamp}")
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        has_ports = self.src_port is not None and self.dst_port is not None
        if self.protocol in PORT_PROTOCOLS:
            if not has_ports:
                raise ValueError(f"{self.protocol} record requires both ports")
        elif self.src_port is not None or self.dst_port is not None:
            raise ValueError(f"{self.protocol} record must not carry ports")
        for port in (self.src_port, self.dst_port):
            if port is not None and not 0 <= port <= 65535:
                raise ValueError(f"port out of range: {port}")
        if self.length < 0:
            raise ValueError(f"negative length: {self.length}")


class DeviceMap:
    """Maps observed addresses (IPv4 or MAC strings) to device ids.

    No address may map to two devices; the reverse index is kept so feature
    builders can ask which addresses belong to a device.
    """

    def __init__(self, entries: dict[str, str] | None = None):
        self._by_address: dict[str, str] = {}
        self._addresses: dict[str, set[str]] = {}
        for address, device_id in (entries or {}).items():
            self.add(address, device_id)

    def add(self, address: str, device_id: str) -> None:
        existing = self._by_address.get(address)
        if existing is not None and existing != device_id:
            raise ValueError(f"address {address} already mapped to {existing}")
        self._by_address[address] = device_id
        self._addresses.setdefault(device_id, set()).add(address)

    def lookup(self, address: str | None) -> str | None:
        if address is None:
            return None
        return self._by_address.get(address)

    def addresses_of(self, device_id: str) -> frozenset[str]:
        return frozenset(self._addresses.get(device_id, ()))

    def device_ids(self) -> list[str]:
        return sorted(self._addresses)

    def attribute(self, src_ip: str | None, dst_ip: str | None) -> str:
        """Primary attribution of a packet: source endpoint wins over destination."""
        return self.lookup(src_ip) or self.lookup(dst_ip) or UNKNOWN_DEVICE

    def __len__(self) -> int:
        return len(self._by_address)

    def items(self):
        return self._by_address.items()

    @classmethod
    def from_csv(cls, text: str) -> "DeviceMap":
        """Parse a device map CSV with header ``address,device_id``."""
        reader = csv.reader(io.StringIO(text))
        rows = list(reader)
        if not rows or rows[0] != ["address", "device_id"]:
            raise SchemaMismatch("device map header must be 'address,device_id'")
        dm = cls()
        for i, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != 2:
                raise RowError(f"expected 2 fields, got {len(row)}", i)
            dm.add(row[0], row[1])
        return dm

    def to_csv(self) -> str:
        lines = ["address,device_id"]
        for address in sorted(self._by_address):
            lines.append(f"{address},{self._by_address[address]}")
        return "\n".join(lines) + "\n"


@dataclass
class ParsedCapture:
    """Result of parsing a whole capture: records plus frame accounting."""

    records: list[PacketRecord] = field(default_factory=list)
    skipped_frames: int = 0
    total_frames: int = 0


_PCAP_MAGIC_LE = 0xA1B2C3D4
ETHERTYPE_IPV4 = 0x0800
ETHERTYPE_ARP = 0x0806
ETHERTYPE_IPV6 = 0x86DD
ETHERTYPE_VLAN = 0x8100
LINKTYPE_ETHERNET = 1

IP_PROTO_ICMP = 1
IP_PROTO_TCP = 6
IP_PROTO_UDP = 17


def _ipv4_str(raw: bytes) -> str:
    return ".".join(str(b) for b in raw)


def classify_l4(ip_proto: int, src_port: int | None, dst_port: int | None) -> str:
    """Map an IPv4 payload protocol plus ports to a PacketRecord protocol label.

    DNS is recognized by UDP/TCP port 53 on either side, TLS by TCP port 443.
    """
    if ip_proto == IP_PROTO_ICMP:
        return "ICMP"
    if ip_proto in (IP_PROTO_TCP, IP_PROTO_UDP):
        if 53 in (src_port, dst_port):
            return "DNS"
        if ip_proto == IP_PROTO_TCP:
            if 443 in (src_port, dst_port):
                return "TLS"
            return "TCP"
        return "UDP"
    return "OTHER"


def _parse_frame(frame: bytes, timestamp: float, orig_len: int,
                 device_map: DeviceMap | None) -> PacketRecord | None:
    """Decode one Ethernet frame. Returns None when the frame is not parseable."""
    if len(frame) < 14:
        return None
    ethertype = struct.unpack_from("!H", frame, 12)[0]
    payload_off = 14
    if ethertype == ETHERTYPE_VLAN:
        if len(frame) < 18:
            return None
        ethertype = struct.unpack_from("!H", frame, 16)[0]
        payload_off = 18

    dm = device_map or DeviceMap()

    if ethertype == ETHERTYPE_ARP:
        # sender/target protocol addresses stand in for src/dst.
        if len(frame) < payload_off + 28:
            return None
        arp = frame[payload_off:payload_off + 28]
        src_ip = _ipv4_str(arp[14:18])
        dst_ip = _ipv4_str(arp[24:28])
        return PacketRecord(timestamp, src_ip, dst_ip, None, None, "ARP",
                            orig_len, dm.attribute(src_ip, dst_ip))

    if ethertype == ETHERTYPE_IPV6:
        # IPv4-centric features: keep the frame but without addresses.
        return PacketRecord(timestamp, None, None, None, None, "OTHER",
                            orig_len, UNKNOWN_DEVICE)

    if ethertype != ETHERTYPE_IPV4:
        return None

    if len(frame) < payload_off + 20:
        return None
    ihl = (frame[payload_off] & 0x0F) * 4
    if ihl < 20 or len(frame) < payload_off + ihl:
        return None
    ip_proto = frame[payload_off + 9]
    src_ip = _ipv4_str(frame[payload_off + 12:payload_off + 16])
    dst_ip = _ipv4_str(frame[payload_off + 16:payload_off + 20])

    src_port = dst_port = None
    if ip_proto in (IP_PROTO_TCP, IP_PROTO_UDP):
        l4_off = payload_off + ihl
        if len(frame) < l4_off + 4:
            return None
        src_port, dst_port = struct.unpack_from("!HH", frame, l4_off)

    protocol = classify_l4(ip_proto, src_port, dst_port)
    if protocol not in PORT_PROTOCOLS:
        src_port = dst_port = None
    return PacketRecord(timestamp, src_ip, dst_ip, src_port, dst_port,
                        protocol, orig_len, dm.attribute(src_ip, dst_ip))


def parse_pcap_stream(data: bytes, device_map: DeviceMap | None = None,
                      stats: ParsedCapture | None = None) -> Iterator[PacketRecord]:
    """Yield PacketRecords from a classic pcap byte string.

    Accepts both byte orders of the classic magic 0xa1b2c3d4; the link type
    must be Ethernet. Frames that cannot be decoded are counted in ``stats``
    (when given) and skipped. Raises BadMagic or Truncated (with the failing
    byte offset) on malformed containers.
    """
    if len(data) < 4:
        raise BadMagic("input shorter than a pcap magic number")
    magic_be = struct.unpack_from(">I", data, 0)[0]
    if magic_be == _PCAP_MAGIC_LE:
        endian = ">"
    elif struct.unpack_from("<I", data, 0)[0] == _PCAP_MAGIC_LE:
        endian = "<"
    else:
        raise BadMagic(f"not a classic pcap (magic 0x{magic_be:08x})")
    if len(data) < 24:
        raise Truncated("global header incomplete", len(data))
    linktype = struct.unpack_from(endian + "I", data, 20)[0]
    if linktype != LINKTYPE_ETHERNET:
        raise UnsupportedLinkType(f"link type {linktype}, expected Ethernet (1)")

    offset = 24
    rec_hdr = struct.Struct(endian + "IIII")
    while offset < len(data):
        if offset + 16 > len(data):
            raise Truncated("record header incomplete", offset)
        ts_sec, ts_frac, incl_len, orig_len = rec_hdr.unpack_from(data, offset)
        if offset + 16 + incl_len > len(data):
            raise Truncated(f"record body incomplete (declared {incl_len} bytes)", offset)
        frame = data[offset + 16:offset + 16 + incl_len]
        timestamp = ts_sec + ts_frac / 1_000_000.0
        if stats is not None:
            stats.total_frames += 1
        record = _parse_frame(frame, timestamp, orig_len, device_map)
        if record is None:
            if stats is not None:
                stats.skipped_frames += 1
        else:
            if stats is not None:
                stats.records.append(record)
            yield record
        offset += 16 + incl_len


def parse_pcap(data: bytes, device_map: DeviceMap | None = None) -> ParsedCapture:
    """Parse a full capture eagerly, collecting records and frame counts."""
    stats = ParsedCapture()
    for _ in parse_pcap_stream(data, device_map, stats):
        pass
    return stats


def _format_port(port: int | None) -> str:
    return "" if port is None else str(port)


def _format_ip(ip: str | None) -> str:
    return "" if ip is None else ip


def write_summary_csv(records: Iterable[PacketRecord]) -> str:
    """Render records as the canonical summary CSV (LF endings, µs timestamps)."""
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            f"{r.timestamp:.6f},{_format_ip(r.src_ip)},{_format_ip(r.dst_ip)},"
            f"{_format_port(r.src_port)},{_format_port(r.dst_port)},"
            f"{r.protocol},{r.length},{r.device_id}"
        )
    return "\n".join(lines) + "\n"


def parse_summary_csv(text: str) -> list[PacketRecord]:
    """Parse the canonical summary CSV into records, preserving row order.

    Raises SchemaMismatch for a wrong header and RowError (with the 1-based
    line number) for malformed fields.
    """
    lines = text.splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise SchemaMismatch(f"expected header {CSV_HEADER!r}")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 8:
            raise RowError(f"expected 8 fields, got {len(fields)}", lineno)
        ts_s, src_ip, dst_ip, sport_s, dport_s, protocol, length_s, device_id = fields
        try:
            timestamp = float(ts_s)
            src_port = int(sport_s) if sport_s else None
            dst_port = int(dport_s) if dport_s else None
            length = int(length_s)
        except ValueError as exc:
            raise RowError(str(exc), lineno) from None
        try:
            records.append(PacketRecord(
                timestamp, src_ip or None, dst_ip or None,
                src_port, dst_port, protocol, length, device_id))
        except ValueError as exc:
            raise RowError(str(exc), lineno) from None
    return records
