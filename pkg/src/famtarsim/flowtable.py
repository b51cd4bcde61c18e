"""Flow Forwarding Table (FFT).

The table pins every active flow to the egress interface and gateway chosen
when its first packet was routed, so later routing-table changes only affect
flows that start afterwards.  Entries expire after an idle timeout but are
collected lazily: an expired entry is only physically removed when an insert
lands in its hash bucket (or by an explicit diagnostic sweep); lookups simply
refuse to return it.
"""

from __future__ import annotations

import io
from typing import Iterator, Optional

from .model import FLOW_ENTRY_BYTES, FlowKey, FlowValue, SimTime, seconds

DEFAULT_FLOW_TIMEOUT: SimTime = seconds(10.0)
DEFAULT_BUCKET_COUNT = 1024


class FlowTableError(RuntimeError):
    """Contract violation by a caller; indicates a simulator bug."""


class FlowTable:
    """Hash-chain associative array from :class:`FlowKey` to :class:`FlowValue`.

    The bucket count is configurable so chain-level behaviour (collision GC)
    can be exercised in tests with a bucket count of 1.
    """

    def __init__(self, timeout: SimTime = DEFAULT_FLOW_TIMEOUT,
                 buckets: int = DEFAULT_BUCKET_COUNT):
        if timeout <= 0:
            raise ValueError("flow idle timeout must be positive")
        if buckets <= 0:
            raise ValueError("bucket count must be positive")
        self.timeout = timeout
        self._nbuckets = buckets
        self._buckets: list[list[tuple[FlowKey, FlowValue]]] = [[] for _ in range(buckets)]
        self._count = 0
        self._blocked: dict[int, SimTime] = {}  # iface index -> block expiry

    # -- forwarding-path operations ---------------------------------------

    def lookup(self, key: FlowKey, now: SimTime) -> Optional[FlowValue]:
        """Return the live entry for ``key`` or None; never mutates the table."""
        for k, v in self._buckets[hash(key) % self._nbuckets]:
            if k == key:
                if now - v.ts <= self.timeout:
                    return v
                return None  # physically present but expired
        return None

    def touch(self, key: FlowKey, now: SimTime) -> None:
        """Refresh the idle timer of a live entry."""
        value = self.lookup(key, now)
        if value is None:
            raise FlowTableError(f"touch on absent or expired flow {key!r}")
        if now < value.ts:
            raise FlowTableError("touch with time earlier than entry timestamp")
        value.ts = now

    def insert(self, key: FlowKey, value: FlowValue, now: SimTime) -> bool:
        """Add a new flow entry.

        Returns False (and leaves the table untouched) when the target egress
        interface is inside a post-failure admission block.  Otherwise the
        destination bucket is garbage-collected and the entry appended.
        The caller must have checked that no live entry exists for ``key``.
        """
        expiry = self._blocked.get(value.port)
        if expiry is not None:
            if expiry > now:
                return False
            del self._blocked[value.port]

        bucket = self._buckets[hash(key) % self._nbuckets]
        if bucket:
            keep = []
            for k, v in bucket:
                if now - v.ts > self.timeout:
                    continue  # lazy GC: drop expired neighbours on insert
                if k == key:
                    raise FlowTableError(f"insert over live entry for {key!r}")
                keep.append((k, v))
            self._count -= len(bucket) - len(keep)
            bucket[:] = keep
        bucket.append((key, value))
        self._count += 1
        return True

    def update_entry(self, key: FlowKey, new_port: int, new_gateway: int,
                     new_ttl: int, now: SimTime) -> None:
        """Re-point an existing entry at a new egress and refresh its timer."""
        for k, v in self._buckets[hash(key) % self._nbuckets]:
            if k == key:
                # route mutable fields through a fresh FlowValue for validation
                fresh = FlowValue(now, new_port, new_gateway, new_ttl)
                v.ts = fresh.ts
                v.port = fresh.port
                v.gateway = fresh.gateway
                v.ttl = fresh.ttl
                return
        raise FlowTableError(f"update_entry on absent flow {key!r}")

    # -- failure handling ---------------------------------------------------

    def block_interface(self, iface: int, now: SimTime, duration: SimTime) -> None:
        """Refuse new flow entries on ``iface`` until ``now + duration``.

        A later block simply overwrites the expiry.
        """
        if duration <= 0:
            raise ValueError("block duration must be positive")
        self._blocked[iface] = now + duration

    def blocked_until(self, iface: int) -> Optional[SimTime]:
        return self._blocked.get(iface)

    def is_blocked(self, iface: int, now: SimTime) -> bool:
        expiry = self._blocked.get(iface)
        return expiry is not None and expiry > now

    def purge_interface(self, iface: int) -> int:
        """Remove every entry (live or expired) pinned to ``iface``; return count."""
        removed = 0
        for bucket in self._buckets:
            if not bucket:
                continue
            keep = [(k, v) for k, v in bucket if v.port != iface]
            removed += len(bucket) - len(keep)
            bucket[:] = keep
        self._count -= removed
        return removed

    # -- observability --------------------------------------------------------

    @property
    def entry_count(self) -> int:
        """Physically stored entries; an upper bound on live flows between GCs."""
        return self._count

    @property
    def footprint_bytes(self) -> int:
        return self._count * FLOW_ENTRY_BYTES

    def sweep_expired(self, now: SimTime) -> int:
        """Eagerly drop expired entries everywhere (diagnostics only)."""
        removed = 0
        for bucket in self._buckets:
            if not bucket:
                continue
            keep = [(k, v) for k, v in bucket if now - v.ts <= self.timeout]
            removed += len(bucket) - len(keep)
            bucket[:] = keep
        self._count -= removed
        return removed

    def entries(self) -> Iterator[tuple[FlowKey, FlowValue]]:
        for bucket in self._buckets:
            yield from bucket

    def dump_csv(self) -> str:
        """All entries as CSV, ordered by flow key for stable comparison."""
        out = io.StringIO()
        out.write("src_addr,dst_addr,src_port,dst_port,ip_prot,ts,port,gateway,ttl\n")
        for key, value in sorted(self.entries(), key=lambda kv: kv[0]):
            out.write(f"{key.src_addr},{key.dst_addr},{key.src_port},{key.dst_port},"
                      f"{key.ip_prot},{value.ts},{value.port},{value.gateway},{value.ttl}\n")
        return out.getvalue()
