"""Measurement: per-run counters, per-second series and report assembly.

The collector is fed by the engine while the run executes; :func:`collect`
then reduces it to a plain-data :class:`MetricsReport` restricted to a
measurement window (whole seconds, half-open ``[start, end)``).  Reports are
picklable and JSON-friendly so repetitions can run in worker processes.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from typing import Optional

from .model import US_PER_S, SimTime


class FlowStats:
    """Raw per-flow counters, bucketed into whole seconds (sparse dicts)."""

    __slots__ = ("sent", "delivered", "bytes", "delay_sum", "delay_min",
                 "delay_max", "drops", "sec_sent", "sec_delivered",
                 "sec_bytes", "sec_drops", "sec_delay_sum", "sec_delay_cnt",
                 "sec_delay_max")

    def __init__(self):
        self.sent = 0
        self.delivered = 0
        self.bytes = 0
        self.delay_sum = 0
        self.delay_min: Optional[int] = None
        self.delay_max = 0
        self.drops: dict[str, int] = {}
        self.sec_sent: dict[int, int] = {}
        self.sec_delivered: dict[int, int] = {}
        self.sec_bytes: dict[int, int] = {}
        self.sec_drops: dict[int, int] = {}
        self.sec_delay_sum: dict[int, int] = {}
        self.sec_delay_cnt: dict[int, int] = {}
        self.sec_delay_max: dict[int, int] = {}


class MetricsCollector:
    """Accumulates everything the engine measures, with O(1) record calls."""

    def __init__(self, duration_s: int, flows, n_directed: int):
        self.duration_s = duration_s
        n_bins = duration_s + 1  # defensive slot for events at the very end
        self.gen_sec = [0] * n_bins
        self.deliv_sec = [0] * n_bins
        self.bytes_sec = [0] * n_bins
        self.drop_sec = [0] * n_bins
        self.delay_sum_sec = [0] * n_bins
        self.delay_cnt_sec = [0] * n_bins
        self.delay_max_sec = [0] * n_bins
        self.delay_min_sec: list[Optional[int]] = [None] * n_bins
        self.drops_by_reason: dict[str, int] = {}
        self.flow_stats = [FlowStats() for _ in flows]
        self.link_bytes = [[0] * n_bins for _ in range(n_directed)]

    def record_emit(self, flow_id: int, now: SimTime) -> None:
        s = now // US_PER_S
        self.gen_sec[s] += 1
        fs = self.flow_stats[flow_id]
        fs.sent += 1
        fs.sec_sent[s] = fs.sec_sent.get(s, 0) + 1

    def record_deliver(self, flow_id: int, now: SimTime, delay: SimTime,
                       size: int) -> None:
        s = now // US_PER_S
        self.deliv_sec[s] += 1
        self.bytes_sec[s] += size
        self.delay_sum_sec[s] += delay
        self.delay_cnt_sec[s] += 1
        if delay > self.delay_max_sec[s]:
            self.delay_max_sec[s] = delay
        lo = self.delay_min_sec[s]
        if lo is None or delay < lo:
            self.delay_min_sec[s] = delay
        fs = self.flow_stats[flow_id]
        fs.delivered += 1
        fs.bytes += size
        fs.delay_sum += delay
        if fs.delay_min is None or delay < fs.delay_min:
            fs.delay_min = delay
        if delay > fs.delay_max:
            fs.delay_max = delay
        fs.sec_delivered[s] = fs.sec_delivered.get(s, 0) + 1
        fs.sec_bytes[s] = fs.sec_bytes.get(s, 0) + size
        fs.sec_delay_sum[s] = fs.sec_delay_sum.get(s, 0) + delay
        fs.sec_delay_cnt[s] = fs.sec_delay_cnt.get(s, 0) + 1
        if delay > fs.sec_delay_max.get(s, 0):
            fs.sec_delay_max[s] = delay

    def record_drop(self, flow_id: int, now: SimTime, reason: str) -> None:
        s = now // US_PER_S
        self.drop_sec[s] += 1
        self.drops_by_reason[reason] = self.drops_by_reason.get(reason, 0) + 1
        fs = self.flow_stats[flow_id]
        fs.drops[reason] = fs.drops.get(reason, 0) + 1
        fs.sec_drops[s] = fs.sec_drops.get(s, 0) + 1

    def record_link_bytes(self, dl_index: int, now: SimTime, size: int) -> None:
        self.link_bytes[dl_index][now // US_PER_S] += size


@dataclass
class FlowReport:
    """Windowed view of one flow (all time fields in milliseconds)."""

    flow_id: int
    label: str
    src: str
    dst: str
    sent: int
    delivered: int
    bytes: int
    drops_total: int
    drops_by_reason: dict[str, int]
    delay_avg_ms: Optional[float]
    delay_max_ms: Optional[float]
    sec_delivered: dict[int, int]
    sec_drops: dict[int, int]
    sec_bitrate_bps: dict[int, float]
    sec_delay_avg_ms: dict[int, float]

    @property
    def loss_fraction(self) -> float:
        return self.drops_total / self.sent if self.sent else 0.0


@dataclass
class MetricsReport:
    """Plain-data summary of one run over one measurement window."""

    name: str
    famtar_enabled: bool
    seed: int
    window: tuple[int, int]
    duration_s: int
    generated: int
    delivered: int
    dropped: int
    drops_by_reason: dict[str, int]
    bytes_received: int
    avg_bitrate_bps: float
    drop_ratio: float
    delay_min_ms: Optional[float]
    delay_avg_ms: Optional[float]
    delay_max_ms: Optional[float]
    seconds: list[int]
    series: dict[str, list]
    flows: list[FlowReport]
    link_utilization: dict[str, list[float]]
    congestion_intervals: dict[str, list[tuple[int, Optional[int]]]]
    conservation: dict[str, int]
    conserved: bool
    event_log_hash: str

    def scalars(self) -> dict[str, Optional[float]]:
        """Flat numeric summary used for aggregation and run-to-run diffs."""
        return {
            "generated": float(self.generated),
            "delivered": float(self.delivered),
            "dropped": float(self.dropped),
            "bytes_received": float(self.bytes_received),
            "avg_bitrate_bps": self.avg_bitrate_bps,
            "drop_ratio": self.drop_ratio,
            "delay_min_ms": self.delay_min_ms,
            "delay_avg_ms": self.delay_avg_ms,
            "delay_max_ms": self.delay_max_ms,
        }

    def flow_by_label(self, label: str) -> list[FlowReport]:
        return [f for f in self.flows if f.label == label]

    def to_json_dict(self) -> dict:
        d = {
            "name": self.name,
            "famtar_enabled": self.famtar_enabled,
            "seed": self.seed,
            "window": list(self.window),
            "duration_s": self.duration_s,
            "scalars": self.scalars(),
            "drops_by_reason": self.drops_by_reason,
            "conservation": self.conservation,
            "conserved": self.conserved,
            "event_log_hash": self.event_log_hash,
        }
        return d


def collect(result, window: Optional[tuple[int, int]] = None) -> MetricsReport:
    """Reduce a finished run to a report over ``window`` (whole seconds).

    ``window`` defaults to the run's own measurement window; it must satisfy
    ``0 <= start < end <= duration``.
    """
    col: MetricsCollector = result.collector
    if window is None:
        window = result.default_window
    start, end = int(window[0]), int(window[1])
    if not 0 <= start < end <= col.duration_s:
        raise ValueError(f"window {window} outside run of {col.duration_s}s")
    secs = list(range(start, end))
    span = end - start

    generated = sum(col.gen_sec[s] for s in secs)
    delivered = sum(col.deliv_sec[s] for s in secs)
    dropped = sum(col.drop_sec[s] for s in secs)
    nbytes = sum(col.bytes_sec[s] for s in secs)
    delay_sum = sum(col.delay_sum_sec[s] for s in secs)
    delay_cnt = sum(col.delay_cnt_sec[s] for s in secs)
    delay_max = max((col.delay_max_sec[s] for s in secs if col.delay_cnt_sec[s]),
                    default=None)
    mins = [col.delay_min_sec[s] for s in secs if col.delay_min_sec[s] is not None]
    delay_min = min(mins) if mins else None

    series = {
        "generated": [col.gen_sec[s] for s in secs],
        "delivered": [col.deliv_sec[s] for s in secs],
        "bitrate_bps": [col.bytes_sec[s] * 8.0 for s in secs],
        "drops": [col.drop_sec[s] for s in secs],
        "delay_avg_ms": [
            (col.delay_sum_sec[s] / col.delay_cnt_sec[s] / 1000.0)
            if col.delay_cnt_sec[s] else None for s in secs
        ],
        "delay_max_ms": [
            col.delay_max_sec[s] / 1000.0 if col.delay_cnt_sec[s] else None
            for s in secs
        ],
    }

    in_window = range(start, end)
    flow_reports = []
    for fid, fs in enumerate(col.flow_stats):
        spec = result.flows[fid]
        w_sent = sum(fs.sec_sent.get(s, 0) for s in in_window) if fs.sec_sent else 0
        w_del = sum(fs.sec_delivered.get(s, 0) for s in in_window) if fs.sec_delivered else 0
        w_bytes = sum(fs.sec_bytes.get(s, 0) for s in in_window) if fs.sec_bytes else 0
        w_drops = sum(fs.sec_drops.get(s, 0) for s in in_window) if fs.sec_drops else 0
        w_dsum = sum(fs.sec_delay_sum.get(s, 0) for s in in_window)
        w_dcnt = sum(fs.sec_delay_cnt.get(s, 0) for s in in_window)
        w_dmax = max((fs.sec_delay_max[s] for s in in_window if s in fs.sec_delay_max),
                     default=None)
        flow_reports.append(FlowReport(
            flow_id=fid, label=spec.label, src=spec.src, dst=spec.dst,
            sent=w_sent, delivered=w_del, bytes=w_bytes, drops_total=w_drops,
            drops_by_reason=dict(sorted(fs.drops.items())),
            delay_avg_ms=(w_dsum / w_dcnt / 1000.0) if w_dcnt else None,
            delay_max_ms=(w_dmax / 1000.0) if w_dmax is not None else None,
            sec_delivered={s: fs.sec_delivered[s] for s in in_window
                           if s in fs.sec_delivered},
            sec_drops={s: fs.sec_drops[s] for s in in_window if s in fs.sec_drops},
            sec_bitrate_bps={s: fs.sec_bytes[s] * 8.0 for s in in_window
                             if s in fs.sec_bytes},
            sec_delay_avg_ms={s: fs.sec_delay_sum[s] / fs.sec_delay_cnt[s] / 1000.0
                              for s in in_window if fs.sec_delay_cnt.get(s)},
        ))

    link_util = {}
    for dl in result.topo.directed:
        name = f"{dl.src}->{dl.dst}"
        counts = col.link_bytes[dl.index]
        link_util[name] = [counts[s] * 8.0 / dl.link.capacity for s in secs]

    congestion: dict[str, list] = {}
    open_since: dict[int, int] = {}
    for dl_index, t, escalate in result.congestion_events:
        dl = result.topo.directed[dl_index]
        name = f"{dl.src}->{dl.dst}"
        if escalate:
            open_since[dl_index] = t // US_PER_S
        else:
            started = open_since.pop(dl_index, None)
            if started is not None:
                congestion.setdefault(name, []).append((started, t // US_PER_S))
    for dl_index, started in sorted(open_since.items()):
        dl = result.topo.directed[dl_index]
        congestion.setdefault(f"{dl.src}->{dl.dst}", []).append((started, None))

    return MetricsReport(
        name=result.name, famtar_enabled=result.famtar_enabled,
        seed=result.seed, window=(start, end), duration_s=col.duration_s,
        generated=generated, delivered=delivered, dropped=dropped,
        drops_by_reason=dict(sorted(col.drops_by_reason.items())),
        bytes_received=nbytes, avg_bitrate_bps=nbytes * 8.0 / span,
        drop_ratio=(dropped / generated) if generated else 0.0,
        delay_min_ms=(delay_min / 1000.0) if delay_min is not None else None,
        delay_avg_ms=(delay_sum / delay_cnt / 1000.0) if delay_cnt else None,
        delay_max_ms=(delay_max / 1000.0) if delay_max is not None else None,
        seconds=secs, series=series, flows=flow_reports,
        link_utilization=link_util, congestion_intervals=congestion,
        conservation=result.conservation(), conserved=result.conserved(),
        event_log_hash=result.event_log_hash)


# --------------------------------------------------------------------------
# Emitters
# --------------------------------------------------------------------------

def metrics_csv(report: MetricsReport) -> str:
    """Per-second aggregate series as CSV."""
    out = io.StringIO()
    out.write("second,generated,delivered,bitrate_bps,drops,delay_avg_ms,delay_max_ms\n")
    s = report.series
    for i, sec in enumerate(report.seconds):
        avg = s["delay_avg_ms"][i]
        mx = s["delay_max_ms"][i]
        out.write(f"{sec},{s['generated'][i]},{s['delivered'][i]},"
                  f"{s['bitrate_bps'][i]:.0f},{s['drops'][i]},"
                  f"{'' if avg is None else f'{avg:.3f}'},"
                  f"{'' if mx is None else f'{mx:.3f}'}\n")
    return out.getvalue()


def flows_csv(report: MetricsReport) -> str:
    """Per-flow windowed summary as CSV."""
    out = io.StringIO()
    out.write("flow_id,label,src,dst,sent,delivered,dropped,bytes,"
              "delay_avg_ms,delay_max_ms\n")
    for f in report.flows:
        avg = "" if f.delay_avg_ms is None else f"{f.delay_avg_ms:.3f}"
        mx = "" if f.delay_max_ms is None else f"{f.delay_max_ms:.3f}"
        out.write(f"{f.flow_id},{f.label},{f.src},{f.dst},{f.sent},"
                  f"{f.delivered},{f.drops_total},{f.bytes},{avg},{mx}\n")
    return out.getvalue()


def links_csv(report: MetricsReport) -> str:
    """Per-second directed-link utilization as CSV (long format)."""
    out = io.StringIO()
    out.write("second,link,utilization\n")
    for name in sorted(report.link_utilization):
        util = report.link_utilization[name]
        for i, sec in enumerate(report.seconds):
            out.write(f"{sec},{name},{util[i]:.6f}\n")
    return out.getvalue()


def report_json(report: MetricsReport) -> str:
    return json.dumps(report.to_json_dict(), indent=2, sort_keys=True)


def mean_std(values: list[float]) -> tuple[float, float]:
    """Sample mean and standard deviation (0.0 when n == 1)."""
    n = len(values)
    if n == 0:
        raise ValueError("no values")
    mean = sum(values) / n
    if n == 1:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)
