"""Measurement: delivery CDFs, delay confidence intervals, overhead ledger,
and connectivity/group dynamics series."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

from scipy import stats

from .engine import SECOND

OVERHEAD_KINDS = ("group_algorithm", "messages_list", "copy_request", "reduce_copies")


@dataclass
class OverheadLedger:
    """Cumulative control bits by kind, normalized by integrated live-link time."""

    bits: dict[str, int] = field(default_factory=lambda: {k: 0 for k in OVERHEAD_KINDS})
    emissions: dict[str, int] = field(default_factory=lambda: {k: 0 for k in OVERHEAD_KINDS})
    link_seconds: float = 0.0

    def charge(self, kind: str, bits: int) -> None:
        if kind not in self.bits:
            raise KeyError(f"unknown overhead kind {kind!r}")
        self.bits[kind] += bits
        self.emissions[kind] += 1

    def total_bits(self) -> int:
        return sum(self.bits.values())

    def bits_per_link_second(self, kind: str | None = None) -> float:
        if self.link_seconds <= 0:
            return 0.0
        bits = self.total_bits() if kind is None else self.bits[kind]
        return bits / self.link_seconds


@dataclass
class RunMetrics:
    """Everything measured in one (scenario, protocol, seed) run."""

    protocol: str = ""
    seed: int = 0
    created: list[tuple[int, int, int, int]] = field(default_factory=list)  # id,src,dst,t
    deliveries: dict[int, tuple[int, int, int]] = field(default_factory=dict)  # id -> (t, delay, hops)
    copies_at_end: dict[int, int] = field(default_factory=dict)
    drops: int = 0
    duplicate_deliveries: int = 0
    overhead: OverheadLedger = field(default_factory=OverheadLedger)
    # per-sample series, sampled once a second by default
    times_s: list[float] = field(default_factory=list)
    avg_degree: list[float] = field(default_factory=list)
    components: list[int] = field(default_factory=list)
    link_churn: list[float] = field(default_factory=list)  # events/s in the bucket
    group_churn: list[float] = field(default_factory=list)
    mobility_checksum: int = 0
    message_checksum: int = 0
    wallclock_s: float = 0.0

    @property
    def created_count(self) -> int:
        return len(self.created)

    @property
    def delivered_count(self) -> int:
        return len(self.deliveries)

    def delivery_ratio(self) -> float:
        if not self.created:
            return 0.0
        return len(self.deliveries) / len(self.created)

    def delays_s(self) -> list[float]:
        return [d / SECOND for (_, d, _) in self.deliveries.values()]

    def mean_delay_s(self) -> float | None:
        delays = self.delays_s()
        return sum(delays) / len(delays) if delays else None


def cumulative_delivery_cdf(
    metrics: RunMetrics, bucket_s: float, horizon_s: float
) -> list[tuple[float, float]]:
    """Fraction of created messages delivered with delay <= t, per bucket."""
    n = metrics.created_count
    buckets = []
    t = bucket_s
    while t <= horizon_s + 1e-9:
        buckets.append(t)
        t += bucket_s
    if n == 0:
        return [(b, 0.0) for b in buckets]
    delays = sorted(metrics.delays_s())
    out = []
    i = 0
    done = 0
    for b in buckets:
        while i < len(delays) and delays[i] <= b + 1e-9:
            done += 1
            i += 1
        out.append((b, done / n))
    return out


def cdf_at(metrics: RunMetrics, t_s: float) -> float:
    if metrics.created_count == 0:
        return 0.0
    return sum(1 for d in metrics.delays_s() if d <= t_s + 1e-9) / metrics.created_count


def mean_delay_ci(
    runs: list[RunMetrics], level: float = 0.95
) -> tuple[float, float, int]:
    """Across-run mean of per-run average delay and Student-t halfwidth.

    Runs with zero deliveries are excluded; the count of used runs is
    returned so callers can flag exclusions.
    """
    means = [m.mean_delay_s() for m in runs]
    means = [x for x in means if x is not None]
    n = len(means)
    if n < 2:
        raise ValueError("need at least two runs with deliveries")
    mean = sum(means) / n
    var = sum((x - mean) ** 2 for x in means) / (n - 1)
    t = stats.t.ppf(0.5 + level / 2, n - 1)
    half = t * math.sqrt(var / n)
    return mean, half, n


def format_mean_ci(mean_s: float, half_s: float) -> str:
    return f"{mean_s:.0f} ± {half_s:.0f} seconds"


def group_churn(
    snapshots: list[tuple[float, dict[int, frozenset[int]]]],
    window: int = 1,
) -> list[tuple[float, float]]:
    """Joins+leaves per second from membership snapshots at a fixed cadence.

    A node whose group assignment changed between consecutive snapshots
    counts as one leave plus one join (two events).
    """
    if len(snapshots) < 2:
        return []
    raw = []
    for (t0, prev), (t1, cur) in zip(snapshots, snapshots[1:]):
        dt = t1 - t0
        events = sum(2 for node in cur if prev.get(node) != cur[node])
        raw.append((t1, events / dt if dt > 0 else 0.0))
    if window <= 1:
        return raw
    out = []
    for i in range(len(raw)):
        lo = max(0, i - window + 1)
        vals = [raw[j][1] for j in range(lo, i + 1)]
        out.append((raw[i][0], sum(vals) / len(vals)))
    return out


def coefficient_of_variation(series: list[float]) -> float:
    if not series:
        return 0.0
    mean = sum(series) / len(series)
    if mean == 0:
        return 0.0
    var = sum((x - mean) ** 2 for x in series) / len(series)
    return math.sqrt(var) / mean


# -- CSV outputs ----------------------------------------------------------------


def write_cdf_csv(path, per_protocol: dict[str, list[tuple[float, float]]]) -> None:
    protocols = sorted(per_protocol)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bucket_s"] + protocols)
        if not protocols:
            return
        buckets = [b for b, _ in per_protocol[protocols[0]]]
        for i, b in enumerate(buckets):
            w.writerow([f"{b:g}"] + [f"{per_protocol[p][i][1]:.6f}" for p in protocols])


def write_overhead_csv(path, ledgers: dict[str, OverheadLedger]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["protocol", "kind", "bits", "bits_per_link_per_s"])
        for protocol in sorted(ledgers):
            led = ledgers[protocol]
            for kind in OVERHEAD_KINDS:
                w.writerow(
                    [protocol, kind, led.bits[kind], f"{led.bits_per_link_second(kind):.6f}"]
                )
            w.writerow(
                [protocol, "total", led.total_bits(), f"{led.bits_per_link_second():.6f}"]
            )


def write_dynamics_csv(path, rows: list[tuple[float, float, int, float, float]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "avg_degree", "components", "link_churn", "group_churn"])
        for t, deg, comp, lc, gc in rows:
            w.writerow([f"{t:g}", f"{deg:.4f}", comp, f"{lc:.4f}", f"{gc:.4f}"])


def write_summary_csv(path, rows: list[dict]) -> None:
    cols = ["protocol", "delivery_ratio", "mean_delay_s", "ci_halfwidth_s", "seeds"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in rows:
            w.writerow([row[c] for c in cols])


def write_message_ledger_csv(path, metrics: RunMetrics) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["msg_id", "src", "dst", "created_at", "delivered_at_or_-", "copies_at_end", "hops_at_delivery"]
        )
        for msg_id, src, dst, t in metrics.created:
            if msg_id in metrics.deliveries:
                dt, _, hops = metrics.deliveries[msg_id]
                delivered = f"{dt / SECOND:g}"
                hops_out = hops
            else:
                delivered = "-"
                hops_out = "-"
            w.writerow(
                [
                    msg_id,
                    src,
                    dst,
                    f"{t / SECOND:g}",
                    delivered,
                    metrics.copies_at_end.get(msg_id, 0),
                    hops_out,
                ]
            )
