"""Little's-Law throughput instrumentation and the waste-management rules.

The decision functions are the inequalities behind each rule; the engine
consults :class:`RuleFlags` to switch the corresponding mechanisms on or off.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field


class ZeroLatency(ValueError):
    pass


class DomainError(ValueError):
    pass


@dataclass
class RuleFlags:
    rule1_compaction_threshold: int = 1024
    rule1_enabled: bool = True
    rule2_filtering_enabled: bool = True
    rule3_gamma: float = 0.2
    rule3_enabled: bool = True
    rule4_unified_collection: bool = True
    rule5_split_lengthy_work: bool = True

    def __post_init__(self):
        if not 0.0 < self.rule3_gamma < 1.0:
            raise DomainError(f"gamma must lie in (0, 1), got {self.rule3_gamma}")
        if self.rule1_compaction_threshold < 0:
            raise DomainError("compaction threshold must be non-negative")

    def disabled(self):
        off = []
        if not self.rule1_enabled:
            off.append(1)
        if not self.rule2_filtering_enabled:
            off.append(2)
        if not self.rule3_enabled:
            off.append(3)
        if not self.rule4_unified_collection:
            off.append(4)
        if not self.rule5_split_lengthy_work:
            off.append(5)
        return off

    @classmethod
    def without(cls, *rules, **kw):
        flags = cls(**kw)
        for r in rules:
            if r == 1:
                flags.rule1_enabled = False
            elif r == 2:
                flags.rule2_filtering_enabled = False
            elif r == 3:
                flags.rule3_enabled = False
            elif r == 4:
                flags.rule4_unified_collection = False
            elif r == 5:
                flags.rule5_split_lengthy_work = False
            else:
                raise DomainError(f"no rule {r}")
        return flags


def little_throughput(c: float, l: float) -> float:
    if l <= 0:
        raise ZeroLatency(f"latency must be positive, got {l}")
    return c / l


def rule2_filter_beneficial(alpha: float, beta: float, l: float, ell: float) -> bool:
    """Filtering pays off iff (L + ell) / L < beta / alpha."""
    if not (0 < alpha < beta <= 1):
        raise DomainError(f"need 0 < alpha < beta <= 1, got alpha={alpha}, beta={beta}")
    if l <= 0 or ell < 0:
        raise DomainError(f"need L > 0 and ell >= 0, got L={l}, ell={ell}")
    return (l + ell) / l < beta / alpha


def rule3_early_stop_beneficial(gamma: float, l: float, ell: float) -> bool:
    """Stopping after (1 - gamma) completions pays off iff ell > gamma * L."""
    if not (0 < gamma < 1):
        raise DomainError(f"need 0 < gamma < 1, got {gamma}")
    if l <= 0 or not (0 <= ell < l):
        raise DomainError(f"need L > 0 and 0 <= ell < L, got L={l}, ell={ell}")
    return ell > gamma * l


def rule4_merge_beneficial(c_i, c_j, l_i, l_j, c_m, l_m) -> bool:
    """Merged throughput beats running the two groups in series."""
    if min(c_i, c_j, l_i, l_j, c_m, l_m) <= 0:
        raise DomainError("all counts and latencies must be positive")
    return c_m / l_m > (c_i + c_j) / (l_i + l_j)


def rule5_split_beneficial(latency_saving: float, extra_cost: float) -> bool:
    """Carrying work forward pays off when it saves more time than it costs."""
    if latency_saving < 0 or extra_cost < 0:
        raise DomainError("saving and cost must be non-negative")
    return latency_saving > extra_cost


class CompletionMonitor:
    """Decides when to abandon the stragglers of a data-parallel launch.

    Feed completion timestamps in nondecreasing order.  ``should_stop``
    turns true once at least ``1 - gamma`` of the work has completed and the
    completion rate over the trailing ``window`` has fallen below
    ``drop_factor`` times the peak rate seen so far.
    """

    def __init__(self, total: int, gamma: float = 0.2, window: float = 1.0,
                 drop_factor: float = 0.25):
        if not 0 < gamma < 1:
            raise DomainError(f"need 0 < gamma < 1, got {gamma}")
        self.total = total
        self.gamma = gamma
        self.window = window
        self.drop_factor = drop_factor
        self.stamps: list[float] = []
        self.peak = 0.0

    def observe(self, t: float):
        if self.stamps and t < self.stamps[-1]:
            raise ValueError("timestamps must be nondecreasing")
        self.stamps.append(t)
        self.peak = max(self.peak, self.rate(t))

    def observe_many(self, t: float, count: int):
        for _ in range(count):
            self.stamps.append(t)
        self.peak = max(self.peak, self.rate(t))

    def rate(self, now: float) -> float:
        lo = now - self.window
        n = 0
        for s in reversed(self.stamps):
            if s <= lo:
                break
            n += 1
        return n / self.window

    @property
    def fraction_done(self) -> float:
        return len(self.stamps) / self.total if self.total else 1.0

    def should_stop(self, now: float) -> bool:
        if self.fraction_done < 1.0 - self.gamma:
            return False
        if self.fraction_done >= 1.0:
            return False
        return self.rate(now) < self.drop_factor * self.peak


@dataclass
class BatchMetrics:
    batch: int
    concurrency: int
    latency: float
    throughput: float
    attempted: int
    useful: int
    waste_fraction: float
    phase_ns: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


def record_batch(batch: int, phase_seconds: dict, attempted: int, useful: int,
                 extra: dict | None = None) -> BatchMetrics:
    """Build the per-batch record; empty batches record zero throughput."""
    latency = float(sum(phase_seconds.values()))
    throughput = little_throughput(useful, latency) if latency > 0 else 0.0
    waste = 1.0 - useful / attempted if attempted else 0.0
    waste = min(1.0, max(0.0, waste))
    return BatchMetrics(
        batch=batch, concurrency=useful, latency=latency, throughput=throughput,
        attempted=attempted, useful=useful, waste_fraction=waste,
        phase_ns={k: int(round(v * 1e9)) for k, v in phase_seconds.items()},
        extra=dict(extra or {}))


def metrics_record(m: BatchMetrics, flags: RuleFlags | None = None) -> dict:
    rec = {
        "batch": m.batch,
        "attempted": m.attempted,
        "useful": m.useful,
        "concurrency": m.concurrency,
        "latency_ns": int(round(m.latency * 1e9)),
        "throughput": m.throughput,
        "waste_fraction": m.waste_fraction,
    }
    for k, v in m.phase_ns.items():
        rec[f"phase_{k}_ns"] = v
    for k, v in m.extra.items():
        rec[k] = v
    if flags is not None:
        for k, v in asdict(flags).items():
            rec[k] = v
    return rec


def emit_metrics(batches, flags: RuleFlags | None = None) -> str:
    """Newline-delimited JSON, one flat record per batch."""
    lines = [json.dumps(metrics_record(b, flags), sort_keys=True) for b in batches]
    return "\n".join(lines) + ("\n" if lines else "")


def estimate_alpha_beta(attempted: int, after_filter: int, useful: int):
    """Post-hoc effective-concurrency fractions for the filtering rule.

    alpha: useful share of the unfiltered work; beta: useful share of the
    work that survived filtering.
    """
    alpha = useful / attempted if attempted else math.nan
    beta = useful / after_filter if after_filter else math.nan
    return alpha, beta


def slowdown_percent(base_time: float, ablated_time: float) -> float:
    """Increase in running time relative to the all-rules run."""
    if base_time <= 0:
        return math.nan
    return 100.0 * (ablated_time - base_time) / base_time
