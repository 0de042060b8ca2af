"""JSON reports for computed bounds."""

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

from . import __version__


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if hasattr(x, "item"):
        return _clean(x.item())
    return x


@dataclass
class BoundReport:
    """A bound value with its inputs and optimized parameters.

    ``value`` is clipped to 1; ``raw_value`` keeps the computed number and
    ``vacuous`` is set whenever it reaches 1.
    """

    bound_id: str
    inputs: dict
    raw_value: float
    optimized: dict = field(default_factory=dict)
    anchor: str = ""
    timestamp: str = ""
    tool_version: str = __version__

    @property
    def vacuous(self):
        return self.raw_value >= 1.0

    @property
    def value(self):
        return min(self.raw_value, 1.0) if not math.isnan(self.raw_value) else self.raw_value

    def to_dict(self):
        d = asdict(self)
        d["value"] = self.value
        d["vacuous"] = self.vacuous
        d["inputs"] = {k: _clean(v) for k, v in self.inputs.items()}
        d["optimized"] = {k: _clean(v) for k, v in self.optimized.items()}
        d["raw_value"] = _clean(self.raw_value)
        d["value"] = _clean(d["value"])
        return d

    def to_json(self):
        if not self.timestamp:
            self.timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)

        def num(v):
            return {"inf": math.inf, "-inf": -math.inf, None: math.nan}.get(v, v) if not isinstance(v, (int, float)) else v

        return cls(
            bound_id=d["bound_id"],
            inputs=d["inputs"],
            raw_value=float(num(d["raw_value"])),
            optimized={k: num(v) for k, v in d["optimized"].items()},
            anchor=d["anchor"],
            timestamp=d["timestamp"],
            tool_version=d["tool_version"],
        )

    def line(self):
        opt = " ".join(f"{k}={_fmt(v)}" for k, v in sorted(self.optimized.items()))
        flag = " (vacuous)" if self.vacuous else ""
        return f"{self.bound_id}: {self.value:.6f}{flag}" + (f"  [{opt}]" if opt else "")


def _fmt(v):
    return f"{v:.6g}" if isinstance(v, float) else str(v)
