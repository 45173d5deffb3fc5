import json
import math
from io import StringIO
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, Iterable, List, Optional

import numpy as np
import pandas as pd

import config


@dataclass
class EntropyReport:
    """An entropy value with the numeric evidence behind it.

    ``sizes`` indexes ``estimates`` (strip width, depth or number of series
    terms, depending on the estimator).
    """

    quantity: str
    closed_form: Optional[float] = None
    sizes: List[int] = field(default_factory=list)
    estimates: List[float] = field(default_factory=list)
    tail_bound: Optional[float] = None
    terms: Optional[int] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def estimate(self) -> Optional[float]:
        if self.estimates:
            return self.estimates[-1]
        return self.closed_form

    @property
    def value(self) -> Optional[float]:
        """Closed form when known, otherwise the last estimate."""
        return self.closed_form if self.closed_form is not None else self.estimate

    @property
    def cauchy(self) -> Optional[float]:
        if len(self.estimates) < 2:
            return None
        return abs(self.estimates[-1] - self.estimates[-2])

    @property
    def monotone(self) -> bool:
        """True when the estimates never increase (up to rounding)."""
        return all(b <= a + 1e-12 for a, b in zip(self.estimates, self.estimates[1:]))

    @property
    def error(self) -> Optional[float]:
        if self.closed_form is None or self.estimate is None:
            return None
        return abs(self.estimate - self.closed_form)

    def summary(self) -> Dict[str, Any]:
        return {
            "quantity": self.quantity,
            "closed_form": self.closed_form,
            "estimate": self.estimate,
            "error": self.error,
            "cauchy": self.cauchy,
            "monotone": self.monotone,
            "terms": self.terms,
            "tail_bound": self.tail_bound,
        }

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"size": self.sizes, "estimate": self.estimates})
        frame.insert(0, "quantity", self.quantity)
        frame["closed_form"] = self.closed_form
        return frame


# -----------------------------
# Report emission
# -----------------------------
def scale_entropy_columns(frame: pd.DataFrame, columns: Iterable[str], log_base: str) -> pd.DataFrame:
    """Convert natural-log entropy columns to the requested base."""
    divisor = config.LOG_BASES[log_base]
    if divisor == 1.0:
        return frame
    frame = frame.copy()
    for column in columns:
        if column in frame.columns:
            frame[column] = frame[column].map(lambda v: v / divisor if _is_number(v) else v)
    return frame


def _is_number(value: Any) -> bool:
    return isinstance(value, (float, np.floating)) and not isinstance(value, bool)


def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, float) and math.isinf(value):
        return "-inf" if value < 0 else "inf"
    return value


def frame_to_text(frame: pd.DataFrame, fmt: str, timestamps: bool = False) -> str:
    if fmt not in config.OUTPUT_FORMATS:
        raise ValueError(f"unknown output format {fmt!r}; expected one of {config.OUTPUT_FORMATS}")
    if timestamps:
        frame = frame.copy()
        frame["generated_at"] = datetime.now(timezone.utc).isoformat()
    if fmt == "csv":
        return frame.to_csv(index=False, float_format=config.FLOAT_FORMAT, lineterminator="\n")
    if fmt == "json":
        records = [{key: _plain(value) for key, value in row.items()}
                   for row in frame.to_dict(orient="records")]
        return json.dumps(records, indent=2) + "\n"
    return frame.to_string(index=False) + "\n"


def read_report(text: str, fmt: str) -> pd.DataFrame:
    """Parse a csv or json report back into a DataFrame."""
    if fmt == "csv":
        return pd.read_csv(StringIO(text), float_precision="round_trip")
    if fmt == "json":
        return pd.DataFrame(json.loads(text))
    raise ValueError(f"format {fmt!r} is not machine readable")
