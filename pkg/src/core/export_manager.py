"""Export manager for writing results as JSON or CSV with a run manifest."""

import json
import logging
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

SIG_DIGITS = 12


@dataclass
class RunManifest:
    """Provenance attached to every output."""

    command: str
    scenario: str
    scenario_hash: str
    version: str
    tolerances: Dict[str, Any] = field(default_factory=dict)
    wall_time: Optional[float] = None

    def to_dict(self, include_wall_time: bool = False) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "command": self.command,
            "scenario": self.scenario,
            "scenario_hash": self.scenario_hash,
            "version": self.version,
            "tolerances": dict(self.tolerances),
        }
        if include_wall_time:
            out["wall_time"] = self.wall_time
        return out


class ExportOptions:
    """Options for exporting results."""

    def __init__(
        self,
        float_format: str = "%.12g",
        json_indent: int = 2,
        write_manifest: bool = True,
        encoding: str = "utf-8",
    ):
        self.float_format = float_format
        self.json_indent = json_indent
        self.write_manifest = write_manifest
        self.encoding = encoding


def format_float(x: float) -> Any:
    """Round to 12 significant digits; non-finite values become strings."""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(f"{x:.{SIG_DIGITS}g}")


class ExportManager:
    """Manages result export operations."""

    def __init__(self, options: Optional[ExportOptions] = None):
        self.options = options or ExportOptions()

    def format_value(self, value: Any) -> Any:
        """Convert a result value into JSON-safe, byte-stable data."""
        if value is None or isinstance(value, (bool, str)):
            return value
        if isinstance(value, Enum):
            return value.value
        if isinstance(value, (np.bool_,)):
            return bool(value)
        if isinstance(value, (int, np.integer)):
            return int(value)
        if isinstance(value, (float, np.floating)):
            return format_float(float(value))
        if isinstance(value, np.ndarray):
            return [self.format_value(v) for v in value.tolist()]
        if isinstance(value, dict):
            return {str(k): self.format_value(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [self.format_value(v) for v in value]
        if hasattr(value, "to_dict"):
            return self.format_value(value.to_dict())
        return str(value)

    def render_json(self, manifest: RunManifest, result: Any) -> str:
        """JSON document without wall time, so identical inputs give identical bytes."""
        doc = {"manifest": self.format_value(manifest.to_dict()), "result": self.format_value(result)}
        return json.dumps(doc, indent=self.options.json_indent, ensure_ascii=False) + "\n"

    def render_csv(self, rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> str:
        frame = pd.DataFrame(list(rows), columns=list(columns))
        return str(
            frame.to_csv(index=False, float_format=self.options.float_format, lineterminator="\n")
        )

    def export_to_json(self, manifest: RunManifest, result: Any, filepath: str) -> Path:
        """Write a JSON result file and its sidecar manifest."""
        path = self._prepare(filepath)
        try:
            path.write_text(self.render_json(manifest, result), encoding=self.options.encoding)
        except OSError as e:
            logger.error(f"IO error writing to {path}: {e}", exc_info=True)
            raise
        self._write_sidecar(path, manifest)
        logger.info(f"Exported JSON result to {path}")
        return path

    def export_to_csv(
        self,
        manifest: RunManifest,
        rows: Sequence[Dict[str, Any]],
        columns: Sequence[str],
        filepath: str,
    ) -> Path:
        """Write a CSV table with a fixed header and its sidecar manifest."""
        path = self._prepare(filepath)
        if not rows:
            logger.warning(f"No rows to export to {path}; writing header only")
        try:
            path.write_text(self.render_csv(rows, columns), encoding=self.options.encoding)
        except OSError as e:
            logger.error(f"IO error writing to {path}: {e}", exc_info=True)
            raise
        self._write_sidecar(path, manifest)
        logger.info(f"Exported {len(rows)} rows to {path}")
        return path

    def sidecar_path(self, path: Path) -> Path:
        return path.with_name(path.name + ".manifest.json")

    def _prepare(self, filepath: str) -> Path:
        path = Path(filepath)
        os.makedirs(path.parent if str(path.parent) else ".", exist_ok=True)
        return path

    def _write_sidecar(self, path: Path, manifest: RunManifest) -> None:
        if not self.options.write_manifest:
            return
        doc = self.format_value(manifest.to_dict(include_wall_time=True))
        self.sidecar_path(path).write_text(
            json.dumps(doc, indent=self.options.json_indent) + "\n", encoding=self.options.encoding
        )


def table_columns(kind: str) -> List[str]:
    """Fixed CSV headers per table."""
    return list(CSV_SCHEMAS[kind])


CSV_SCHEMAS = {
    "phi-curve": ("epsilon", "phi", "w1hat_inv", "ndc_slack"),
    "nongroup-sweep": ("w1", "w2", "profit", "unemployment", "gap_A_minus_B"),
    "delta-family": ("delta", "delta_prime", "profit", "gap", "is_core"),
}
