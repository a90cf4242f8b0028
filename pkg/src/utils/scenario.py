"""Scenario files: YAML descriptions of a market, a regime and optional wages.

A scenario is either a shipped preset (looked up by name in ``config/scenarios``) or a path to a
YAML file. Validation collects every problem before failing, and each diagnostic names the file,
the key and, when the parser knows it, the line.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from src.core.distributions import ProductivityDist, dist_from_descriptor, regularity
from src.core.errors import EpswError, ScenarioError
from src.core.market import GroupSpec, Market, MultiMarket
from src.core.wages import WageFunction, wage_from_descriptor

logger = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).resolve().parents[2] / "config" / "scenarios"
REGIMES = ("none", "group", "nongroup", "hetero", "bias")


@dataclass
class Scenario:
    name: str
    regime: str
    market: Optional[Market] = None
    mmarket: Optional[MultiMarket] = None
    bias: Optional[float] = None
    wages: Dict[str, WageFunction] = field(default_factory=dict)
    solver: Dict[str, Any] = field(default_factory=dict)
    params: Dict[str, Any] = field(default_factory=dict)
    source: Optional[Path] = None
    digest: str = ""

    def require_market(self) -> Market:
        if self.market is None:
            raise ScenarioError([f"{self.name}: this command needs a two-group 'market' table"])
        return self.market

    def require_mmarket(self) -> MultiMarket:
        if self.mmarket is None:
            raise ScenarioError([f"{self.name}: this command needs an 'mmarket' table"])
        return self.mmarket

    def wage(self, key: str) -> Optional[WageFunction]:
        return self.wages.get(key)


def list_presets() -> List[str]:
    if not PRESET_DIR.is_dir():
        return []
    return sorted(p.stem for p in PRESET_DIR.glob("*.yaml"))


def resolve_scenario_path(ref: str) -> Path:
    """Preset name or file path."""
    path = Path(ref)
    if path.suffix in (".yaml", ".yml") or path.exists():
        return path
    preset = PRESET_DIR / f"{ref}.yaml"
    if preset.exists():
        return preset
    raise ScenarioError([f"unknown scenario '{ref}'; presets: {', '.join(list_presets())}"])


def _line_index(node: Optional[yaml.Node], prefix: str = "") -> Dict[str, int]:
    """Map dotted key paths to 1-based source lines."""
    index: Dict[str, int] = {}
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            path = f"{prefix}.{key_node.value}" if prefix else str(key_node.value)
            index[path] = key_node.start_mark.line + 1
            index.update(_line_index(value_node, path))
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            path = f"{prefix}[{i}]"
            index[path] = item.start_mark.line + 1
            index.update(_line_index(item, path))
    return index


class _Diagnostics:
    def __init__(self, source: str, lines: Dict[str, int]):
        self.source = source
        self.lines = lines
        self.items: List[str] = []

    def add(self, key: str, message: str) -> None:
        line = self.lines.get(key)
        where = f"{self.source}:{line}" if line else self.source
        self.items.append(f"{where}: {key}: {message}")


def scenario_digest(raw: Dict[str, Any]) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _dist(desc: Any, key: str, diag: _Diagnostics) -> Optional[ProductivityDist]:
    if not isinstance(desc, dict):
        diag.add(key, "expected a distribution table with a 'kind'")
        return None
    try:
        return dist_from_descriptor(desc)
    except EpswError as e:
        diag.add(key, str(e))
    except (TypeError, ValueError, KeyError) as e:
        diag.add(key, f"malformed distribution: {e}")
    return None


def _market(table: Any, diag: _Diagnostics, strict_regularity: bool = False) -> Optional[Market]:
    if not isinstance(table, dict):
        diag.add("market", "expected a table with beta, dist_A and dist_B")
        return None
    beta = table.get("beta", 1.0)
    ok = True
    if not isinstance(beta, (int, float)) or isinstance(beta, bool):
        diag.add("market.beta", f"beta must be a number, got {beta!r}")
        ok = False
    elif beta < 1.0:
        diag.add("market.beta", f"beta < 1 (got {beta})")
        ok = False
    dist_A = _dist(table.get("dist_A"), "market.dist_A", diag)
    dist_B = _dist(table.get("dist_B"), "market.dist_B", diag)
    if not ok or dist_A is None or dist_B is None:
        return None
    for key, dist in (("market.dist_A", dist_A), ("market.dist_B", dist_B)):
        try:
            report = regularity(dist, strict=strict_regularity)
        except EpswError as e:
            diag.add(key, str(e))
            ok = False
            continue
        if not report.strictly_positive:
            logger.warning(f"{diag.source}: {key} is not bounded away from zero")
    if not ok:
        return None
    return Market(float(beta), dist_A, dist_B)


def _mmarket(table: Any, diag: _Diagnostics) -> Optional[MultiMarket]:
    if not isinstance(table, dict):
        diag.add("mmarket", "expected a table with n_firms and groups")
        return None
    n = table.get("n_firms")
    if not isinstance(n, int) or n < 2:
        diag.add("mmarket.n_firms", f"n_firms must be an integer >= 2, got {n!r}")
        n = None
    groups = table.get("groups")
    if not isinstance(groups, list) or not groups:
        diag.add("mmarket.groups", "expected a non-empty list of groups")
        return None
    specs = []
    for i, g in enumerate(groups):
        key = f"mmarket.groups[{i}]"
        if not isinstance(g, dict):
            diag.add(key, "expected a table with name, size and dist")
            continue
        dist = _dist(g.get("dist"), f"{key}.dist", diag)
        size = g.get("size")
        if not isinstance(size, (int, float)) or size <= 0:
            diag.add(f"{key}.size", f"size must be positive, got {size!r}")
            continue
        if dist is not None:
            specs.append(GroupSpec(str(g.get("name", f"G{i + 1}")), float(size), dist))
    if n is None or len(specs) != len(groups):
        return None
    try:
        return MultiMarket(n, tuple(specs))
    except EpswError as e:
        diag.add("mmarket", str(e))
        return None


def parse_scenario(ref: str, strict_regularity: bool = False) -> Scenario:
    """Read, validate and build a scenario; raises ScenarioError listing every problem.

    With ``strict_regularity`` a density that touches zero is a diagnostic instead of a warning.
    """
    path = resolve_scenario_path(ref)
    try:
        text = path.read_text()
    except OSError as e:
        raise ScenarioError([f"{path}: cannot read scenario: {e}"]) from e
    try:
        raw = yaml.safe_load(text)
        lines = _line_index(yaml.compose(text))
    except yaml.YAMLError as e:
        raise ScenarioError([f"{path}: not valid YAML: {e}"]) from e
    if not isinstance(raw, dict):
        raise ScenarioError([f"{path}: expected a table at the top level"])

    diag = _Diagnostics(str(path), lines)
    regime = str(raw.get("regime", "none")).lower()
    if regime not in REGIMES:
        diag.add("regime", f"unknown regime '{regime}' (expected one of {', '.join(REGIMES)})")

    market = _market(raw["market"], diag, strict_regularity) if "market" in raw else None
    mmarket = _mmarket(raw["mmarket"], diag) if "mmarket" in raw else None
    if "market" not in raw and "mmarket" not in raw:
        diag.add("market", "a scenario needs a 'market' or an 'mmarket' table")
    if regime in ("group", "hetero", "bias") and "market" not in raw:
        diag.add("market", f"regime '{regime}' needs a two-group market")

    bias = raw.get("bias")
    if bias is not None:
        if not isinstance(bias, (int, float)) or not 0.0 < bias < 1.0:
            diag.add("bias", "lambda outside (0,1)")
            bias = None
        else:
            bias = float(bias)
    elif regime == "bias":
        diag.add("bias", "regime 'bias' needs a lambda value")

    wages: Dict[str, WageFunction] = {}
    for name, desc in (raw.get("wages") or {}).items():
        try:
            wages[str(name)] = wage_from_descriptor(desc)
        except EpswError as e:
            diag.add(f"wages.{name}", str(e))

    solver = raw.get("solver") or {}
    if not isinstance(solver, dict):
        diag.add("solver", "expected a table of solver overrides")
        solver = {}

    if diag.items:
        for item in diag.items:
            logger.error(f"scenario diagnostic: {item}")
        raise ScenarioError(diag.items)

    scenario = Scenario(
        name=str(raw.get("name", path.stem)),
        regime=regime,
        market=market,
        mmarket=mmarket,
        bias=bias,
        wages=wages,
        solver=dict(solver),
        params=dict(raw.get("params") or {}),
        source=path,
        digest=scenario_digest(raw),
    )
    logger.info(f"scenario '{scenario.name}' loaded from {path} (regime={regime})")
    return scenario


def solver_settings(scenario: Scenario, defaults: Dict[str, Any]) -> Tuple[Dict[str, Any], List[str]]:
    """Global defaults overlaid with the scenario's solver table; unknown keys are reported."""
    merged = dict(defaults)
    unknown = []
    for key, value in scenario.solver.items():
        if key in merged:
            merged[key] = value
        else:
            unknown.append(key)
    return merged, unknown
