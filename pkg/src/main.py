"""Command-line entry point for epswcore."""

import functools
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

# Add parent directory to path for imports
if __name__ == "__main__":
    sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import click
import numpy as np
from rich.console import Console
from rich.markup import escape

from src import __version__
from src.core.blocking_oracle import oracle_is_core, recheck_certificate
from src.core.core_no_epsw import bertrand, verify_no_epsw_core
from src.core.errors import EpswError, NoCoreError, NotCoreError, ParameterError, ScenarioError, StructureError
from src.core.export_manager import ExportManager, ExportOptions, RunManifest, table_columns
from src.core.extensions import (
    BiasParams,
    bias_gap_interval,
    bias_group_family,
    hetero_example,
    hetero_verify,
)
from src.core.group_epsw import (
    beta_star,
    build_phi_curve,
    complete_w1,
    core_exists_with_w2,
    delta_sweep,
    firm2_profit,
    shortfall_bound,
    verify_group_core,
)
from src.core.market import GroupSpec, MultiMarket, Outcome, accounting
from src.core.nongroup_epsw import (
    anything_goes_scenarios,
    multifirm_chain,
    multifirm_core,
    nongroup_core,
    nongroup_sweep,
    unemployment_profit_table,
    w1_star,
    wage_spread_scenarios,
)
from src.core.numerics import Tolerance
from src.core.wages import WageFunction, wage_from_descriptor, zero
from src.models import Regime
from src.utils.config import ConfigManager
from src.utils.scenario import Scenario, parse_scenario, solver_settings

logger = logging.getLogger(__name__)
console = Console(stderr=True)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NEGATIVE = 2

_REGIME_OF_SCENARIO = {
    "none": Regime.NO_EPSW,
    "hetero": Regime.NO_EPSW,
    "group": Regime.GROUP,
    "bias": Regime.GROUP,
    "nongroup": Regime.NONGROUP,
}

F = TypeVar("F", bound=Callable[..., Any])


@dataclass
class AppContext:
    config: ConfigManager
    exporter: ExportManager
    started: float = field(default_factory=time.perf_counter)


def setup_logging(config: ConfigManager, debug: bool) -> None:
    """File log always; stderr too with --debug. Stdout carries data only."""
    handlers: List[logging.Handler] = []
    try:
        log_file = config.log_path
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file, mode='a'))
    except OSError:
        handlers.append(logging.NullHandler())
    level = getattr(logging, str(config.logging_config.level).upper(), logging.INFO)
    if debug:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(logging.DEBUG)
        handlers.append(console_handler)
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def handle_errors(func: F) -> F:
    """Map library errors onto the exit-code contract."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except (NotCoreError, NoCoreError) as e:
            logger.info(f"{func.__name__}: negative verdict: {e}")
            console.print(f"[yellow]not core:[/yellow] {escape(str(e))}")
            sys.exit(EXIT_NEGATIVE)
        except ScenarioError as e:
            logger.error(f"{func.__name__}: invalid scenario: {e}")
            for item in e.diagnostics:
                console.print(f"[red]scenario error:[/red] {escape(item)}")
            sys.exit(EXIT_ERROR)
        except EpswError as e:
            logger.error(f"{func.__name__}: {type(e).__name__}: {e}", exc_info=True)
            console.print(f"[red]error:[/red] {type(e).__name__}: {escape(str(e))}")
            sys.exit(EXIT_ERROR)
        except OSError as e:
            logger.error(f"{func.__name__}: {e}", exc_info=True)
            console.print(f"[red]error:[/red] {escape(str(e))}")
            sys.exit(EXIT_ERROR)

    return wrapper  # type: ignore[return-value]


class EpswGroup(click.Group):
    """Usage errors exit with 1 so that 2 stays reserved for negative verdicts."""

    def make_context(
        self,
        info_name: Optional[str],
        args: List[str],
        parent: Optional[click.Context] = None,
        **extra: Any,
    ) -> click.Context:
        try:
            return super().make_context(info_name, args, parent=parent, **extra)
        except click.UsageError as e:
            e.exit_code = EXIT_ERROR
            raise

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = EXIT_ERROR
            raise


def _app(ctx: click.Context) -> AppContext:
    return ctx.find_object(AppContext)  # type: ignore[no-any-return]


def _settings(app: AppContext, scenario: Scenario) -> Dict[str, Any]:
    defaults = {
        **asdict(app.config.solver),
        "bins": app.config.oracle.bins,
        "wage_step": app.config.oracle.wage_step,
    }
    merged, unknown = solver_settings(scenario, defaults)
    for key in unknown:
        logger.warning(f"scenario {scenario.name}: ignoring unknown solver setting '{key}'")
    return merged


def _tolerance(settings: Dict[str, Any]) -> Tolerance:
    return Tolerance(
        abs_tol=float(settings["abs_tol"]),
        rel_tol=float(settings["rel_tol"]),
        max_iter=int(settings["max_iter"]),
    )


def _manifest(app: AppContext, command: str, scenario: Optional[Scenario], settings: Dict[str, Any]) -> RunManifest:
    keys = ("econ_tol", "abs_tol", "rel_tol", "grid_size", "bins", "wage_step")
    return RunManifest(
        command=command,
        scenario=scenario.name if scenario else "",
        scenario_hash=scenario.digest if scenario else "",
        version=__version__,
        tolerances={k: settings[k] for k in keys if k in settings},
        wall_time=time.perf_counter() - app.started,
    )


def _emit_json(app: AppContext, manifest: RunManifest, result: Dict[str, Any], out: Optional[str]) -> None:
    if out:
        manifest.wall_time = time.perf_counter() - app.started
        app.exporter.export_to_json(manifest, result, out)
    click.echo(app.exporter.render_json(manifest, result), nl=False)


def _emit_table(
    app: AppContext,
    manifest: RunManifest,
    table: str,
    rows: Sequence[Dict[str, Any]],
    out: Optional[str],
    summary: Dict[str, Any],
) -> None:
    columns = table_columns(table)
    if out:
        manifest.wall_time = time.perf_counter() - app.started
        app.exporter.export_to_csv(manifest, rows, columns, out)
        click.echo(app.exporter.render_json(manifest, {**summary, "rows": len(rows), "out": out}), nl=False)
    else:
        click.echo(app.exporter.render_csv(rows, columns), nl=False)


def _wage_option(
    raw: Optional[str], scenario: Scenario, key: str, default: Optional[WageFunction] = None
) -> Optional[WageFunction]:
    if raw:
        return wage_from_descriptor(raw)
    return scenario.wage(key) or default


def _load_outcome(path: str) -> Outcome:
    """Outcome document, or a result document that embeds one under 'outcome'."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise StructureError(f"{path} is not valid JSON: {e}") from e
    if isinstance(doc, dict) and "assignments" not in doc:
        doc = (doc.get("result") or {}).get("outcome", doc)
    return Outcome.from_dict(doc)


def _parse_v_set(raw: str) -> List[Tuple[float, float]]:
    """'0.2:0.4,0.6:0.8' -> [(0.2, 0.4), (0.6, 0.8)]."""
    out = []
    for part in raw.split(","):
        if not part.strip():
            continue
        lo, sep, hi = part.partition(":")
        if not sep:
            raise ParameterError(f"interval '{part}' must look like lo:hi")
        try:
            out.append((float(lo), float(hi)))
        except ValueError as e:
            raise ParameterError(f"interval '{part}' is not numeric") from e
    return out


scenario_option = click.option(
    '--scenario', '-s', 'scenario_ref', required=True, help='Preset name or path to a scenario YAML file'
)
out_option = click.option('--out', '-o', type=click.Path(dir_okay=False), help='Write the result to this file')


@click.group(cls=EpswGroup)
@click.option('--debug', is_flag=True, help='Enable debug logging to stderr')
@click.option('--config', '-c', type=click.Path(exists=True), help='Path to a configuration YAML file')
@click.version_option(__version__, prog_name="epswcore")
@click.pass_context
def main(ctx: click.Context, debug: bool, config: Optional[str]) -> None:
    """epswcore - core outcomes of labour markets under equal-pay rules."""
    manager = ConfigManager()
    try:
        manager.load_config(config)
    except EpswError as e:
        console.print(f"[red]configuration error:[/red] {escape(str(e))}")
        sys.exit(EXIT_ERROR)
    setup_logging(manager, debug)
    options = ExportOptions(
        float_format=manager.export_config.float_format,
        json_indent=manager.export_config.json_indent,
        write_manifest=manager.export_config.write_manifest,
    )
    ctx.obj = AppContext(config=manager, exporter=ExportManager(options))
    logger.debug(f"epswcore {__version__} started (config={manager.source})")


@main.command('bertrand')
@scenario_option
@click.option('--split', type=float, default=0.5, show_default=True, help='Productivity where firm 2 takes over')
@out_option
@click.pass_context
@handle_errors
def bertrand_cmd(ctx: click.Context, scenario_ref: str, split: float, out: Optional[str]) -> None:
    """Competitive outcome without an equal-pay law and its core check."""
    app = _app(ctx)
    sc = parse_scenario(scenario_ref, app.config.distributions.strict_regularity)
    s = _settings(app, sc)
    market = sc.require_market()
    result = bertrand(market, split)
    verdict = verify_no_epsw_core(market, result.outcome, s["econ_tol"])
    payload = {
        "split": result.split,
        "is_core": verdict.is_core,
        "violations": [asdict(v) for v in verdict.violations],
        "accounting": accounting(market, result.outcome).to_dict(),
        "outcome": result.outcome.to_dict(),
    }
    _emit_json(app, _manifest(app, "bertrand", sc, s), payload, out)
    if not verdict.is_core:
        sys.exit(EXIT_NEGATIVE)


@main.command('phi-curve')
@scenario_option
@click.option('--grid', type=int, help='Number of eps grid points')
@click.option('--w2', 'w2_raw', help="B-group wage, e.g. 'linear:0.5'")
@out_option
@click.pass_context
@handle_errors
def phi_curve_cmd(
    ctx: click.Context, scenario_ref: str, grid: Optional[int], w2_raw: Optional[str], out: Optional[str]
) -> None:
    """Sample phi, its monotone minorant and the desegregation slack on an eps grid."""
    app = _app(ctx)
    sc = parse_scenario(scenario_ref, app.config.distributions.strict_regularity)
    s = _settings(app, sc)
    if grid:
        s["grid_size"] = grid
    market = sc.require_market()
    w2 = _wage_option(w2_raw, sc, "w2", zero())
    assert w2 is not None
    curve = build_phi_curve(market, w2, int(s["grid_size"]), _tolerance(s))
    rows = [
        {"epsilon": e, "phi": p, "w1hat_inv": q, "ndc_slack": n}
        for e, p, q, n in zip(curve.eps_grid, curve.phi, curve.w1hat_inv, curve.ndc_slack)
    ]
    _emit_table(app, _manifest(app, "phi-curve", sc, s), "phi-curve", rows, out, curve.summary())


@main.command('group-exists')
@scenario_option
@click.option('--w2', 'w2_raw', help='B-group wage descriptor')
@out_option
@click.pass_context
@handle_errors
def group_exists_cmd(
    ctx: click.Context, scenario_ref: str, w2_raw: Optional[str], out: Optional[str]
) -> None:
    """Whether a group-law core paying the given B-group wage exists."""
    app = _app(ctx)
    sc = parse_scenario(scenario_ref, app.config.distributions.strict_regularity)
    s = _settings(app, sc)
    market = sc.require_market()
    w2 = _wage_option(w2_raw, sc, "w2", zero())
    assert w2 is not None
    res = core_exists_with_w2(market, w2, int(s["grid_size"]), float(s["econ_tol"]), _tolerance(s))
    payload = {
        "exists": res.exists,
        "pi1_hat": res.pi1_hat,
        "pi2": res.pi2,
        "curve": res.curve.summary() if res.curve else None,
    }
    _emit_json(app, _manifest(app, "group-exists", sc, s), payload, out)
    if not res.exists:
        sys.exit(EXIT_NEGATIVE)


@main.command('group-verify')
@scenario_option
@click.option('--w1', 'w1_raw', help='A-group wage descriptor; built from the phi curve when omitted')
@click.option('--w2', 'w2_raw', help='B-group wage descriptor')
@click.option('--outcome', 'outcome_path', type=click.Path(exists=True, dir_okay=False), help='Segregated outcome JSON')
@out_option
@click.pass_context
@handle_errors
def group_verify_cmd(
    ctx: click.Context,
    scenario_ref: str,
    w1_raw: Optional[str],
    w2_raw: Optional[str],
    outcome_path: Optional[str],
    out: Optional[str],
) -> None:
    """Check individual rationality, equal profit and no desegregation for a segregated pair."""
    app = _app(ctx)
    sc = parse_scenario(scenario_ref, app.config.distributions.strict_regularity)
    s = _settings(app, sc)
    market = sc.require_market()
    econ_tol = float(s["econ_tol"])
    x_star: Optional[float] = None

    if outcome_path:
        outcome = _load_outcome(outcome_path)
        w1, w2 = outcome.wage(1, "A"), outcome.wage(2, "B")
        if w1 is None or w2 is None:
            raise StructureError("the outcome must have firm 1 hiring group A and firm 2 hiring group B")
    else:
        w2 = _wage_option(w2_raw, sc, "w2", zero())
        assert w2 is not None
        w1 = _wage_option(w1_raw, sc, "w1")
        if w1 is None:
            res = core_exists_with_w2(market, w2, int(s["grid_size"]), econ_tol, _tolerance(s))
            completed = complete_w1(market, w2, res.curve, econ_tol, _tolerance(s))
            w1, x_star = completed.w1, completed.x_star

    report = verify_group_core(market, w1, w2, int(s["grid_size"]), econ_tol)
    shortfall = shortfall_bound(market, w1, firm2_profit(market, w2), econ_tol)
    payload = {
        **report.to_dict(),
        "x_star": x_star,
        "shortfall_bound": asdict(shortfall),
        "w1": w1.to_list(),
        "w2": w2.to_list(),
    }
    _emit_json(app, _manifest(app, "group-verify", sc, s), payload, out)
    if not report.is_core:
        sys.exit(EXIT_NEGATIVE)


@main.command('delta-family')
@scenario_option
@click.option('--points', type=int, help='Number of evenly spaced caps on [0, 1]')
@click.option('--delta', 'deltas', type=float, multiple=True, help='Explicit caps (repeatable)')
@out_option
@click.pass_context
@handle_errors
def delta_family_cmd(
    ctx: click.Context, scenario_ref: str, points: Optional[int], deltas: Tuple[float, ...], out: Optional[str]
) -> None:
    """Equal-profit cap/threshold outcomes for a sweep of caps."""
    app = _app(ctx)
    sc = parse_scenario(scenario_ref, app.config.distributions.strict_regularity)
    s = _settings(app, sc)
    market = sc.require_market()
    grid = list(deltas) if deltas else list(np.linspace(0.0, 1.0, points or int(s["sweep_points"])))
    members = delta_sweep(market, grid, float(s["econ_tol"]))
    rows = [
        {"delta": m.delta, "delta_prime": m.delta_prime, "profit": m.profit, "gap": m.gap, "is_core": m.supportable}
        for m in members
    ]
    summary = {"requested": len(grid), "feasible": len(rows)}
    _emit_table(app, _manifest(app, "delta-family", sc, s), "delta-family", rows, out, summary)


@main.command('beta-star')
@scenario_option
@click.option('--w2', 'w2_raw', help='B-group wage descriptor')
@click.option('--beta-hi', type=float, help='Upper end of the beta search')
@out_option
@click.pass_context
@handle_errors
def beta_star_cmd(
    ctx: click.Context, scenario_ref: str, w2_raw: Optional[str], beta_hi: Optional[float], out: Optional[str]
) -> None:
    """Smallest A-group size at which a core paying w2 exists."""
    app = _app(ctx)
    sc = parse_scenario(scenario_ref, app.config.distributions.strict_regularity)
    s = _settings(app, sc)
    market = sc.require_market()
    w2 = _wage_option(w2_raw, sc, "w2", zero())
    assert w2 is not None
    hi = float(beta_hi if beta_hi is not None else s["beta_hi"])
    value = beta_star(market.dist_A, market.dist_B, w2, hi, int(s["grid_size"]), float(s["econ_tol"]))
    payload = {"beta_star": value, "beta_hi": hi, "supportable": bool(np.isfinite(value))}
    _emit_json(app, _manifest(app, "beta-star", sc, s), payload, out)
    if not np.isfinite(value):
        sys.exit(EXIT_NEGATIVE)


@main.command('nongroup')
@scenario_option
@click.option('--w1', type=float, help="Firm 1's uniform wage; defaults to the largest supportable one")
@out_option
@click.pass_context
@handle_errors
def nongroup_cmd(
    ctx: click.Context, scenario_ref: str, w1: Optional[float], out: Optional[str]
) -> None:
    """Uniform-wage core under a non-group law."""
    app = _app(ctx)
    sc = parse_scenario(scenario_ref, app.config.distributions.strict_regularity)
    s = _settings(app, sc)
    market = sc.require_market()
    if w1 is None:
        w1 = w1_star(market)
    core = nongroup_core(market, w1)
    payload = {
        **core.row(),
        "w1_star": core.w1_star,
        "outcome": core.outcome.to_dict() if core.outcome else None,
    }
    _emit_json(app, _manifest(app, "nongroup", sc, s), payload, out)


@main.command('nongroup-sweep')
@scenario_option
@click.option('--points', type=int, help='Number of w1 values on [0, w1_star]')
@out_option
@click.pass_context
@handle_errors
def nongroup_sweep_cmd(
    ctx: click.Context, scenario_ref: str, points: Optional[int], out: Optional[str]
) -> None:
    """Profit, unemployment and gap along the uniform-wage cores."""
    app = _app(ctx)
    sc = parse_scenario(scenario_ref, app.config.distributions.strict_regularity)
    s = _settings(app, sc)
    market = sc.require_market()
    cores = nongroup_sweep(market, points or int(s["sweep_points"]))
    rows = unemployment_profit_table(cores)
    summary = {"w1_star": cores[-1].w1_star}
    _emit_table(app, _manifest(app, "nongroup-sweep", sc, s), "nongroup-sweep", rows, out, summary)


@main.command('multifirm')
@scenario_option
@click.option('--n', 'n_firms', type=int, help='Number of firms; defaults to the scenario')
@click.option('--w1', type=float, default=0.0, show_default=True, help='Lowest wage')
@out_option
@click.pass_context
@handle_errors
def multifirm_cmd(
    ctx: click.Context, scenario_ref: str, n_firms: Optional[int], w1: float, out: Optional[str]
) -> None:
    """Equal-profit wage ladder of n firms under a non-group law."""
    app = _app(ctx)
    sc = parse_scenario(scenario_ref, app.config.distributions.strict_regularity)
    s = _settings(app, sc)
    if sc.mmarket is not None:
        mm = sc.mmarket
    else:
        market = sc.require_market()
        total = market.beta + 1.0
        specs = (
            GroupSpec("A", market.beta / total, market.dist_A),
            GroupSpec("B", 1.0 / total, market.dist_B),
        )
        mm = MultiMarket(2, specs)
    if n_firms is not None:
        mm = MultiMarket(n_firms, mm.group_specs)
    core = multifirm_core(mm, w1)
    chain = multifirm_chain(mm, core.p_star)
    payload = {
        "n_firms": mm.n_firms,
        "wages": core.wages,
        "p": core.p,
        "p_star": core.p_star,
        "w1_star": core.w1_star,
        "unemployed_measure": core.unemployed_measure,
        "profits": core.profits,
        "chain_at_p_star": {"wages": chain.wages, "eta": chain.eta},
    }
    _emit_json(app, _manifest(app, "multifirm", sc, s), payload, out)


@main.command('remark7')
@click.option('--scenario', '-s', 'scenario_ref', default='remark7', show_default=True, help='Preset or path carrying params.eps')
@click.option('--eps', type=float, help='Tilt of the step densities')
@click.option('--beta', type=float, help='A-group size for the gap market')
@out_option
@click.pass_context
@handle_errors
def remark7_cmd(
    ctx: click.Context, scenario_ref: str, eps: Optional[float], beta: Optional[float], out: Optional[str]
) -> None:
    """Non-group cores whose gaps and spreads land on either side of the no-law benchmark."""
    app = _app(ctx)
    sc = parse_scenario(scenario_ref, app.config.distributions.strict_regularity)
    s = _settings(app, sc)
    eps = float(eps if eps is not None else sc.params.get("eps", 0.05))
    payload: Dict[str, Any] = {"eps": eps}
    if eps <= 0.125:
        payload["spread"] = wage_spread_scenarios(eps).to_dict()
    if eps < 0.1:
        payload["gap"] = anything_goes_scenarios(eps, beta).to_dict()
    if len(payload) == 1:
        raise ParameterError(f"eps={eps} admits neither construction; use eps <= 1/8")
    _emit_json(app, _manifest(app, "remark7", sc, s), payload, out)


@main.command('bias-interval')
@scenario_option
@click.option('--lambda', 'lam', type=float, help="Firm 1's bias; defaults to the scenario's")
@out_option
@click.pass_context
@handle_errors
def bias_interval_cmd(
    ctx: click.Context, scenario_ref: str, lam: Optional[float], out: Optional[str]
) -> None:
    """Range of wage gaps reachable without an equal-pay law when firm 1 is biased."""
    app = _app(ctx)
    sc = parse_scenario(scenario_ref, app.config.distributions.strict_regularity)
    s = _settings(app, sc)
    market = sc.require_market()
    bias = BiasParams(_bias_value(lam, sc))
    interval = bias_gap_interval(market, bias)
    payload = {"lam": bias.lam, "lo": interval.lo, "hi": interval.hi}
    _emit_json(app, _manifest(app, "bias-interval", sc, s), payload, out)


def _bias_value(lam: Optional[float], scenario: Scenario) -> float:
    value = lam if lam is not None else scenario.bias
    if value is None:
        raise ParameterError("no bias given: pass --lambda or use a scenario with 'bias'")
    return float(value)


@main.command('bias-family')
@scenario_option
@click.option('--lambda', 'lam', type=float, help="Firm 1's bias")
@click.option('--vbar1', type=float, help='Where firm 1 stops raising A-group wages')
@out_option
@click.pass_context
@handle_errors
def bias_family_cmd(
    ctx: click.Context, scenario_ref: str, lam: Optional[float], vbar1: Optional[float], out: Optional[str]
) -> None:
    """Group-law core with a biased firm whose gap exceeds the no-law maximum."""
    app = _app(ctx)
    sc = parse_scenario(scenario_ref, app.config.distributions.strict_regularity)
    s = _settings(app, sc)
    market = sc.require_market()
    bias = BiasParams(_bias_value(lam, sc))
    vbar = float(vbar1 if vbar1 is not None else sc.params.get("vbar1", 0.95))
    member = bias_group_family(market, bias, vbar)
    payload = {
        "lam": bias.lam,
        "vbar1": member.vbar1,
        "vbar2": member.vbar2,
        "gap": member.gap,
        "g_breve": member.g_breve,
        "reduction": member.reduction,
        "exceeds_no_law_maximum": member.gap > member.g_breve,
        "outcome": member.outcome.to_dict(),
    }
    _emit_json(app, _manifest(app, "bias-family", sc, s), payload, out)


@main.command('hetero-verify')
@scenario_option
@click.option('--v-set', 'v_set', help="A-group intervals hired by firm 1, e.g. '0.2:0.4,0.6:0.8'")
@click.option('--outcome', 'outcome_path', type=click.Path(exists=True, dir_okay=False), help='Outcome JSON to check instead')
@out_option
@click.pass_context
@handle_errors
def hetero_verify_cmd(
    ctx: click.Context, scenario_ref: str, v_set: Optional[str], outcome_path: Optional[str], out: Optional[str]
) -> None:
    """Core check when only firm 1 is bound by the equal-pay law."""
    app = _app(ctx)
    sc = parse_scenario(scenario_ref, app.config.distributions.strict_regularity)
    s = _settings(app, sc)
    market = sc.require_market()
    if outcome_path:
        outcome = _load_outcome(outcome_path)
    else:
        intervals = _parse_v_set(v_set) if v_set else [tuple(p) for p in sc.params.get("v_set", [])]
        outcome = hetero_example(market, intervals)  # type: ignore[arg-type]
    verdict = hetero_verify(market, outcome, float(s["econ_tol"]))
    payload = {
        "is_core": verdict.is_core,
        "firm1_groups": verdict.firm1_groups,
        "gap": verdict.gap,
        "violations": [asdict(v) for v in verdict.violations],
        "outcome": outcome.to_dict(),
    }
    _emit_json(app, _manifest(app, "hetero-verify", sc, s), payload, out)
    if not verdict.is_core:
        sys.exit(EXIT_NEGATIVE)


@main.command('oracle')
@scenario_option
@click.option('--outcome', 'outcome_path', required=True, type=click.Path(exists=True, dir_okay=False), help='Outcome JSON')
@click.option('--regime', type=click.Choice([r.value for r in Regime]), help="Equal-pay regime; defaults to the scenario's")
@click.option('--bins', type=int, help='Productivity cells (8 to 256)')
@out_option
@click.pass_context
@handle_errors
def oracle_cmd(
    ctx: click.Context,
    scenario_ref: str,
    outcome_path: str,
    regime: Optional[str],
    bins: Optional[int],
    out: Optional[str],
) -> None:
    """Search the discretised market for a profitable deviation."""
    app = _app(ctx)
    sc = parse_scenario(scenario_ref, app.config.distributions.strict_regularity)
    s = _settings(app, sc)
    if bins:
        s["bins"] = bins
    market = sc.market if sc.market is not None else sc.require_mmarket()
    outcome = _load_outcome(outcome_path)
    chosen = Regime(regime) if regime else _REGIME_OF_SCENARIO[sc.regime]
    verdict = oracle_is_core(
        market, outcome, chosen, int(s["bins"]), sc.bias, float(s["econ_tol"]), float(s["wage_step"])
    )
    payload = verdict.to_dict()
    if verdict.certificate is not None:
        payload["continuum_gain"] = recheck_certificate(market, outcome, verdict.certificate, sc.bias)
    _emit_json(app, _manifest(app, "oracle", sc, s), payload, out)
    if verdict.certificate is not None:
        sys.exit(EXIT_NEGATIVE)


if __name__ == "__main__":
    main()
