import os
import sys
import time
import logging
from typing import Any, Callable, Dict, List, Optional, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

# Load environment variables from .env file
load_dotenv()

from tools import __version__
from tools.artifacts import ArtifactWriter
from tools.comparison import TriangleSides
from tools.core import P_INF, SpaceDescriptor, SpaceKind, causal_relation, format_p, format_real, sample_net
from tools.curvature import (
    bound_violation_certificate,
    dyadic_grid,
    median_defect,
    quadruple_search,
    scaling_exponent,
)
from tools.errors import InconclusiveError, PreconditionError
from tools.gh import p_sweep, sweep_to_csv
from tools.hausdorff import (
    covering_table,
    cylinder_measure_estimate,
    dimension_estimate,
    measure_estimate,
    table_to_csv,
)
from tools.lp_spaces import (
    DefectMode,
    LorentzVector,
    lp_plane_distance,
    parallelogram_defect,
    tau_infinity,
    tau_p,
)
from tools.noldus import covering_number, distinguishes_points, noldus_metric_net, steepness_probe
from tools.run_config import RunConfig, parse_config

LOGGER = logging.getLogger("lorlab")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INCONCLUSIVE = 3
EXIT_INTERNAL = 4

TAU_UNITS = "proper time (τ^p), same units as t"


def build_space(cfg: RunConfig) -> SpaceDescriptor:
    if cfg.space == "sphere":
        return SpaceDescriptor.sphere(cfg.k)
    if cfg.space == "normed":
        return SpaceDescriptor.normed_plane(cfg.p_value)
    if cfg.space == "cylinder":
        return SpaceDescriptor.lorentz_cylinder(cfg.p_value, cfg.height, cfg.circumference)
    return SpaceDescriptor.lorentz_plane(cfg.p_value)


def _csv_header(cfg: RunConfig, units: str, mesh: str) -> Dict[str, Any]:
    return {"command": cfg.command, "units": units, "mesh": mesh,
            "tolerance": format_real(cfg.tolerance), "version": __version__}


def run_tau(cfg: RunConfig) -> Dict[str, Any]:
    """τ^p (or τ^∞, or the l^p distance) between --from and --to."""
    space = build_space(cfg)
    a, b = space.event(*cfg.from_event), space.event(*cfg.to_event)
    if space.is_lorentzian:
        value = tau_infinity(a, b, space) if space.p is P_INF else tau_p(a, b, space)
        relation = causal_relation(a, b, space).value
    else:
        value = lp_plane_distance(a, b, space.p)
        relation = None
    result = {"space": space.to_dict(), "from": list(cfg.from_event), "to": list(cfg.to_event),
              "value": value, "relation": relation}
    return {"status": "success", "lines": [format_real(value)], "result": result, "json": result}


def run_defect(cfg: RunConfig) -> Dict[str, Any]:
    """E(p) of the pair and the median defect at λ = 1, in both orientations when admissible."""
    mode = DefectMode(cfg.mode)
    x, y = LorentzVector(*cfg.x), LorentzVector(*cfg.y)
    if mode is DefectMode.LORENTZ:
        space = build_space(cfg)
        if not space.is_lorentzian:
            raise PreconditionError("lorentz mode needs --space plane or cylinder")
    else:
        space = SpaceDescriptor.normed_plane(cfg.p_value)
    result: Dict[str, Any] = {
        "p": cfg.p,
        "mode": mode.value,
        "parallelogram_defect": parallelogram_defect(x, y, cfg.p_value, mode),
        "median_defect": median_defect(space, x, y, 1.0),
    }
    u, v = (x + y).scaled(0.5), (x - y).scaled(0.5)
    try:
        result["swapped_parallelogram_defect"] = parallelogram_defect(u, v, cfg.p_value, mode)
    except PreconditionError as exc:
        LOGGER.warning("swapped pair not admissible: %s", exc)
    lines = [f"E = {format_real(result['parallelogram_defect'])}",
             f"median defect = {format_real(result['median_defect'])}"]
    return {"status": "success", "lines": lines, "result": result, "json": result}


def run_curvature_scan(cfg: RunConfig) -> Dict[str, Any]:
    """Defect profile over the dyadic λ grid plus bound certificates for each kProbe."""
    space = build_space(cfg)
    grid = dyadic_grid(cfg.lambda_first, cfg.lambda_last)
    result: Dict[str, Any] = {"space": space.to_dict()}
    certificates: List[Dict[str, Any]] = []
    if space.kind is SpaceKind.SPHERE:
        profile = scaling_exponent(space, grid, sides=TriangleSides(*cfg.sides))
    else:
        if cfg.x is not None and cfg.y is not None:
            x, y = LorentzVector(*cfg.x), LorentzVector(*cfg.y)
        elif space.is_lorentzian:
            witness = quadruple_search(space, cfg.grid_radius)
            if witness is None:
                x, y = LorentzVector(2.0, 0.0), LorentzVector(1.0, 0.25)
            else:
                x, y = witness.x, witness.y
        else:
            x, y = LorentzVector(1.0, 0.0), LorentzVector(0.0, 1.0)
        result.update(x=[x.v0, x.v1], y=[y.v0, y.v1])
        profile = scaling_exponent(space, grid, x, y)
        for k_probe in cfg.k_probes:
            certificate = bound_violation_certificate(space, x, y, k_probe, cfg.lambda_last)
            certificates.append(certificate.to_dict())
    result.update(fitted_exponent=profile.fitted_exponent, fitted_sign=profile.fitted_sign.value,
                  certificates=certificates)
    header = _csv_header(cfg, "lambda dimensionless; medians in the space's norm",
                         f"dyadic lambda 2^-{cfg.lambda_first}..2^-{cfg.lambda_last}")
    header["fitted_exponent"] = format_real(profile.fitted_exponent)
    header["fitted_sign"] = profile.fitted_sign.value
    lines = [f"fitted exponent = {format_real(profile.fitted_exponent)} ({profile.fitted_sign.value})"]
    lines += [f"k = {c['k_probe']}: {c['verdict']} / swapped {c['swapped_verdict']}" for c in certificates]
    return {"status": "success", "lines": lines, "result": result,
            "csv": profile.to_csv(), "header": header}


def run_noldus(cfg: RunConfig) -> Dict[str, Any]:
    """Noldus metric on one time slice of a sampled net, z ranging over the whole net."""
    space = build_space(cfg)
    if not space.is_lorentzian:
        raise PreconditionError("the Noldus metric needs a lorentzian plane or cylinder")
    net = sample_net(space, cfg.nt, cfg.nx)
    slice_index = cfg.nt // 2 if cfg.slice_index is None else cfg.slice_index
    if not 0 <= slice_index < cfg.nt:
        raise PreconditionError(f"slice index must lie in [0, {cfg.nt}), got {slice_index}")
    indices = range(slice_index * cfg.nx, (slice_index + 1) * cfg.nx)
    metric = noldus_metric_net(net, indices)
    result: Dict[str, Any] = {
        "slice_time": net.points[indices[0]].t,
        "covering_number": covering_number(metric, cfg.radius),
        "radius": cfg.radius,
        "diameter": metric.diameter,
        "distinguishes_points": distinguishes_points(net),
    }
    if space.p is not P_INF and space.p > 1:
        rows = steepness_probe(space.p, dyadic_grid(max(cfg.lambda_first, 2), cfg.lambda_last))
        result["steepness"] = [[row.lam, row.bound, row.slope] for row in rows]
    header = _csv_header(cfg, TAU_UNITS, f"mesh_t={format_real(net.mesh_t)} mesh_x={format_real(net.mesh_x)}")
    lines = [f"covering number at radius {cfg.radius}: {result['covering_number']}",
             f"Noldus diameter of the slice: {format_real(metric.diameter)}"]
    return {"status": "success", "lines": lines, "result": result, "csv": metric.to_csv(), "header": header}


def run_gh_sweep(cfg: RunConfig) -> Dict[str, Any]:
    """Closed-form, local-search and Noldus bounds for consecutive exponents (or against --reference-p)."""
    rows = p_sweep(cfg.p_list, cfg.nt, cfg.nx, cfg.height, cfg.circumference,
                   cfg.restarts, cfg.seed, cfg.reference_p, cfg.threads)
    mesh = (f"mesh_t={format_real(cfg.height / (cfg.nt - 1))} "
            f"mesh_x={format_real(cfg.circumference / cfg.nx)}")
    header = _csv_header(cfg, TAU_UNITS, mesh)
    header.update(seed=cfg.seed, restarts=cfg.restarts)
    result = {"rows": len(rows), "seed": cfg.seed, "restarts": cfg.restarts}
    lines = [f"{format_p(r.p)} → {format_p(r.q)}: [{format_real(r.lower_noldus)}, "
             f"{format_real(min(r.upper_closed, r.upper_search))}]" for r in rows]
    return {"status": "success", "lines": lines, "result": result, "csv": sweep_to_csv(rows), "header": header}


def run_hausdorff(cfg: RunConfig) -> Dict[str, Any]:
    """Dimension by bisection, then the measure at the bracket's upper end (or at --d)."""
    p = cfg.p_value
    dimension = dimension_estimate(p, cfg.max_levels)
    d = cfg.dimension if cfg.dimension is not None else dimension
    unit = measure_estimate(p, d, cfg.max_levels)
    cylinder = cylinder_measure_estimate(p, d, cfg.height, cfg.circumference, cfg.max_levels)
    result = {"p": cfg.p, "dimension": dimension, "d": d, "measure": unit.describe(),
              "scheme": unit.scheme, "cylinder_measure": cylinder.describe()}
    header = _csv_header(cfg, "volume per unit diamond", f"n = 2^0..2^{cfg.max_levels}")
    lines = [f"dimension ≈ {format_real(dimension)}",
             f"measure at d = {format_real(d)}: {unit.describe()} (cylinder: {cylinder.describe()})"]
    return {"status": "success", "lines": lines, "result": result,
            "csv": table_to_csv(covering_table(p, d, cfg.max_levels)), "header": header}


def run_net(cfg: RunConfig) -> Dict[str, Any]:
    net = sample_net(build_space(cfg), cfg.nt, cfg.nx)
    text = net.to_json()
    return {"status": "success", "lines": [] if cfg.out else [text],
            "result": {"points": len(net)}, "json_text": text + "\n"}


RUNNERS: Dict[str, Callable[[RunConfig], Dict[str, Any]]] = {
    "tau": run_tau,
    "defect": run_defect,
    "curvature-scan": run_curvature_scan,
    "noldus": run_noldus,
    "gh-sweep": run_gh_sweep,
    "hausdorff": run_hausdorff,
    "net": run_net,
}


def emit_artifacts(cfg: RunConfig, outcome: Dict[str, Any], started: float) -> Optional[str]:
    """Write the command's CSV or JSON artifact and its manifest; return the artifact path."""
    if not cfg.out:
        return None
    writer = ArtifactWriter()
    if "csv" in outcome:
        path = writer.write_csv(cfg.out, outcome["csv"], outcome["header"])
    elif "json_text" in outcome:
        path = writer.write_text(cfg.out, outcome["json_text"])
    else:
        path = writer.write_json(cfg.out, outcome["json"])
    writer.write_manifest(path, cfg.echo(), outcome["result"], __version__, started)
    return path


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=os.getenv("LORLAB_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.perf_counter()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_VALIDATION
    except ValidationError as exc:
        error = exc.errors()[0]
        location = ".".join(str(part) for part in error["loc"]) or "config"
        print(f"❌ invalid {location}: {error['msg']}", file=sys.stderr)
        return EXIT_VALIDATION
    except (PreconditionError, OSError) as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        outcome = RUNNERS[cfg.command](cfg)
        path = emit_artifacts(cfg, outcome, started)
    except PreconditionError as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InconclusiveError as exc:
        print(f"⚠️ inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except Exception as exc:
        LOGGER.debug("internal error", exc_info=True)
        print(f"❌ internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL

    for line in outcome["lines"]:
        print(line)
    if path:
        print(f"✓ wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
