"""
Run Configuration
Pydantic model for one CLI run, the argparse front end that fills it, and the
key=value / JSON config-file loader. Flags override file values.
"""

import argparse
import json
import logging
import math
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from tools.core import (
    DEFAULT_CIRCUMFERENCE,
    DEFAULT_HEIGHT,
    P_INF,
    PValue,
    format_p,
    parse_p,
    parse_reals,
)
from tools.errors import PreconditionError

LOGGER = logging.getLogger(__name__)

COMMANDS = {
    "tau": "τ^p(a, b) between two events, or the l^p distance on the normed plane",
    "defect": "parallelogram defect E(p) and the median defect of a pair x, y",
    "curvature-scan": "λ-scaling defect profile, fitted exponent and curvature-bound certificates",
    "noldus": "Noldus metric on a sampled net slice with its covering number",
    "gh-sweep": "GH upper and lower bounds between Cyl^p nets over a list of exponents",
    "hausdorff": "Lorentzian Hausdorff dimension and measure of Cyl^p",
    "net": "sample a finite net and emit it as JSON",
}

_DEFAULT_SPACE = {
    "tau": "plane",
    "defect": "plane",
    "curvature-scan": "plane",
    "noldus": "cylinder",
    "gh-sweep": "cylinder",
    "hausdorff": "cylinder",
    "net": "cylinder",
}


def _env_threads() -> Optional[int]:
    value = os.getenv("LORLAB_THREADS")
    return int(value) if value and value.strip().isdigit() else None


class RunConfig(BaseModel):
    """One validated CLI run; every module precondition is checked here before dispatch."""

    model_config = ConfigDict(extra="forbid")

    command: Literal["tau", "defect", "curvature-scan", "noldus", "gh-sweep", "hausdorff", "net"]
    p: str = "2.0"
    space: Optional[Literal["plane", "cylinder", "normed", "sphere"]] = None
    height: float = DEFAULT_HEIGHT
    circumference: float = DEFAULT_CIRCUMFERENCE
    k: float = 1.0
    from_event: Optional[Tuple[float, float]] = None
    to_event: Optional[Tuple[float, float]] = None
    x: Optional[Tuple[float, float]] = None
    y: Optional[Tuple[float, float]] = None
    sides: Optional[Tuple[float, float, float]] = None
    nt: int = 8
    nx: int = 8
    lambda_first: int = 1
    lambda_last: int = 20
    p_list: Optional[List[str]] = None
    reference_p: Optional[str] = None
    radius: float = 0.25
    slice_index: Optional[int] = None
    mode: Literal["lorentz", "riemann"] = "lorentz"
    max_levels: int = 20
    restarts: int = 4
    seed: int = 0
    grid_radius: float = 2.0
    tolerance: float = 1e-12
    dimension: Optional[float] = None
    threads: Optional[int] = None
    out: Optional[str] = None
    k_probes: List[float] = [1.0, -1.0, 0.1, -0.1]

    @field_validator("p", "reference_p", mode="before")
    @classmethod
    def _canonical_p(cls, value: Any) -> Optional[str]:
        if value is None:
            return None
        return format_p(parse_p(value))

    @field_validator("p_list", mode="before")
    @classmethod
    def _canonical_p_list(cls, value: Any) -> Optional[List[str]]:
        if value is None:
            return None
        items = value.split(",") if isinstance(value, str) else list(value)
        exponents = [parse_p(item) for item in items if str(item).strip()]
        keys = [math.inf if p is P_INF else p for p in exponents]
        if any(b < a for a, b in zip(keys, keys[1:])):
            raise ValueError("p-list must be sorted in increasing order")
        if not exponents:
            raise ValueError("p-list must not be empty")
        return [format_p(p) for p in exponents]

    @field_validator("from_event", "to_event", "x", "y", mode="before")
    @classmethod
    def _pair(cls, value: Any) -> Optional[Tuple[float, float]]:
        return None if value is None else parse_reals(value, 2)

    @field_validator("sides", mode="before")
    @classmethod
    def _triple(cls, value: Any) -> Optional[Tuple[float, float, float]]:
        return None if value is None else parse_reals(value, 3)

    @field_validator("k_probes", mode="before")
    @classmethod
    def _probes(cls, value: Any) -> List[float]:
        items = value.split(",") if isinstance(value, str) else list(value)
        probes = [float(item) for item in items if str(item).strip()]
        if not probes or any(probe == 0 or not math.isfinite(probe) for probe in probes):
            raise ValueError("k-probes must be nonzero finite reals")
        return probes

    @field_validator("height", "circumference", "radius", "grid_radius", "tolerance")
    @classmethod
    def _positive(cls, value: float) -> float:
        if not (value > 0 and math.isfinite(value)):
            raise ValueError(f"must be a positive real, got {value}")
        return value

    @field_validator("threads", mode="before")
    @classmethod
    def _threads(cls, value: Any) -> Optional[int]:
        if value is None:
            return _env_threads()
        if int(value) < 1:
            raise ValueError("threads must be at least 1")
        return int(value)

    @model_validator(mode="after")
    def _check_command(self) -> "RunConfig":
        if self.space is None:
            self.space = _DEFAULT_SPACE[self.command]
        if self.nt < 2:
            raise ValueError(f"nt must be at least 2, got {self.nt}")
        if self.nx < 1:
            raise ValueError(f"nx must be at least 1, got {self.nx}")
        if self.max_levels < 4:
            raise ValueError(f"max-levels must be at least 4, got {self.max_levels}")
        if self.restarts < 0:
            raise ValueError("restarts must be non-negative")
        if self.lambda_first < 1 or self.lambda_last - self.lambda_first + 1 < 6:
            raise ValueError("the λ grid 2^-first .. 2^-last needs first >= 1 and at least 6 levels")
        if self.space == "cylinder" and self.height > self.circumference / 2:
            raise ValueError(
                f"cylinder height {self.height} exceeds circumference/2 = {self.circumference / 2}"
            )
        if self.command == "tau" and (self.from_event is None or self.to_event is None):
            raise ValueError("tau needs --from and --to")
        if self.command == "defect" and (self.x is None or self.y is None):
            raise ValueError("defect needs --x and --y")
        if self.command == "curvature-scan" and self.space == "sphere" and self.sides is None:
            raise ValueError("a sphere curvature scan needs --sides")
        if self.command == "gh-sweep" and not self.p_list:
            raise ValueError("gh-sweep needs --p-list")
        if self.command == "hausdorff" and self.p_value is P_INF:
            raise ValueError("hausdorff needs a finite p")
        return self

    @property
    def p_value(self) -> PValue:
        return parse_p(self.p)

    def echo(self) -> Dict[str, Any]:
        """JSON-ready copy for manifests; re-running it reproduces the run."""
        return json.loads(self.model_dump_json())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lorlab",
        description="Lorentzian L^p example spaces: time separations, curvature certificates, "
                    "Noldus metrics, GH estimates and Hausdorff dimension",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py tau --p 1 --from 0,0 --to 3,1
  python main.py curvature-scan --p 4 --x 2,0 --y 1,0.25 --out profile.csv
  python main.py gh-sweep --p-list 1,1.5,2 --nt 8 --nx 8 --out sweep.csv
  python main.py hausdorff --p 1.5 --max-levels 20
        """,
    )
    parser.add_argument("--config", help="key=value or JSON file with run parameters")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")
    for command, help_text in COMMANDS.items():
        sub = subparsers.add_parser(command, help=help_text, description=help_text,
                                    argument_default=argparse.SUPPRESS)
        _add_common_flags(sub)
    return parser


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key=value or JSON file with run parameters")
    sub.add_argument("--p", help="exponent p >= 1 or 'inf'")
    sub.add_argument("--space", choices=["plane", "cylinder", "normed", "sphere"])
    sub.add_argument("--height", type=float)
    sub.add_argument("--circumference", type=float)
    sub.add_argument("--k", type=float, help="curvature of the sphere space")
    sub.add_argument("--from", dest="from_event", help="event t,x")
    sub.add_argument("--to", dest="to_event", help="event t,x")
    sub.add_argument("--x", help="vector x0,x1")
    sub.add_argument("--y", help="vector y0,y1")
    sub.add_argument("--sides", help="triangle sides ab,ac,bc")
    sub.add_argument("--nt", type=int)
    sub.add_argument("--nx", type=int)
    sub.add_argument("--lambda-first", type=int, help="λ grid starts at 2^-first")
    sub.add_argument("--lambda-last", type=int, help="λ grid ends at 2^-last")
    sub.add_argument("--p-list", help="sorted exponents, comma separated")
    sub.add_argument("--reference-p", help="compare every p-list entry against this exponent")
    sub.add_argument("--radius", type=float)
    sub.add_argument("--slice-index", type=int, help="time slice of the net used by noldus")
    sub.add_argument("--mode", choices=["lorentz", "riemann"])
    sub.add_argument("--max-levels", type=int)
    sub.add_argument("--restarts", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--grid-radius", type=float)
    sub.add_argument("--tolerance", type=float)
    sub.add_argument("--d", dest="dimension", type=float, help="trial dimension for the measure")
    sub.add_argument("--threads", type=int)
    sub.add_argument("--out", help="output file; relative paths go under LORLAB_OUTPUT_DIR")
    sub.add_argument("--k-probes", help="curvature probes, comma separated")


def load_config_file(path: str) -> Dict[str, Any]:
    """Read a JSON object or key=value lines (# comments); keys accept dashes or underscores."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        raw = json.loads(text)
        if not isinstance(raw, dict):
            raise PreconditionError(f"config file {path} must hold a JSON object")
    else:
        raw = {}
        for number, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise PreconditionError(f"{path}:{number}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            raw[key.strip()] = value.strip()
    config = {}
    for key, value in raw.items():
        key = key.replace("-", "_")
        config[{"from": "from_event", "to": "to_event", "d": "dimension"}.get(key, key)] = value
    return config


def parse_config(argv: Sequence[str], config_file: Optional[str] = None) -> RunConfig:
    """
    Build a RunConfig from command-line flags over an optional config file.

    Raises:
        SystemExit: from argparse on unknown flags or --help
        pydantic.ValidationError: on out-of-range or missing values
    """
    namespace = vars(build_parser().parse_args(list(argv)))
    config_path = namespace.pop("config", None) or config_file
    values: Dict[str, Any] = load_config_file(config_path) if config_path else {}
    values.update({key: value for key, value in namespace.items() if value is not None})
    values.setdefault("threads", None)
    LOGGER.debug("run configuration %s", values)
    return RunConfig(**values)
