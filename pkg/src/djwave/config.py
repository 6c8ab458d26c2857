"""Run configuration stored as a flat TOML document."""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .background import BackgroundCurrent, LaminarProfile, build_profile
from .continuation import ContinuationOptions
from .errors import ConfigError
from .height import SolverOptions
from .presets import SHAPES, current_from_shape


@dataclass
class RunConfig:
    preset: str = "irrotational"
    # (y / depth, relative U*) pairs from bed to surface; overrides the preset
    breakpoints: list = field(default_factory=list)
    n_r: int = 320
    n_s: int = 128
    L: float = 0.0                  # 0 picks the decay length of the seed
    grading: float = 6.0
    surface_grading: float = 1.0
    eps: float = 0.01
    ds: float = 0.02
    ds_min: float = 1e-5
    ds_max: float = 0.05
    tau: float = 0.2
    max_steps: int = 200
    newton_tol: float = 1e-10
    newton_max_iter: int = 30
    corrector_tol: float = 1e-10
    stagnation_floor: float = 1e-6
    alpha: float = 0.5
    P_atm: float = 0.0
    n_eigen: int = 3
    export_points: int = 3
    output_dir: str = "out"
    dry_run: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def fail(name, why):
            raise ConfigError(f"{name}: {why}")

        if not self.breakpoints and self.preset not in SHAPES:
            fail("preset", f"unknown preset {self.preset!r}; choose from {sorted(SHAPES)}")
        if self.breakpoints:
            try:
                pts = [(float(y), float(u)) for y, u in self.breakpoints]
            except (TypeError, ValueError):
                fail("breakpoints", "expected a list of [y, u] pairs")
            if len(pts) < 2:
                fail("breakpoints", "need at least two points")
            if any(b[0] <= a[0] for a, b in zip(pts, pts[1:])):
                fail("breakpoints", "y must increase strictly from bed to surface")
            if abs(pts[0][0] + 1.0) > 1e-12 or abs(pts[-1][0]) > 1e-12:
                fail("breakpoints", "y must run from -1 to 0")
            if min(u for _, u in pts) <= 0:
                fail("breakpoints", "U* must be positive (stagnant background)")
        if self.n_r < 8:
            fail("n_r", "must be at least 8")
        if self.n_s < 16:
            fail("n_s", "must be at least 16")
        if self.L < 0:
            fail("L", "must be non-negative")
        for name in ("grading", "surface_grading"):
            if getattr(self, name) < 0:
                fail(name, "must be non-negative")
        if not self.eps > 0:
            fail("eps", "must be positive")
        for name in ("ds", "ds_min", "ds_max", "newton_tol", "corrector_tol",
                     "stagnation_floor"):
            if not getattr(self, name) > 0:
                fail(name, "must be positive")
        if not self.ds_min <= self.ds <= self.ds_max:
            fail("ds", "need ds_min <= ds <= ds_max")
        if not 0 < self.tau < 1:
            fail("tau", "must lie in (0, 1)")
        if not 0 < self.alpha <= 0.5:
            fail("alpha", "must lie in (0, 0.5]")
        for name in ("max_steps", "newton_max_iter", "n_eigen", "export_points"):
            if getattr(self, name) < 1:
                fail(name, "must be at least 1")

    def current(self) -> BackgroundCurrent:
        shape = self.breakpoints if self.breakpoints else SHAPES[self.preset]
        return current_from_shape([tuple(p) for p in shape])

    @property
    def label(self) -> str:
        return "custom" if self.breakpoints else self.preset

    def profile(self) -> LaminarProfile:
        return build_profile(self.current(), self.n_s, surface_grading=self.surface_grading)

    def solver_options(self) -> SolverOptions:
        return SolverOptions(tol=self.newton_tol, max_iter=self.newton_max_iter,
                             stagnation_floor=self.stagnation_floor)

    def continuation_options(self) -> ContinuationOptions:
        return ContinuationOptions(ds=self.ds, ds_min=self.ds_min, ds_max=self.ds_max,
                                   tau=self.tau, max_steps=self.max_steps, n_r=self.n_r,
                                   grading=self.grading, length=self.L, alpha=self.alpha,
                                   corrector_tol=self.corrector_tol,
                                   solver=self.solver_options())


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, value):
    kind = _TYPES[name]
    if kind == "float" and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    expected = {"int": int, "float": float, "str": str, "bool": bool, "list": list}[kind]
    if isinstance(value, bool) and expected is not bool:
        raise ConfigError(f"{name}: expected {kind}, got a boolean")
    if not isinstance(value, expected):
        raise ConfigError(f"{name}: expected {kind}, got {type(value).__name__}")
    return value


def config_from_dict(data: dict) -> RunConfig:
    unknown = sorted(set(data) - set(_TYPES))
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    return RunConfig(**{k: _coerce(k, v) for k, v in data.items()})


def parse_config(text: str) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from None
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"tables are not allowed (flat keys only): {', '.join(nested)}")
    return config_from_dict(data)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text)


def dump_config(config: RunConfig) -> str:
    data = asdict(config)
    data["breakpoints"] = [list(p) for p in data["breakpoints"]]
    return tomli_w.dumps(data)


def save_config(config: RunConfig, path) -> None:
    Path(path).write_text(dump_config(config))
