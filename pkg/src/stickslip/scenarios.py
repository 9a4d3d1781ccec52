"""Scenario specifications: built-in studies and JSON config ingestion.

A scenario bundles a parameter source (direct coefficients, real roots, or
a complex pair), a list of initial conditions, a horizon, the output step,
and optional tolerance overrides.  The JSON form is::

    {
      "params": {"a": ..., "b": ..., "c": ..., "gamma": ...},   # or "roots"
      "roots": {"gamma": ..., "real": [l1, l2, l3]},            # or "complex": [l1, w0, delta]
      "initial": [[C1, C2, C3], ...],
      "horizon": ...,
      "output_step": ...,          # optional, default 1e-3
      "tolerances": {...}          # optional, EngineTolerances fields
    }

Unknown keys are rejected everywhere.  Serialization is canonical, so
parse -> serialize -> parse is idempotent.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from .hybridsim import EngineTolerances
from .sysmodel import (
    ComplexRoots,
    RealRoots,
    SystemParams,
    params_from_complex_roots,
    params_from_real_roots,
)

__all__ = ["ConfigError", "ScenarioSpec", "BUILTIN_SCENARIOS", "load_config"]


class ConfigError(ValueError):
    """Malformed scenario configuration (bad key, shape, or value)."""


_TOLERANCE_FIELDS = {f.name for f in dataclasses.fields(EngineTolerances)}


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def _number(obj: dict, key: str, where: str) -> float:
    try:
        value = obj[key]
    except KeyError:
        raise ConfigError(f"missing key '{key}' in {where}") from None
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"'{key}' in {where} must be a number, got {value!r}")
    return float(value)


def _triple(value, where: str) -> tuple[float, float, float]:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 3
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)
    ):
        raise ConfigError(f"{where} must be a list of three numbers, got {value!r}")
    return (float(value[0]), float(value[1]), float(value[2]))


@dataclass(frozen=True)
class ScenarioSpec:
    """Resolved scenario: parameters plus run configuration.

    ``source`` records how the parameters were specified ("params",
    "roots/real", or "roots/complex") so serialization stays faithful.
    """

    name: str
    params: SystemParams
    initial: tuple[tuple[float, float, float], ...]
    horizon: float
    output_step: float = 1e-3
    tolerances: EngineTolerances = EngineTolerances()
    source: str = "params"
    source_values: tuple[float, ...] = ()

    @staticmethod
    def from_config(config: dict, name: str = "config") -> "ScenarioSpec":
        if not isinstance(config, dict):
            raise ConfigError(f"scenario config must be an object, got {type(config).__name__}")
        _reject_unknown(
            config,
            {"params", "roots", "initial", "horizon", "output_step", "tolerances"},
            "scenario config",
        )
        if ("params" in config) == ("roots" in config):
            raise ConfigError("exactly one of 'params' or 'roots' is required")

        if "params" in config:
            block = config["params"]
            if not isinstance(block, dict):
                raise ConfigError("'params' must be an object")
            _reject_unknown(block, {"a", "b", "c", "gamma"}, "'params'")
            try:
                params = SystemParams(
                    a=_number(block, "a", "'params'"),
                    b=_number(block, "b", "'params'"),
                    c=_number(block, "c", "'params'"),
                    gamma=_number(block, "gamma", "'params'"),
                )
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            source, source_values = "params", ()
        else:
            block = config["roots"]
            if not isinstance(block, dict):
                raise ConfigError("'roots' must be an object")
            _reject_unknown(block, {"gamma", "real", "complex"}, "'roots'")
            gamma = _number(block, "gamma", "'roots'")
            if ("real" in block) == ("complex" in block):
                raise ConfigError("'roots' requires exactly one of 'real' or 'complex'")
            try:
                if "real" in block:
                    vals = _triple(block["real"], "'roots.real'")
                    params = params_from_real_roots(RealRoots(*vals), gamma)
                    source = "roots/real"
                else:
                    vals = _triple(block["complex"], "'roots.complex'")
                    params = params_from_complex_roots(ComplexRoots(*vals), gamma)
                    source = "roots/complex"
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            source_values = vals

        if "initial" not in config:
            raise ConfigError("missing key 'initial' in scenario config")
        raw_initial = config["initial"]
        if not isinstance(raw_initial, list) or not raw_initial:
            raise ConfigError("'initial' must be a non-empty list of [C1, C2, C3] triples")
        initial = tuple(_triple(row, "'initial' entry") for row in raw_initial)

        horizon = _number(config, "horizon", "scenario config")
        if horizon <= 0:
            raise ConfigError(f"'horizon' must be positive, got {horizon!r}")
        output_step = (
            _number(config, "output_step", "scenario config")
            if "output_step" in config
            else 1e-3
        )
        if output_step <= 0:
            raise ConfigError(f"'output_step' must be positive, got {output_step!r}")

        tolerances = EngineTolerances()
        if "tolerances" in config:
            block = config["tolerances"]
            if not isinstance(block, dict):
                raise ConfigError("'tolerances' must be an object")
            _reject_unknown(block, _TOLERANCE_FIELDS, "'tolerances'")
            kwargs = {}
            for key, value in block.items():
                if value is None:
                    kwargs[key] = None
                elif key == "max_relay_switches":
                    if isinstance(value, bool) or not isinstance(value, int):
                        raise ConfigError(f"'{key}' must be an integer, got {value!r}")
                    kwargs[key] = value
                elif isinstance(value, (int, float)) and not isinstance(value, bool):
                    kwargs[key] = float(value)
                else:
                    raise ConfigError(f"'{key}' must be a number, got {value!r}")
            tolerances = EngineTolerances(**kwargs)

        return ScenarioSpec(
            name=name,
            params=params,
            initial=initial,
            horizon=horizon,
            output_step=output_step,
            tolerances=tolerances,
            source=source,
            source_values=source_values,
        )

    def to_config(self) -> dict:
        """Canonical JSON-ready form; round-trips through
        :meth:`from_config` unchanged."""
        out: dict = {}
        if self.source == "params":
            p = self.params
            out["params"] = {"a": p.a, "b": p.b, "c": p.c, "gamma": p.gamma}
        elif self.source == "roots/real":
            out["roots"] = {"gamma": self.params.gamma, "real": list(self.source_values)}
        else:
            out["roots"] = {"gamma": self.params.gamma, "complex": list(self.source_values)}
        out["initial"] = [list(row) for row in self.initial]
        out["horizon"] = self.horizon
        out["output_step"] = self.output_step
        out["tolerances"] = dataclasses.asdict(self.tolerances)
        return out


def load_config(path: str, name: str | None = None) -> ScenarioSpec:
    """Parse a scenario config file, mapping JSON errors to ConfigError."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path!r}: line {exc.lineno} col {exc.colno}: {exc.msg}") from None
    return ScenarioSpec.from_config(raw, name=name or path)


def _builtin(name: str, config: dict) -> ScenarioSpec:
    return ScenarioSpec.from_config(config, name=name)


# The four built-in studies: three-distinct-real-roots, the two
# complex-pair configurations (dominant pair vs dominant real root), and
# the lightly damped high-gain configuration.  Parameter values and the
# table of initial conditions follow the published studies; the last
# scenario's initial condition is the conventional motion start
# (C1 = C3 = 0, C2 != 0).
BUILTIN_SCENARIOS: dict[str, ScenarioSpec] = {
    "sec3_1": _builtin(
        "sec3_1",
        {
            "params": {"a": 1.5, "b": 0.66, "c": 0.08, "gamma": 1.0},
            "initial": [
                [0.0, 0.5, 0.0],
                [12.5, 0.5, 0.0],
                [0.0, 1.5152, 0.0],
                [0.0, 2.5, 0.0],
                [12.5, 2.5, 0.0],
                [6.25, 2.5, -4.5],
            ],
            "horizon": 400.0,
        },
    ),
    "sec3_2a": _builtin(
        "sec3_2a",
        {
            "params": {"a": 6.4, "b": 3.0, "c": 4.0, "gamma": 1.0},
            "initial": [[0.0, 0.2, 0.0], [0.0, 0.4, 0.0]],
            "horizon": 60.0,
        },
    ),
    "sec3_2b": _builtin(
        "sec3_2b",
        {
            "params": {"a": 1.135, "b": 4.187, "c": 0.8, "gamma": 1.0},
            "initial": [[0.0, 0.3, 0.0], [1.0, 0.3, 0.0]],
            "horizon": 200.0,
        },
    ),
    "sec3_3": _builtin(
        "sec3_3",
        {
            "params": {"a": 10.0, "b": 1040.0, "c": 8000.0, "gamma": 100.0},
            "initial": [[0.0, 0.5, 0.0]],
            "horizon": 30.0,
        },
    ),
}
