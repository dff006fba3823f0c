"""
YAML configuration with embedded defaults.

A config file holds up to five sections (hardware, error, loss,
timing, sweep).  Missing keys fall back to ``DEFAULTS``; unknown
sections or keys are rejected.
"""

import copy
import logging
from typing import Any, Dict, List, Optional
import yaml
from naqc.circuit import benchmarks
from naqc.const import SUCCESS_THRESHOLD
from naqc.fidelity import ErrorParams
from naqc.lossim import LossModel, Strategy, StrategyKind, TimingModel, strategy_kind
from naqc.topology import GridSpec

logger = logging.getLogger(__name__)

# the vacuum loss figure read per shot and read as a percentage
LOSS_PRESETS = {
    "vacuum_per_shot": 0.0068,
    "vacuum_percent": 0.000068,
}

DEFAULTS = {
    "hardware": {
        "width": 10,
        "height": 10,
        "mid": 3.0,
        "zone_divisor": 2.0,
    },
    "error": {
        "p1": 0.999,
        "p2": 0.965,
        "p3": None,
        "p3_exponent": None,
        "t1_ground": 1.0,
        "t2_ground": 1.0,
        "t1_excited": 1e-4,
        "t2_excited": 1e-4,
        "dur1": 1e-6,
        "dur2": 1e-6,
        "dur3": 1e-6,
    },
    "loss": {
        "preset": None,
        "p_vacuum": 0.0068,
        "measurement_mode": "lossless",
        "p_measure": None,
    },
    "timing": {
        "t_reload": 0.3,
        "t_fluoresce": 0.006,
        "t_remap": 4e-8,
        "t_shot": 0.001,
        "t_recompile": 1.0,
    },
    "sweep": {
        "benchmarks": ["bv", "cuccaro", "cnu", "qft_adder", "qaoa"],
        "sizes": [10, 30, 50],
        "mids": [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 13.0],
        "density": 0.1,
        "seed": 0,
        "processes": 1,
        "error_size": 50,
        "error_mid": 3.0,
        "p2_values": [0.9, 0.95, 0.965, 0.99, 0.995, 0.999, 1.0],
        "threshold": SUCCESS_THRESHOLD,
        "loss_benchmark": "cuccaro",
        "loss_size": 30,
        "loss_mids": [2.0, 3.0, 4.0, 5.0],
        "strategies": [kind.value for kind in StrategyKind],
        "small_mid_delta": 1,
        "trials": 20,
        "target_shots": 500,
        "loss_factors": [0.1, 0.3, 1.0, 3.0, 10.0],
        "sensitivity_strategies": ["CompileSmallReroute"],
        "sensitivity_trials": 20,
        "sensitivity_max_shots": 100000,
    },
}

_NULLABLE_FLOATS = {
    ("error", "p3"),
    ("error", "p3_exponent"),
    ("loss", "p_measure"),
    ("timing", "t_recompile"),
}


def _check_value(section: str, key: str, value: Any, default: Any) -> Any:
    """
    Check a value against the type of its default.
    """
    where = "{}.{}".format(section, key)
    if (section, key) in _NULLABLE_FLOATS:
        default = 0.0
    if value is None:
        if default is None or (section, key) in _NULLABLE_FLOATS:
            return None
        raise ValueError("{} must not be empty.".format(where))
    if isinstance(default, (int, float)):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError("{} must be a number, got {!r}.".format(where, value))
        if isinstance(default, int):
            if int(value) != value:
                raise ValueError(
                    "{} must be an integer, got {!r}.".format(where, value)
                )
            return int(value)
        return float(value)
    if isinstance(default, list):
        if not isinstance(value, list) or not value:
            raise ValueError("{} must be a nonempty list.".format(where))
        return [
            _check_value(section, "{}[{}]".format(key, i), item, default[0])
            for i, item in enumerate(value)
        ]
    if not isinstance(value, str):
        raise ValueError("{} must be a string, got {!r}.".format(where, value))
    return value


def merge_config(data: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    """
    Overlay ``data`` on the defaults, rejecting unknown sections and
    keys.
    """
    merged = copy.deepcopy(DEFAULTS)
    if data is None:
        return merged
    if not isinstance(data, dict):
        raise ValueError("Config must be a mapping of sections.")
    for section, values in data.items():
        if section not in DEFAULTS:
            raise ValueError(
                "Unknown config section '{}'. Valid sections are {}.".format(
                    section, ", ".join(DEFAULTS)
                )
            )
        if values is None:
            continue
        if not isinstance(values, dict):
            raise ValueError("Config section '{}' must be a mapping.".format(section))
        for key, value in values.items():
            if key not in DEFAULTS[section]:
                raise ValueError(
                    "Unknown config key '{}.{}'.".format(section, key)
                )
            merged[section][key] = _check_value(
                section, key, value, DEFAULTS[section][key]
            )
    return merged


class Config:
    """
    Validated configuration.  Every component is built once on
    construction so invalid values fail early.
    """

    def __init__(self, data: Optional[Dict[str, Any]] = None):
        """
        :param data: Parsed YAML document, possibly partial.
        """
        self.data = merge_config(data)
        self.grid()
        self.error_params()
        self.loss_model()
        self.timing_model()
        self._check_sweep()

    @classmethod
    def from_yaml(cls, text: str) -> "Config":
        """
        """
        return cls(yaml.safe_load(text))

    @classmethod
    def from_file(cls, path: str) -> "Config":
        """
        """
        with open(path) as fin:
            return cls.from_yaml(fin.read())

    def to_yaml(self) -> str:
        """
        """
        return yaml.safe_dump(self.data, sort_keys=False, default_flow_style=None)

    @property
    def sweep(self) -> Dict[str, Any]:
        """
        """
        return self.data["sweep"]

    def set(self, section: str, key: str, value: Any) -> None:
        """
        Override one value after loading, e.g. from a command line
        flag.
        """
        self.data = merge_config(
            _with_value(self.data, section, key, value)
        )
        self.grid()

    def grid(self, mid: Optional[float] = None) -> GridSpec:
        """
        Hardware grid, optionally with a different MID.
        """
        hw = self.data["hardware"]
        return GridSpec(
            hw["width"],
            hw["height"],
            hw["mid"] if mid is None else mid,
            hw["zone_divisor"],
        )

    def error_params(self) -> ErrorParams:
        """
        """
        err = dict(self.data["error"])
        exponent = err.pop("p3_exponent")
        ep = ErrorParams(**err)
        if exponent is not None:
            ep = ep.with_p2(ep.p2, exponent)
        return ep

    @property
    def p3_exponent(self) -> Optional[float]:
        """
        """
        return self.data["error"]["p3_exponent"]

    def loss_model(self, seed: Optional[int] = None) -> LossModel:
        """
        """
        loss = self.data["loss"]
        p_vacuum = loss["p_vacuum"]
        if loss["preset"] is not None:
            if loss["preset"] not in LOSS_PRESETS:
                raise ValueError(
                    "Unknown loss preset '{}'. Valid presets are {}.".format(
                        loss["preset"], ", ".join(LOSS_PRESETS)
                    )
                )
            p_vacuum = LOSS_PRESETS[loss["preset"]]
        return LossModel(
            p_vacuum,
            loss["measurement_mode"],
            loss["p_measure"],
            self.sweep["seed"] if seed is None else seed,
        )

    def timing_model(self) -> TimingModel:
        """
        """
        return TimingModel(**self.data["timing"])

    def strategies(self) -> List[Strategy]:
        """
        """
        return [
            Strategy(strategy_kind(name), self.sweep["small_mid_delta"])
            for name in self.sweep["strategies"]
        ]

    def _check_sweep(self) -> None:
        """
        """
        sweep = self.sweep
        names = list(sweep["benchmarks"]) + [sweep["loss_benchmark"]]
        for name in names:
            if name not in benchmarks:
                raise ValueError(
                    "Unknown benchmark '{}'. Valid names are {}.".format(
                        name, ", ".join(sorted(benchmarks))
                    )
                )
        for name in list(sweep["strategies"]) + list(sweep["sensitivity_strategies"]):
            strategy_kind(name)
        for mid in list(sweep["mids"]) + list(sweep["loss_mids"]) + [sweep["error_mid"]]:
            self.grid(mid)
        for p2 in sweep["p2_values"]:
            if not 0 < p2 <= 1:
                raise ValueError("sweep.p2_values must lie in (0, 1], got {}.".format(p2))
        if not 0 < sweep["threshold"] < 1:
            raise ValueError("sweep.threshold must lie in (0, 1).")
        if not 0 < sweep["density"] <= 1:
            raise ValueError("sweep.density must lie in (0, 1].")
        for key in (
            "trials",
            "target_shots",
            "processes",
            "sensitivity_trials",
            "sensitivity_max_shots",
        ):
            if sweep[key] < 1:
                raise ValueError("sweep.{} must be at least 1.".format(key))


def _with_value(data: Dict[str, Any], section: str, key: str, value: Any):
    """
    """
    data = copy.deepcopy(data)
    if section not in data:
        raise ValueError("Unknown config section '{}'.".format(section))
    data[section][key] = value
    return data


def load_config(path: Optional[str] = None) -> Config:
    """
    Config from a YAML file, or the defaults when no path is given.
    """
    if path is None:
        return Config()
    logger.info("loading config %s", path)
    return Config.from_file(path)
