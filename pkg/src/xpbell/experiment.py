"""End-to-end experiment: configuration, calibration, seeded runs, reports.

Every random draw of a run is addressed by ``(seed, pair, window, side,
purpose)``, so the windows of a setting pair can be cut into chunks and farmed
out to any number of worker processes without changing the result.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import jsonschema
import numpy as np

from . import kernels
from .acquisition import AdcConfig, acquire_windows
from .bell import PAIR_LABELS, CountTable, bootstrap_stderr, chsh_from_tables
from .measurement import DetectorConfig, JointNoiseModel, phase_points
from .oscillator import (
    GaussianState,
    PhysicalConfig,
    coherent_state,
    ground_state,
    quadrature,
    squeezed_along,
    squeezed_state,
)
from .rng import FAIL, JITTER, NOISE, POINT, Stream, derive_key, derive_keys, root_key
from .sampling import CalibrationError, ThresholdConfig, calibrate, require_calibrated

CONFIG_SCHEMA_ID = "xpbell.config/1"
REPORT_SCHEMA_ID = "xpbell.report/1"

# stream tags under the root key
_CAL = 0
_RUN = 1
_BOOT = 2

CHUNK_WINDOWS = 2048

# detector order in the config and the (x, p) detector index of each pair
DETECTOR_LABELS = ("X", "X'", "P", "P'")
PAIR_DETECTORS = ((0, 2), (1, 2), (0, 3), (1, 3))


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending entry."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


_NUM = {"type": "number"}
_DET_SCHEMA = {
    "type": "object",
    "properties": {"phase": _NUM, "noise": _NUM, "failure": _NUM},
    "required": ["phase"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "schema": {"const": CONFIG_SCHEMA_ID},
        "physics": {
            "type": "object",
            "properties": {"mass": _NUM, "omega": _NUM, "hbar": _NUM},
            "additionalProperties": False,
        },
        "state": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["ground", "coherent", "squeezed"]},
                "r": _NUM,
                "x0": _NUM,
                "p0": _NUM,
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "noise": {
            "type": "object",
            "properties": {"sx": _NUM, "sp": _NUM},
            "required": ["sx", "sp"],
            "additionalProperties": False,
        },
        "detectors": {
            "type": "object",
            "properties": {lab: _DET_SCHEMA for lab in DETECTOR_LABELS},
            "required": list(DETECTOR_LABELS),
            "additionalProperties": False,
        },
        "thresholds": {
            "type": "object",
            "properties": {"eps_x": _NUM, "eps_p": _NUM},
            "required": ["eps_x", "eps_p"],
            "additionalProperties": False,
        },
        "window": {"type": "integer"},
        "trials": {"type": "integer"},
        "acquisition": {
            "oneOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "properties": {"bits": {"type": "integer"}, "jitter": _NUM, "span": _NUM},
                    "required": ["bits"],
                    "additionalProperties": False,
                },
            ]
        },
        "seed": {"type": "integer", "minimum": 0},
        "mode": {"enum": ["dual", "single"]},
        "beamwidth": _NUM,
        "calibration": {
            "type": "object",
            "properties": {"windows": {"type": "integer"}, "squeeze": _NUM},
            "additionalProperties": False,
        },
        "override_calibration": {"type": "boolean"},
        "flip": {"type": "boolean"},
        "bootstrap": {"type": "integer", "minimum": 0},
        "throughput_target": _NUM,
    },
    "required": ["schema", "seed"],
    "additionalProperties": False,
}


@dataclass(frozen=True)
class StateSpec:
    kind: str = "squeezed"
    r: float = 1.0
    x0: float = 0.0
    p0: float = 0.0

    def build(self, cfg: PhysicalConfig) -> GaussianState:
        if self.kind == "ground":
            return ground_state(cfg)
        if self.kind == "coherent":
            return coherent_state(cfg, self.x0, self.p0)
        if self.kind == "squeezed":
            return squeezed_state(cfg, self.r, self.x0, self.p0)
        raise ValueError(f"unknown state kind {self.kind!r}")


@dataclass(frozen=True)
class AcquisitionSpec:
    """Readout chain settings; ``jitter`` is in units of the hold period."""

    bits: int = 16
    jitter: float = 0.0
    span: float = 6.0

    def __post_init__(self):
        if not 1 <= self.bits <= 24:
            raise ValueError("bits must lie in [1, 24]")
        if not self.jitter >= 0:
            raise ValueError("jitter must be >= 0")
        if not self.span > 0:
            raise ValueError("span must be > 0")


def _default_detectors():
    return (
        DetectorConfig("X", "", 0.0, 0.02),
        DetectorConfig("X", "'", 0.15, 0.02),
        DetectorConfig("P", "", 0.0, 0.02),
        DetectorConfig("P", "'", math.pi / 4, 0.02),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    physics: PhysicalConfig = field(default_factory=PhysicalConfig)
    state: StateSpec = field(default_factory=StateSpec)
    noise: JointNoiseModel = field(default_factory=lambda: JointNoiseModel(0.1, 5.0))
    detectors: tuple = field(default_factory=_default_detectors)
    thresholds: ThresholdConfig = field(default_factory=lambda: ThresholdConfig(0.4, 1.0))
    window: int = 100
    trials: int = 10_000
    acquisition: AcquisitionSpec | None = None
    seed: int = 42
    mode: str = "dual"
    beamwidth: float = 0.01
    calibration_windows: int = 2000
    calibration_squeeze: float = 3.0
    override_calibration: bool = False
    flip: bool = False
    bootstrap: int = 0
    throughput_target: float = 2.0e7

    def validate(self) -> None:
        """Raise :class:`ConfigError` naming the first violated invariant."""
        checks = [
            ("noise", lambda: self.noise.check(self.physics)),
            ("thresholds", lambda: self.thresholds.check(self.physics)),
            ("state", lambda: self.state.build(self.physics)),
        ]
        for name, fn in checks:
            try:
                fn()
            except ValueError as exc:
                raise ConfigError(name, str(exc)) from None
        if len(self.detectors) != 4 or tuple(d.label for d in self.detectors) != DETECTOR_LABELS:
            raise ConfigError("detectors", f"need exactly {DETECTOR_LABELS}")
        if self.window < 2:
            raise ConfigError("window", "window size must be >= 2")
        if self.trials < 1:
            raise ConfigError("trials", "trials per setting pair must be >= 1")
        if self.mode not in ("dual", "single"):
            raise ConfigError("mode", "mode must be 'dual' or 'single'")
        if not self.beamwidth > 0:
            raise ConfigError("beamwidth", "beam width must be > 0")
        if self.calibration_windows < 1000:
            raise ConfigError("calibration.windows", "calibration needs >= 1000 windows")
        if self.seed < 0:
            raise ConfigError("seed", "seed must be >= 0")

    @property
    def initial_state(self) -> GaussianState:
        return self.state.build(self.physics)

    def to_dict(self) -> dict:
        return {
            "schema": CONFIG_SCHEMA_ID,
            "physics": asdict(self.physics),
            "state": asdict(self.state),
            "noise": asdict(self.noise),
            "detectors": {
                d.label: {"phase": d.phase, "noise": d.noise, "failure": d.failure} for d in self.detectors
            },
            "thresholds": asdict(self.thresholds),
            "window": self.window,
            "trials": self.trials,
            "acquisition": None if self.acquisition is None else asdict(self.acquisition),
            "seed": self.seed,
            "mode": self.mode,
            "beamwidth": self.beamwidth,
            "calibration": {"windows": self.calibration_windows, "squeeze": self.calibration_squeeze},
            "override_calibration": self.override_calibration,
            "flip": self.flip,
            "bootstrap": self.bootstrap,
            "throughput_target": self.throughput_target,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(doc, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(where, exc.message) from None
        d = cls()

        def build(name, factory):
            try:
                return factory()
            except (TypeError, ValueError) as exc:
                raise ConfigError(name, str(exc)) from None

        physics = build("physics", lambda: PhysicalConfig(**doc.get("physics", {})))
        dets = []
        for lab in DETECTOR_LABELS:
            spec = doc["detectors"][lab] if "detectors" in doc else d.to_dict()["detectors"][lab]
            dets.append(build(f"detectors/{lab}", lambda: DetectorConfig(lab[0], lab[1:], **spec)))
        cal = doc.get("calibration", {})
        acq = doc.get("acquisition")
        cfg = cls(
            physics=physics,
            state=build("state", lambda: StateSpec(**doc["state"])) if "state" in doc else d.state,
            noise=build("noise", lambda: JointNoiseModel(**doc["noise"])) if "noise" in doc else d.noise,
            detectors=tuple(dets),
            thresholds=build("thresholds", lambda: ThresholdConfig(**doc["thresholds"]))
            if "thresholds" in doc
            else d.thresholds,
            window=doc.get("window", d.window),
            trials=doc.get("trials", d.trials),
            acquisition=None if acq is None else build("acquisition", lambda: AcquisitionSpec(**acq)),
            seed=doc["seed"],
            mode=doc.get("mode", d.mode),
            beamwidth=doc.get("beamwidth", d.beamwidth),
            calibration_windows=cal.get("windows", d.calibration_windows),
            calibration_squeeze=cal.get("squeeze", d.calibration_squeeze),
            override_calibration=doc.get("override_calibration", d.override_calibration),
            flip=doc.get("flip", d.flip),
            bootstrap=doc.get("bootstrap", d.bootstrap),
            throughput_target=doc.get("throughput_target", d.throughput_target),
        )
        cfg.validate()
        return cfg

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<document>", f"not valid JSON: {exc}") from None
        return cls.from_dict(doc)


def dumps(doc) -> str:
    # repr-based floats round-trip bit-exactly
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def run_calibration(cfg: ExperimentConfig):
    """Partner-off calibration of all four detectors on squeezed reference states."""
    root = root_key(cfg.seed)
    reports = []
    for i, det in enumerate(cfg.detectors):
        source = squeezed_along(cfg.physics, det.observable, det.phase, cfg.calibration_squeeze)
        reports.append(
            calibrate(
                det,
                source,
                cfg.physics,
                cfg.thresholds.for_observable(det.observable),
                cfg.calibration_windows,
                Stream(derive_key(root, _CAL, i)),
                cfg.window,
            )
        )
    return reports


def _adc_for(cfg: ExperimentConfig, mean: float, std: float) -> AdcConfig:
    return AdcConfig.auto(cfg.acquisition.bits, mean, std, cfg.acquisition.span)


def _chain(cfg, readings, failed, keys_jitter, mean, std):
    if cfg.acquisition is None:
        return readings, failed
    jit = None
    if cfg.acquisition.jitter > 0:
        jit = cfg.acquisition.jitter * kernels.fill_normal(keys_jitter, 0, readings.shape[1])
    return acquire_windows(readings, failed, _adc_for(cfg, mean, std), jit)


def _side_moments(cfg: ExperimentConfig, det: DetectorConfig):
    mu, var = quadrature(cfg.initial_state, det.observable, det.phase, cfg.physics)
    s = cfg.noise.sx if det.observable == "X" else cfg.noise.sp
    return mu, math.sqrt(var + s * s)


def simulate_windows(cfg: ExperimentConfig, pair: int, lo: int, hi: int, acquisition: bool = True):
    """Verdicts ``(x_out, p_out)`` for windows ``lo .. hi-1`` of setting pair ``pair``.

    With ``acquisition=False`` the readout chain is bypassed even if configured,
    which gives the analog reference path on identical raw readings.
    """
    if not acquisition and cfg.acquisition is not None:
        cfg = replace(cfg, acquisition=None)
    pkey = derive_key(root_key(cfg.seed), _RUN, pair)
    idx = np.arange(lo, hi)
    dx, dp = (cfg.detectors[i] for i in PAIR_DETECTORS[pair])
    w = cfg.window
    eps = cfg.thresholds
    if cfg.mode == "dual":
        out = []
        for side, det, e in ((0, dx, eps.eps_x), (1, dp, eps.eps_p)):
            mu, sigma = _side_moments(cfg, det)
            nk = derive_keys(pkey, idx, side, NOISE)
            fk = derive_keys(pkey, idx, side, FAIL)
            if cfg.acquisition is None:
                out.append(kernels.gaussian_window_verdicts(nk, fk, w, mu, sigma, det.failure, e))
                continue
            vals = mu + sigma * kernels.fill_normal(nk, 0, w)
            if det.failure > 0:
                failed = kernels.fill_uniform(fk, 0, w) < det.failure
            else:
                failed = np.zeros(vals.shape, dtype=bool)
            vals, failed = _chain(cfg, vals, failed, derive_keys(pkey, idx, side, JITTER), mu, sigma)
            out.append(kernels.window_verdicts(np.nan_to_num(vals), failed, e))
        return out[0], out[1]
    return _single_sample_windows(cfg, pkey, idx, dx, dp)


def _single_sample_windows(cfg, pkey, idx, dx, dp):
    """One laser: one phase-space point per trial yields both readings."""
    phys = cfg.physics
    state = cfg.initial_state
    n, w = len(idx), cfg.window
    z = kernels.fill_normal(derive_keys(pkey, idx, 2, POINT), 0, 2 * w).reshape(n, w, 2)
    x0, p0 = phase_points(state, z[:, :, 0], z[:, :, 1])
    mw = phys.mass * phys.omega

    def rotate(theta):
        c, s = math.cos(theta), math.sin(theta)
        return c * x0 + s * p0 / mw, c * p0 - s * mw * x0

    xa, _ = rotate(dx.phase)
    xb, pb = rotate(dp.phase)
    v, gate_failed = kernels.photogate_transit(xb, pb, cfg.beamwidth, phys.mass, phys.omega)
    pr = phys.mass * v
    sides = []
    for side, det, vals, extra, e in ((0, dx, xa, None, cfg.thresholds.eps_x), (1, dp, pr, gate_failed, cfg.thresholds.eps_p)):
        failed = np.zeros((n, w), dtype=bool) if extra is None else extra.copy()
        if det.failure > 0:
            failed |= kernels.fill_uniform(derive_keys(pkey, idx, side, FAIL), 0, w) < det.failure
        if cfg.acquisition is not None:
            mu, var = quadrature(state, det.observable, det.phase, phys)
            vals, failed = _chain(cfg, np.where(failed, np.nan, vals), failed,
                                  derive_keys(pkey, idx, side, JITTER), mu, math.sqrt(var))
        sides.append(kernels.window_verdicts(np.nan_to_num(vals), failed, e))
    return sides[0], sides[1]


def _task(args):
    cfg, pair, lo, hi = args
    return simulate_windows(cfg, pair, lo, hi)


def _chunks(trials):
    return [(lo, min(lo + CHUNK_WINDOWS, trials)) for lo in range(0, trials, CHUNK_WINDOWS)]


def simulate_all(cfg: ExperimentConfig, workers: int = 1):
    """Verdict arrays for all four setting pairs, in pair order."""
    tasks = [(cfg, pair, lo, hi) for pair in range(4) for lo, hi in _chunks(cfg.trials)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_task, tasks))
    else:
        results = [_task(t) for t in tasks]
    per_pair = len(_chunks(cfg.trials))
    out = []
    for pair in range(4):
        chunk = results[pair * per_pair:(pair + 1) * per_pair]
        x = np.concatenate([c[0] for c in chunk])
        p = np.concatenate([c[1] for c in chunk])
        if cfg.flip:
            x, p = -x, -p
        out.append((x, p))
    return out


@dataclass
class RunReport:
    config: ExperimentConfig
    calibration: list
    tables: list
    indeterminate: list
    chsh: object
    bootstrap: list | None = None
    elapsed: float = 0.0
    outcomes: list | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        cfg = self.config
        doc = {
            "schema": REPORT_SCHEMA_ID,
            "config": cfg.to_dict(),
            "calibration": [r.to_dict() for r in self.calibration],
            "tables": [t.to_dict() for t in self.tables],
            "indeterminate": {lab: n for lab, n in zip(PAIR_LABELS, self.indeterminate)},
            "indeterminate_total": sum(self.indeterminate),
            "chsh": self.chsh.to_dict(),
            "metrics": {
                "windows": 4 * cfg.trials,
                "readings": 8 * cfg.trials * cfg.window,
                "throughput_target_readings_per_s": cfg.throughput_target,
            },
        }
        if self.bootstrap is not None:
            doc["bootstrap_stderr"] = {lab: s for lab, s in zip(PAIR_LABELS, self.bootstrap)}
        return doc

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["window_index", "pair_label", "x_outcome", "p_outcome", "indeterminate_flag"])
        for lab, (x, p) in zip(PAIR_LABELS, self.outcomes or []):
            bad = (x == 0) | (p == 0)
            for j in range(len(x)):
                wr.writerow([j, lab, int(x[j]), int(p[j]), int(bad[j])])
        return buf.getvalue()

    def timings(self) -> dict:
        readings = 8 * self.config.trials * self.config.window
        rate = readings / self.elapsed if self.elapsed > 0 else float("inf")
        return {
            "elapsed_s": self.elapsed,
            "readings_per_s": rate,
            "throughput_target_readings_per_s": self.config.throughput_target,
            "meets_target": rate >= self.config.throughput_target,
            "backend": kernels.BACKEND,
        }


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> RunReport:
    """Calibrate, simulate all four setting pairs, tally and evaluate CHSH.

    Raises :class:`ConfigError` for invalid configurations and
    :class:`~xpbell.sampling.CalibrationError` if a detector fails calibration
    and ``cfg.override_calibration`` is not set.
    """
    cfg.validate()
    t0 = time.perf_counter()
    reports = run_calibration(cfg)
    require_calibrated(reports, cfg.override_calibration)
    outcomes = simulate_all(cfg, workers)
    tables, bad = [], []
    for lab, (x, p) in zip(PAIR_LABELS, outcomes):
        counts, nbad = kernels.tally(x, p)
        tables.append(CountTable.from_array(lab, counts))
        bad.append(nbad)
    if any(t.total == 0 for t in tables):
        raise CalibrationError("a setting pair produced no determinate windows", reports)
    mode = "dual" if cfg.mode == "dual" else "single"
    result = chsh_from_tables(tables, sample_mode=mode)
    boot = None
    if cfg.bootstrap > 0:
        root = root_key(cfg.seed)
        boot = [
            bootstrap_stderr(t, Stream(derive_key(root, _BOOT, i)), cfg.bootstrap) for i, t in enumerate(tables)
        ]
    return RunReport(cfg, reports, tables, bad, result, boot, time.perf_counter() - t0, outcomes)

