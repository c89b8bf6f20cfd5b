"""Run configuration: TOML parsing with defaults, validation and emission."""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

import tomli
import tomli_w

from .codec import DecoderConfig, EncoderConfig
from .dynamics import MODE_LENGTH, ModeSchedule, TrendSpec
from .pipeline import ConvergenceSpec, LossSpec, ModelSpec, PipelineConfig, model_spec
from .rde import RdeConfig
from .rsnn import LifParams, StdpParams, SynapseParams
from .tda import TdaConfig


class ConfigError(ValueError):
    pass


@dataclass
class DatasetSection:
    kind: str = "lorenz"
    path: str = ""
    column: str = "value"
    mode_length: int = MODE_LENGTH
    h: float = 0.01
    substeps: int = 1
    trend_amplitude: float = 0.0
    trend_period: float = 300.0


@dataclass
class RsnnSection:
    connectivity: float = 0.2
    tau_m: float = 20.0
    v_rest: float = -65.0
    v_th: float = -55.0
    v_reset: float = -70.0
    refractory: int = 2
    eta_plus: float = 0.01
    eta_minus: float = 0.01
    tau_plus: float = 20.0
    tau_minus: float = 20.0
    w_min: float = 0.0
    w_max: float = 1.0
    gain: float = 0.25
    inhibitory_scale: float = 4.0
    input_weight: float = 8.0
    input_fraction: float = 0.05


@dataclass
class EncoderSection:
    channels: int = 8
    sf_threshold: float = 0.1
    ratio: float = 2.0


@dataclass
class DecoderSection:
    tau: int = 30
    gamma: float = 0.924


@dataclass
class OnlineSection:
    readout: str = "membrane"
    sampling: str = "betweenness"
    recorded: int = 0
    target: str = "increment"
    buffer: int = 200
    cooldown: int = 0


@dataclass
class RdeSection:
    s: int = 3
    M: int = 100
    E: int = 3
    delay: int = 2
    k_nn: int = 4
    trim: float = 0.1
    eps_w: float = 1e-3


@dataclass
class TdaSection:
    embed_dim: int = 3
    delay: int = 2
    dim: int = 1


@dataclass
class ArSection:
    order: int = 8
    lr: float = 0.01


@dataclass
class RunConfig:
    """Top-level keys mirror the CLI flags; sections hold module parameters.

    ``threshold = 0`` and ``recorded = 0`` / ``cooldown = 0`` mean "use the
    default for the chosen loss / network size / window".
    """

    seed: int = 0
    out: str = "runs/default"
    model: str = "wass"
    neurons: int = 500
    window: int = 30
    threshold: float = 0.0
    epsilon: float = 0.1
    dataset: DatasetSection = field(default_factory=DatasetSection)
    rsnn: RsnnSection = field(default_factory=RsnnSection)
    encoder: EncoderSection = field(default_factory=EncoderSection)
    decoder: DecoderSection = field(default_factory=DecoderSection)
    online: OnlineSection = field(default_factory=OnlineSection)
    rde: RdeSection = field(default_factory=RdeSection)
    tda: TdaSection = field(default_factory=TdaSection)
    ar: ArSection = field(default_factory=ArSection)

    def pipeline(self) -> PipelineConfig:
        r = self.rsnn
        return PipelineConfig(
            neurons=self.neurons,
            connectivity=r.connectivity,
            encoder=EncoderConfig(self.encoder.channels, self.encoder.sf_threshold, self.encoder.ratio),
            decoder=DecoderConfig(self.decoder.tau, self.decoder.gamma),
            readout=self.online.readout,
            lif=LifParams(r.tau_m, r.v_rest, r.v_th, r.v_reset, r.refractory),
            stdp=StdpParams(r.eta_plus, r.eta_minus, r.tau_plus, r.tau_minus, r.w_min, r.w_max),
            synapse=SynapseParams(r.gain, r.inhibitory_scale, r.input_weight, r.input_fraction),
            sampling=self.online.sampling,
            recorded=self.online.recorded or None,
            rde=RdeConfig(
                s=self.rde.s, M=self.rde.M, E=self.rde.E, delay=self.rde.delay, k_nn=self.rde.k_nn,
                horizon=1, trim=self.rde.trim, eps_w=self.rde.eps_w,
            ),
            target=self.online.target,
            buffer=self.online.buffer,
            cooldown=self.online.cooldown or None,
            tda=TdaConfig(self.window, self.tda.embed_dim, self.tda.delay, 1.0, self.tda.dim, 0, False),
        )

    def model_spec(self) -> ModelSpec:
        spec = model_spec(self.model)
        if self.threshold and spec.kind in ("wasserstein", "rmse"):
            spec = dataclasses.replace(spec, threshold=self.threshold)
        return spec

    def loss(self) -> LossSpec:
        spec = self.model_spec()
        kind = spec.kind if spec.kind in ("wasserstein", "rmse") else "rmse"
        return LossSpec(kind, self.window, self.threshold or None)

    def schedule(self) -> ModeSchedule:
        return ModeSchedule.canonical(self.dataset.mode_length)

    def trend(self) -> TrendSpec:
        return TrendSpec(self.dataset.trend_amplitude, self.dataset.trend_period)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTION_TYPES = {
    "dataset": DatasetSection, "rsnn": RsnnSection, "encoder": EncoderSection, "decoder": DecoderSection,
    "online": OnlineSection, "rde": RdeSection, "tda": TdaSection, "ar": ArSection,
}


def _coerce(name: str, value, default):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name}: expected a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{name}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{name}: unsupported value {value!r}")


def _fill(cls, data: dict, prefix: str = ""):
    obj = cls()
    known = {f.name for f in fields(cls)}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if key not in known:
            raise ConfigError(f"unknown key {name!r}")
        current = getattr(obj, key)
        if key in _SECTION_TYPES and cls is RunConfig:
            if not isinstance(value, dict):
                raise ConfigError(f"{name}: expected a table")
            setattr(obj, key, _fill(_SECTION_TYPES[key], value, f"{key}."))
        else:
            setattr(obj, key, _coerce(name, value, current))
    return obj


def validate(cfg: RunConfig) -> RunConfig:
    checks = [
        ("epsilon", cfg.epsilon > 0, "must be > 0"),
        ("window", cfg.window >= 2, "must be >= 2"),
        ("threshold", cfg.threshold >= 0, "must be >= 0 (0 selects the default)"),
        ("neurons", cfg.neurons >= 5, "must be >= 5"),
        ("dataset.kind", cfg.dataset.kind in ("lorenz", "csv"), "must be 'lorenz' or 'csv'"),
        ("dataset.mode_length", cfg.dataset.mode_length >= 1, "must be >= 1"),
        ("dataset.h", cfg.dataset.h > 0, "must be > 0"),
        ("dataset.substeps", cfg.dataset.substeps >= 1, "must be >= 1"),
        ("online.recorded", 0 <= cfg.online.recorded <= cfg.neurons, "must lie in [0, neurons]"),
        ("online.cooldown", cfg.online.cooldown >= 0, "must be >= 0"),
        ("ar.order", cfg.ar.order >= 1, "must be >= 1"),
        ("ar.lr", cfg.ar.lr >= 0, "must be >= 0"),
    ]
    for name, ok, msg in checks:
        if not ok:
            raise ConfigError(f"{name}: {msg}")
    if cfg.dataset.kind == "csv":
        if not cfg.dataset.path:
            raise ConfigError("dataset.path: required for csv datasets")
        if not Path(cfg.dataset.path).exists():
            raise ConfigError(f"dataset.path: file {cfg.dataset.path!r} does not exist")
    try:
        model_spec(cfg.model)
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from None
    try:
        TrendSpec(cfg.dataset.trend_amplitude, cfg.dataset.trend_period)
    except ValueError as exc:
        raise ConfigError(f"dataset.trend_period: {exc}") from None
    builders = [
        ("encoder", lambda: EncoderConfig(cfg.encoder.channels, cfg.encoder.sf_threshold, cfg.encoder.ratio)),
        ("decoder", lambda: DecoderConfig(cfg.decoder.tau, cfg.decoder.gamma)),
        ("rsnn", lambda: LifParams(cfg.rsnn.tau_m, cfg.rsnn.v_rest, cfg.rsnn.v_th, cfg.rsnn.v_reset, cfg.rsnn.refractory)),
        ("rsnn", lambda: StdpParams(cfg.rsnn.eta_plus, cfg.rsnn.eta_minus, cfg.rsnn.tau_plus, cfg.rsnn.tau_minus, cfg.rsnn.w_min, cfg.rsnn.w_max)),
        ("rde", lambda: RdeConfig(cfg.rde.s, cfg.rde.M, cfg.rde.E, cfg.rde.delay, cfg.rde.k_nn, 1, cfg.rde.trim, cfg.rde.eps_w)),
        ("tda", lambda: TdaConfig(cfg.window, cfg.tda.embed_dim, cfg.tda.delay)),
        ("online", cfg.pipeline),
        ("convergence", lambda: ConvergenceSpec(cfg.epsilon)),
    ]
    for section, build in builders:
        try:
            build()
        except ValueError as exc:
            raise ConfigError(f"{section}: {exc}") from None
    if not 0 < cfg.rsnn.connectivity <= 1:
        raise ConfigError("rsnn.connectivity: must lie in (0, 1]")
    return cfg


_LINE = re.compile(r"line (\d+)")


def parse_config(text: str) -> RunConfig:
    """Parse a TOML document into a validated :class:`RunConfig`."""
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = _LINE.search(str(exc))
        where = f"line {m.group(1)}" if m else "unknown line"
        raise ConfigError(f"parse error at {where}: {exc}") from None
    return validate(_fill(RunConfig, data))


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def emit_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())


def apply_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Apply non-None top-level overrides (CLI flags) and revalidate."""
    data = cfg.to_dict()
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "dataset":
            if value == "lorenz":
                data["dataset"]["kind"] = "lorenz"
            elif value.startswith("csv:"):
                data["dataset"]["kind"] = "csv"
                data["dataset"]["path"] = value[4:]
            else:
                raise ConfigError(f"dataset: expected 'lorenz' or 'csv:<path>', got {value!r}")
        else:
            data[key] = value
    return validate(_fill(RunConfig, data))
