"""Experiment configuration: one flat, typed TOML table per run.

Keys not given in the file fall back to the benchmark defaults of the chosen
experiment, so an empty file (or no file) reproduces the reference runs.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .core import FrequencyDensity, make_frequency_density, tent_table
from .presets import PROFILES, Preset

EXPERIMENTS = ("sync_identical", "trapping", "contraction", "meanfield_convergence", "lemma54_audit", "solver_crosscheck")


@dataclass
class ExperimentConfig:
    experiment: str
    K: float = 1.0
    # frequency law: "uniform" (g_C), "atoms" (g_atoms), "piecewise" (g_table) or "tent" (g_C)
    g_kind: str = "uniform"
    g_C: float = 0.5
    g_atoms: list = field(default_factory=lambda: [[0.0, 1.0]])
    g_table: list = field(default_factory=list)
    m_omega: int = 32
    # initial data: preset name or path to a grid-density CSV
    initial: str = "raised-cosine"
    init_center: float = float(np.pi)
    init_halfwidth: float = 1.0
    init_shift: float = 0.0
    init_jitter: float = 0.0
    # second initial datum (contraction only)
    initial2: str = "tent"
    init2_center: float = float(np.pi)
    init2_halfwidth: float = 0.9
    init2_shift: float = 0.4
    n_particles: int = 200
    n_ladder: list = field(default_factory=lambda: [32, 64, 128, 256, 512])
    m_theta: int = 512
    m_eta: int = 128
    resolutions: list = field(default_factory=lambda: [[512, 256], [1024, 512]])
    dt: float = 1e-3
    t_end: float = 10.0
    horizon: float = 5.0
    sample_every: int = 10
    n_fields: int = 1000
    p_values: list = field(default_factory=lambda: [1, 2, 3, 5])
    seed: int = 0
    output_dir: str = "out"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def frequency_density(self) -> FrequencyDensity:
        if self.g_kind == "uniform":
            return make_frequency_density("uniform", C=self.g_C, n=self.m_omega)
        if self.g_kind == "tent":
            return make_frequency_density("piecewise", table=tent_table(self.g_C), n=self.m_omega)
        if self.g_kind == "piecewise":
            return make_frequency_density("piecewise", table=[tuple(r) for r in self.g_table], n=self.m_omega)
        if self.g_kind == "atoms":
            return make_frequency_density("atoms", atoms={float(o): float(m) for o, m in self.g_atoms})
        raise ValueError(f"unknown g_kind {self.g_kind!r}")

    def preset(self, second: bool = False) -> Preset:
        if second:
            return Preset(self.initial2, self.init2_center, self.init2_halfwidth, self.init2_shift)
        return Preset(self.initial, self.init_center, self.init_halfwidth, self.init_shift)

    def initial_is_file(self, second: bool = False) -> bool:
        return (self.initial2 if second else self.initial) not in PROFILES

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


DEFAULTS: dict[str, dict] = {
    "sync_identical": dict(
        K=1.0, g_kind="atoms", g_atoms=[[0.0, 1.0]], initial="uniform", init_halfwidth=1.0,
        n_particles=200, m_eta=200, dt=1e-3, t_end=10.0, sample_every=10,
    ),
    "trapping": dict(
        K=2.0, g_kind="atoms", g_atoms=[[-0.5, 0.5], [0.5, 0.5]], initial="uniform",
        init_halfwidth=0.5, init_shift=-1.0, n_particles=200, m_eta=100, dt=1e-3, t_end=10.0, sample_every=10,
    ),
    "contraction": dict(
        K=2.0, g_kind="uniform", g_C=0.5, m_omega=32, initial="raised-cosine", init_halfwidth=1.0,
        initial2="tent", init2_halfwidth=0.9, init2_shift=0.4, m_eta=128, dt=1e-3, horizon=5.0, sample_every=10,
    ),
    "meanfield_convergence": dict(
        K=1.0, g_kind="uniform", g_C=0.5, m_omega=32, initial="raised-cosine", init_halfwidth=1.0,
        init_shift=0.5, n_ladder=[32, 64, 128, 256, 512], m_theta=4096, m_eta=1024, dt=1e-3, t_end=1.0,
    ),
    "lemma54_audit": dict(g_kind="uniform", g_C=0.5, m_omega=8, m_eta=16, n_fields=1000, p_values=[1, 2, 3, 5]),
    "solver_crosscheck": dict(
        K=1.0, g_kind="uniform", g_C=0.5, m_omega=16, initial="raised-cosine", init_halfwidth=1.0,
        init_shift=0.5, resolutions=[[512, 256], [1024, 512]], dt=1e-3, t_end=1.0,
    ),
}


def default_config(experiment: str, **overrides) -> ExperimentConfig:
    return ExperimentConfig(experiment=experiment, **{**DEFAULTS[experiment], **overrides})


def load_config(path, experiment: str | None = None) -> ExperimentConfig:
    """Read a flat TOML file; ``experiment`` (from the CLI) wins over the file's key."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    exp = experiment or data.get("experiment")
    if exp is None:
        raise ValueError("config does not name an experiment")
    data.pop("experiment", None)
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ValueError(f"config must be flat; tables found for {nested}")
    cfg = default_config(exp, **data)
    base = Path(path).parent
    for key in ("initial", "initial2"):
        val = getattr(cfg, key)
        if val not in PROFILES:
            p = Path(val) if Path(val).is_absolute() else base / val
            if not p.exists():
                raise FileNotFoundError(f"{key} = {val!r} is neither a preset nor an existing file")
            setattr(cfg, key, str(p))
    return cfg
