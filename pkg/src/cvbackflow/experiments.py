"""Declarative experiment runner: configs, presets, witness traces and CSV output."""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import qbm
from .channels import GaussianChannel, apply, embed_local
from .errors import CVError, ConfigError, ExperimentError
from .evolutions import (CP_TOL, Evolution, is_markovian_at, noise_profile_oscillating, noise_profile_rational,
                         noise_profile_rational_scaled, sample_intervals)
from .symplectic import Bipartition, CovarianceMatrix, ghz_w_state, schur_complement, symplectic_eigenvalues, \
    two_mode_squeezed
from .witnesses import BACKFLOW_REL_TOL, BackflowReport, WitnessTrace, backflows_inside, detect_backflows, \
    entanglement_ppt, steerability

SCENARIOS = ("classical_noise_steering", "classical_noise_entanglement", "oscillating_noise", "qbm_high_T",
             "qbm_low_T", "custom")
PROFILES = ("rational", "rational_scaled", "oscillating", "qbm")
STATE_KINDS = ("two_mode", "three_mode")
WITNESSES = ("steering_AB", "entanglement_PPT")
PRESETS = ("fig2a", "fig2b", "fig3a", "fig3b", "fig4", "fig5")
DEFAULT_SAMPLES = 600

_SCENARIO_PROFILE = {
    "classical_noise_steering": "rational",
    "classical_noise_entanglement": "rational_scaled",
    "oscillating_noise": "oscillating",
    "qbm_high_T": "qbm",
    "qbm_low_T": "qbm",
}
_SCENARIO_TEMPERATURE = {"qbm_high_T": 100.0, "qbm_low_T": 0.5}

_STATES: dict[str, tuple[Callable[[float], CovarianceMatrix], Bipartition]] = {
    "two_mode": (two_mode_squeezed, Bipartition(1, 1)),
    "three_mode": (ghz_w_state, Bipartition(2, 1)),
}


@dataclass(frozen=True)
class Tolerances:
    backflow_rel_tol: float = BACKFLOW_REL_TOL
    cp_tol: float = CP_TOL
    quad_rel_tol: float = 1e-8
    ode_rel_tol: float = 1e-9
    cross_tol: float = 1e-6
    omega_max_factor: float = 50.0


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description; build it with :func:`config_from_mapping`."""

    scenario: str
    profile: str
    states: tuple[str, ...]
    r: float
    times: tuple[float, ...]
    witnesses: tuple[str, ...]
    eta0: tuple[float, ...] = ()
    alpha: tuple[float, ...] = ()
    omega0: float = 7.0
    omega_c: float = 1.0
    s: float = 1.0
    temperature: float = 100.0
    tolerances: Tolerances = field(default_factory=Tolerances)
    output_dir: str = "out"

    @property
    def sweep(self) -> tuple[str, tuple[float, ...]] | None:
        if self.profile == "oscillating":
            return "eta0", self.eta0
        if self.profile == "qbm":
            return "alpha", self.alpha
        return None

    def qbm_params(self, alpha: float) -> qbm.QbmParams:
        tol = self.tolerances
        return qbm.QbmParams(alpha, self.omega0, self.omega_c, self.s, self.temperature, tol.quad_rel_tol,
                             tol.ode_rel_tol, tol.omega_max_factor, tol.cross_tol)


# ---------------------------------------------------------------- parsing


def _flatten(data: Mapping[str, Any], prefix: str = "") -> dict[str, Any]:
    out = {}
    for k, v in data.items():
        key = f"{prefix}{k}"
        if isinstance(v, Mapping):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


_KNOWN_KEYS = {"preset", "scenario", "witnesses", "state.kind", "state.r", "evolution.profile", "evolution.eta0",
               "grid.t_max", "grid.samples", "grid.times", "output.dir",
               *(f"qbm.{k}" for k in ("alpha", "omega0", "omega_c", "s", "temperature")),
               *(f"tolerances.{k}" for k in Tolerances.__dataclass_fields__)}


def _number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _as_list(v) -> list:
    return list(v) if isinstance(v, (list, tuple)) else [v]


def load_preset(name: str) -> dict[str, Any]:
    if name not in PRESETS:
        raise ConfigError([f"unknown preset {name!r}; choose from {', '.join(PRESETS)}"])
    text = resources.files("cvbackflow.presets").joinpath(f"{name}.toml").read_text(encoding="utf-8")
    return _flatten(tomllib.loads(text))


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Read a TOML config; a ``preset`` key pulls in a shipped preset underneath it."""
    with open(path, "rb") as fh:
        try:
            data = _flatten(tomllib.load(fh))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError([f"{path}: {exc}"]) from exc
    if "preset" in data:
        if not isinstance(data["preset"], str):
            raise ConfigError([f"preset must be a string, got {data['preset']!r}"])
        base = load_preset(data["preset"])
        base.update(data)
        data = base
    return data


def parse_override(item: str) -> tuple[str, Any]:
    """``KEY=VAL`` with VAL parsed as a TOML value (bare words fall back to strings)."""
    key, sep, raw = item.partition("=")
    if not sep or not key.strip():
        raise ConfigError([f"override {item!r} is not of the form KEY=VAL"])
    key = key.strip()
    if "." not in key and key not in _KNOWN_KEYS:
        key = f"tolerances.{key}"
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key, value


def config_from_mapping(raw: Mapping[str, Any]) -> ExperimentConfig:
    """Validate a flat (dotted-key) or nested mapping; every violation is reported at once."""
    data = _flatten(raw)
    errs: list[str] = []
    for key in sorted(set(data) - _KNOWN_KEYS):
        errs.append(f"unknown key {key!r}")

    scenario = data.get("scenario")
    if scenario not in SCENARIOS:
        errs.append(f"scenario must be one of {', '.join(SCENARIOS)}, got {scenario!r}")
    profile = data.get("evolution.profile", _SCENARIO_PROFILE.get(scenario))
    if profile not in PROFILES:
        errs.append(f"evolution.profile must be one of {', '.join(PROFILES)}, got {profile!r}")

    states = _as_list(data.get("state.kind", list(STATE_KINDS)))
    if not states:
        errs.append("state.kind must name at least one state")
    for k in states:
        if k not in STATE_KINDS:
            errs.append(f"unknown state kind {k!r}")

    r = data.get("state.r", 2.0)
    if not _number(r) or r < 0:
        errs.append(f"state.r must be a finite number >= 0, got {r!r}")

    witnesses = _as_list(data.get("witnesses", []))
    if not witnesses:
        errs.append("witnesses must list at least one of " + ", ".join(WITNESSES))
    for w in witnesses:
        if w not in WITNESSES:
            errs.append(f"unknown witness {w!r}")

    times: tuple[float, ...] = ()
    if "grid.times" in data:
        tl = _as_list(data["grid.times"])
        if len(tl) < 2 or not all(_number(x) for x in tl):
            errs.append("grid.times must hold at least two finite numbers")
        elif tl[0] != 0 or any(b <= a for a, b in zip(tl, tl[1:])):
            errs.append("grid.times must start at 0 and be strictly increasing")
        else:
            times = tuple(float(x) for x in tl)
    else:
        t_max = data.get("grid.t_max")
        samples = data.get("grid.samples", DEFAULT_SAMPLES)
        ok = True
        if not _number(t_max) or t_max <= 0:
            errs.append(f"grid.t_max must be a positive number (non-increasing grid), got {t_max!r}")
            ok = False
        if not isinstance(samples, int) or isinstance(samples, bool) or samples < 2:
            errs.append(f"grid.samples must be an integer >= 2, got {samples!r}")
            ok = False
        if ok:
            times = tuple(np.linspace(0.0, float(t_max), samples).tolist())

    eta0 = _as_list(data.get("evolution.eta0", []))
    if profile == "oscillating":
        if not eta0:
            errs.append("the oscillating profile needs evolution.eta0")
        for v in eta0:
            if not _number(v) or v < 0:
                errs.append(f"evolution.eta0 values must be finite and >= 0, got {v!r}")

    alpha = _as_list(data.get("qbm.alpha", []))
    qvals = {k: data.get(f"qbm.{k}", d) for k, d in
             (("omega0", 7.0), ("omega_c", 1.0), ("s", 1.0),
              ("temperature", _SCENARIO_TEMPERATURE.get(scenario, 100.0)))}
    if profile == "qbm":
        if not alpha:
            errs.append("QBM runs need qbm.alpha")
        for v in alpha:
            if not _number(v) or v <= 0:
                errs.append(f"qbm.alpha values must be finite and > 0, got {v!r}")
    for k, v in qvals.items():
        if not _number(v) or v <= 0:
            errs.append(f"qbm.{k} must be a finite number > 0, got {v!r}")

    tol_kw = {}
    for k in Tolerances.__dataclass_fields__:
        key = f"tolerances.{k}"
        if key in data:
            v = data[key]
            if not _number(v) or v <= 0:
                errs.append(f"{key} must be a finite number > 0, got {v!r}")
            else:
                tol_kw[k] = float(v)

    out_dir = data.get("output.dir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        errs.append(f"output.dir must be a non-empty string, got {out_dir!r}")

    if errs:
        raise ConfigError(errs)
    return ExperimentConfig(
        scenario=scenario, profile=profile, states=tuple(dict.fromkeys(states)), r=float(r), times=times,
        witnesses=tuple(dict.fromkeys(witnesses)), eta0=tuple(float(v) for v in eta0),
        alpha=tuple(float(v) for v in alpha), **{k: float(v) for k, v in qvals.items()},
        tolerances=Tolerances(**tol_kw), output_dir=out_dir)


def preset_config(name: str, overrides: Mapping[str, Any] | None = None) -> ExperimentConfig:
    data = load_preset(name)
    data.update(overrides or {})
    return config_from_mapping(data)


# ---------------------------------------------------------------- running


@dataclass(frozen=True)
class TraceResult:
    """One witness on one initial state for one sweep value."""

    label: str
    witness: str
    state: str
    sweep_value: float | None
    trace: WitnessTrace
    markovian: tuple[bool, ...]
    nm_intervals: tuple[tuple[float, float], ...]
    report: BackflowReport
    nm_witnessed: tuple[bool, ...]

    @property
    def backflow_flags(self) -> tuple[bool, ...]:
        """Per sample: whether the witness rose on the step ending at that sample."""
        flags = [False] * len(self.trace)
        for a, b in self.report.index_ranges:
            for i in range(a + 1, b + 1):
                flags[i] = True
        return tuple(flags)

    @property
    def every_nm_witnessed(self) -> bool:
        return all(self.nm_witnessed)

    @property
    def summary(self) -> str:
        n_nm = len(self.nm_intervals)
        return (f"{self.label}: {n_nm} NM interval(s), {len(self.report.intervals)} backflow interval(s), "
                f"{sum(self.nm_witnessed)}/{n_nm} NM interval(s) witnessed, "
                f"every NM interval witnessed: {'yes' if self.every_nm_witnessed else 'no'}")


@dataclass(frozen=True)
class ExperimentBundle:
    config: ExperimentConfig
    results: tuple[TraceResult, ...]

    @property
    def summary(self) -> tuple[str, ...]:
        return tuple(r.summary for r in self.results)

    def get(self, witness: str, state: str, sweep_value: float | None = None) -> TraceResult:
        for r in self.results:
            if r.witness == witness and r.state == state and r.sweep_value == sweep_value:
                return r
        raise KeyError((witness, state, sweep_value))


def witness_value(witness: str, cov: CovarianceMatrix, part: Bipartition) -> float:
    if witness == "steering_AB":
        return steerability(cov, part, "A->B")
    if witness == "entanglement_PPT":
        return entanglement_ppt(cov, part)
    raise ValueError(f"unknown witness {witness!r}")


def _classical_evolution(cfg: ExperimentConfig, value: float | None) -> Evolution:
    if cfg.profile == "rational":
        return noise_profile_rational()
    if cfg.profile == "rational_scaled":
        return noise_profile_rational_scaled()
    return noise_profile_oscillating(value)


def _sweep_point(cfg: ExperimentConfig, value: float | None) -> list[TraceResult]:
    times = np.asarray(cfg.times)
    where = "" if value is None else f"{cfg.sweep[0]}={value:g}"
    try:
        if cfg.profile == "qbm":
            p = cfg.qbm_params(value)
            coeffs = qbm.coefficients(p, times)
            ev = qbm.as_evolution(coeffs)
            states = {k: qbm.evolve_covariance(_STATES[k][0](cfg.r), p, times, 1, coeffs) for k in cfg.states}
        else:
            ev = _classical_evolution(cfg, value)
            states = {}
            for k in cfg.states:
                s0 = _STATES[k][0](cfg.r)
                states[k] = [apply(embed_local(GaussianChannel(*_tn(ev, t)), s0.modes), s0) for t in times]
        markov = tuple(is_markovian_at(ev, float(t), cfg.tolerances.cp_tol).markovian_at_t for t in times)
    except CVError as exc:
        raise ExperimentError(cfg.scenario, where or "evolution", exc) from exc
    nm = tuple(sample_intervals(times, [not m for m in markov]))
    out = []
    for w in cfg.witnesses:
        for k in cfg.states:
            part = _STATES[k][1]
            label = f"{w}-{k}" + (f"-{where}" if where else "")
            vals = []
            for t, cov in zip(times, states[k]):
                try:
                    vals.append(witness_value(w, cov, part))
                except CVError as exc:
                    raise ExperimentError(cfg.scenario, f"{label}, t={t:g}", exc) from exc
            trace = WitnessTrace(tuple(times.tolist()), tuple(vals), label)
            report = detect_backflows(trace, cfg.tolerances.backflow_rel_tol)
            out.append(TraceResult(label, w, k, value, trace, markov, nm, report,
                                   tuple(backflows_inside(report, nm))))
    return out


def _tn(ev: Evolution, t: float):
    T, _, N, _ = ev.matrices_at(float(t))
    return T, N


def run(cfg: ExperimentConfig, threads: int = 1) -> ExperimentBundle:
    """Evaluate every (sweep value, witness, state) trace of a config.

    Sweep points run on up to ``threads`` workers; results keep config order,
    so the bundle does not depend on the thread count.
    """
    values = cfg.sweep[1] if cfg.sweep else (None,)
    if threads > 1 and len(values) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda v: _sweep_point(cfg, v), values))
    else:
        chunks = [_sweep_point(cfg, v) for v in values]
    return ExperimentBundle(cfg, tuple(r for chunk in chunks for r in chunk))


# ---------------------------------------------------------------- output


def format_value(x: float) -> str:
    return f"{x:.12f}"


def csv_text(result: TraceResult) -> str:
    lines = ["t,value,markovian,backflow"]
    for t, v, m, b in zip(result.trace.times, result.trace.values, result.markovian, result.backflow_flags):
        lines.append(f"{format_value(t)},{format_value(v)},{int(m)},{int(b)}")
    return "\n".join(lines) + "\n"


def _file_name(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.=-]", "_", label) + ".csv"


def emit_csv(bundle: ExperimentBundle, out_dir: str | Path) -> list[Path]:
    """Write one CSV per trace (plus ``summary.txt``) into ``out_dir``; returns the trace paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for r in bundle.results:
        path = out / _file_name(r.label)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text(r))
        paths.append(path)
    with open(out / "summary.txt", "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(bundle.summary) + "\n")
    return paths


# ---------------------------------------------------------------- oracle check


def oracle_equivalence(r_values: Sequence[float] | None = None, eta_values: Sequence[float] | None = None,
                       tau_values: Sequence[float] | None = None) -> dict[str, float]:
    """Largest |closed form - numeric pipeline| for the smallest symplectic eigenvalue of M_B.

    The pipeline builds the state, applies the embedded lossy channel on mode 1,
    takes the Schur complement and extracts symplectic eigenvalues.
    """
    from . import oracles

    rs = np.arange(1, 13) * 0.25 if r_values is None else r_values
    etas = np.arange(0, 21) * 0.25 if eta_values is None else eta_values
    taus = np.arange(1, 5) * 0.25 if tau_values is None else tau_values
    closed = {"two_mode": oracles.nu_minus_2mode, "three_mode": oracles.nu_minus_3mode}
    worst = {k: 0.0 for k in closed}
    for k, (make, part) in _STATES.items():
        for r in rs:
            s0 = make(float(r))
            for eta in etas:
                for tau in taus:
                    ch = embed_local(GaussianChannel.isotropic(float(tau), float(eta)), s0.modes)
                    nu = symplectic_eigenvalues(schur_complement(apply(ch, s0), part, "B"))[0]
                    ref = closed[k](float(r), oracles.effective_noise(float(tau), float(eta)))
                    worst[k] = max(worst[k], abs(float(nu) - ref))
    return worst


def with_overrides(cfg_data: Mapping[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    data = _flatten(cfg_data)
    for item in overrides:
        k, v = parse_override(item)
        data[k] = v
    return data


__all__ = ["ExperimentConfig", "ExperimentBundle", "TraceResult", "Tolerances", "config_from_mapping",
           "preset_config", "load_preset", "load_config_file", "run", "emit_csv", "csv_text", "oracle_equivalence"]
