"""Experiment orchestration: run a configured experiment, persist CSV + JSON, compare rates."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import oscillator as osc
from .classical_rotor import angular_correlation, lyapunov_exponent, uniform_ensemble
from .config import ExperimentConfig
from .errors import ConfigError, EchoLabError, NumericalValidityError
from .glauber import (
    gaussian_weight,
    match_thermal,
    populations_from_weight,
    ring_weight,
    tabulated_weight,
)
from .hilbert import Region, cell_count, make_grid, uniform_mixture
from .qkr import RotorParams, mixture_echo
from .series import DecaySeries, fit_decay_rate, fit_log_growth, floor_limited_window

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CSV_HEADER = "t,value,stderr"
FOLLOW_TOLERANCE = 0.2


class MissingSeriesError(EchoLabError, KeyError):
    pass


@dataclass
class ResultBundle:
    kind: str
    config: ExperimentConfig
    series: dict[str, DecaySeries] = field(default_factory=dict)
    floors: dict[str, float] = field(default_factory=dict)
    scalars: dict[str, float] = field(default_factory=dict)
    fit_errors: dict[str, str] = field(default_factory=dict)
    comparison: dict | None = None
    out_dir: Path | None = None
    files: dict[str, str] = field(default_factory=dict)

    def summary(self) -> dict:
        series = {}
        for name, s in self.series.items():
            entry = {"file": self.files.get(name, f"{name}.csv"), "points": len(s), "label": s.label}
            if s.fit is not None:
                f = s.fit
                entry["fit"] = {"rate": f.rate, "rate_stderr": f.rate_stderr, "offset": f.offset,
                                "residual": f.residual, "window": list(f.window), "points": f.npoints}
            elif name in self.fit_errors:
                entry["fit"] = {"error": self.fit_errors[name]}
            if name in self.floors:
                entry["floor"] = self.floors[name]
            if len(s) > 1:
                entry["plateau"] = s.plateau(min(10, len(s) - 1))
            series[name] = entry
        return _json_clean({
            "schema_version": SCHEMA_VERSION,
            "code_version": __version__,
            "kind": self.kind,
            "config": self.config.to_dict(),
            "series": series,
            "scalars": dict(self.scalars),
            "comparison": self.comparison,
        })


def _json_clean(obj):
    if isinstance(obj, dict):
        return {str(k): _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


# --------------------------------------------------------------------------- persistence

def write_series_csv(path, series: DecaySeries) -> None:
    err = series.stderr if series.stderr is not None else np.zeros(len(series))
    data = np.column_stack([series.times, series.values, err])
    np.savetxt(path, data, fmt="%.12e", delimiter=",", header=CSV_HEADER, comments="", encoding="utf-8")


def read_series_csv(path, label: str = "") -> DecaySeries:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().strip()
    if header != CSV_HEADER:
        raise ConfigError(f"{path}: expected header {CSV_HEADER!r}, found {header!r}", field="csv")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2, encoding="utf-8")
    return DecaySeries(data[:, 0], data[:, 1], data[:, 2], label=label or path.stem)


def write_summary(path, summary: dict) -> None:
    text = json.dumps(summary, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_tabulated_weight(path):
    """Two-column text file: a header line, then rows of (action, P) with P the density."""
    try:
        data = np.loadtxt(path, comments="#", ndmin=2, encoding="utf-8")
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read tabulated weight {path}: {exc}", field="glauber.file") from None
    if data.shape[1] != 2:
        raise ConfigError(f"{path}: tabulated weight needs two columns", field="glauber.file")
    try:
        return tabulated_weight(data[:, 0], math.pi * data[:, 1])
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}", field="glauber.file") from None


def write_tabulated_weight(path, weight) -> None:
    data = np.column_stack([weight.grid, weight.values / math.pi])
    np.savetxt(path, data, fmt="%.12e", header="I P", comments="# ", encoding="utf-8")


# --------------------------------------------------------------------------- fitting helpers

def _attach_fit(bundle: ResultBundle, name: str, series: DecaySeries, window, floor: float | None,
                start: float = 1.0) -> DecaySeries:
    try:
        if window == "auto":
            if floor is None:
                raise ConfigError(f"no automatic window available for {name}", field="fit_window")
            window = floor_limited_window(series.times, series.values, floor, start=start)
        series = series.with_fit(tuple(window))
    except NumericalValidityError as exc:
        bundle.fit_errors[name] = str(exc)
        log.warning("fit of %s skipped: %s", name, exc)
    return series


# --------------------------------------------------------------------------- experiments

def _rotor_classical(bundle: ResultBundle, cfg: ExperimentConfig) -> None:
    r, c = cfg["rotor"], cfg["classical"]
    T, seed = cfg.get("experiment", "T"), cfg.get("experiment", "seed")
    if c["trajectories"] > 0:
        ens = uniform_ensemble(c["trajectories"], Region(*r["region"]), seed)
        corr = angular_correlation(ens, c["gamma"], r["K"], T)
        bundle.floors["classical"] = 1.0 / c["trajectories"]
        bundle.series["classical"] = _attach_fit(bundle, "classical", corr, c["fit_window"],
                                                 bundle.floors["classical"])
    lyap = lyapunov_exponent(r["K"], c["lyapunov_trajectories"], c["lyapunov_steps"], seed)
    bundle.scalars.update(lyapunov=lyap.exponent, lyapunov_stderr=lyap.stderr,
                          lyapunov_chaotic=lyap.chaotic, ln_half_K=math.log(r["K"] / 2) if r["K"] > 0 else None)


def _rotor_echo(bundle: ResultBundle, cfg: ExperimentConfig) -> None:
    r = cfg["rotor"]
    exp = cfg["experiment"]
    grid = make_grid(r["N"])
    region = Region(*r["region"])
    params = RotorParams.from_sigma(r["K"], r["sigma"], grid.hbar, r["symmetric"])
    mixture = uniform_mixture(grid, region, r["members"], exp["seed"])
    record = mixture_echo(mixture, exp["T"], params, threads=exp["threads"], peres=r["peres"])
    M = cell_count(region, grid.hbar)
    bundle.scalars.update(hbar=grid.hbar, N=grid.N, cell_count=M, members=len(mixture),
                          epsilon=params.epsilon, saturation_incoherent=1.0 / grid.N,
                          saturation_coherent=1.0 / (grid.N * max(M, 1)))
    floors = {"coherent": 1.0 / (grid.N * max(M, 1)), "incoherent": 1.0 / grid.N, "peres": 1.0 / grid.N}
    names = ("coherent", "incoherent", "peres") if r["peres"] else ("coherent", "incoherent")
    for name in names:
        bundle.floors[name] = floors[name]
        bundle.series[name] = _attach_fit(bundle, name, record.series(name), r["fit_window"], floors[name])
    _rotor_classical(bundle, cfg)
    if "classical" in bundle.series:
        try:
            bundle.comparison = compare_rates(bundle)
        except MissingSeriesError as exc:
            log.warning("rate comparison skipped: %s", exc)


def _drive(o: dict):
    if o["drive"] == "kicked":
        return osc.KickedDrive(o["g0"])
    if o["drive"] == "pulses":
        return osc.PulseTrainDrive(o["g0"], o["pulse_width"])
    return osc.HarmonicDrive(o["amplitudes"], o["phases"])


def _mixture(o: dict, seed: int) -> osc.CoherentMixture:
    center = complex(*o["center"])
    if o["mixture"] == "gaussian":
        weight = gaussian_weight(o["width"])
    elif o["mixture"] == "ring":
        weight = ring_weight(o["ring_action"], o["ring_width"])
    else:
        weight = match_thermal(o["temperature"], o["omega0"], o["hbar"]).weight
    return osc.CoherentMixture(center, weight, o["samples"], seed)


def _osc_correlation(bundle: ResultBundle, cfg: ExperimentConfig) -> None:
    o, exp = cfg["oscillator"], cfg["experiment"]
    params = osc.OscParams(o["omega0"], _drive(o))
    mixture = _mixture(o, exp["seed"])
    traj = osc.mixture_trajectories(mixture, params, exp["T"], o["dt"])
    floor = 1.0 / mixture.n_samples
    corr = osc.phase_autocorrelation(mixture, params, exp["T"], trajectories=traj)
    bundle.floors["phase_autocorrelation"] = floor
    bundle.series["phase_autocorrelation"] = _attach_fit(bundle, "phase_autocorrelation", corr,
                                                         o["fit_window"], floor)
    for sigma in o["sigmas"]:
        name = f"mixed_fidelity_sigma_{sigma:g}"
        s = osc.classical_mixed_fidelity(mixture, sigma, params, exp["T"], trajectories=traj)
        bundle.floors[name] = floor
        bundle.series[name] = _attach_fit(bundle, name, s, o["fit_window"], floor)
    mean_I = traj.action.mean(axis=1)
    err = traj.action.std(axis=1, ddof=1) / math.sqrt(mixture.n_samples) if mixture.n_samples > 1 else None
    bundle.series["mean_action"] = DecaySeries(traj.times, mean_I, err, label="mean action")
    diff = osc.mean_action_diffusion(mixture, params, exp["T"], trajectories=traj)
    bundle.scalars.update(diffusion_D=diff.D, diffusion_intercept=diff.intercept,
                          diffusion_residual=diff.residual, samples=mixture.n_samples)
    tau = bundle.series["phase_autocorrelation"].fitted_rate
    if tau:
        for sigma in o["sigmas"]:
            rate = bundle.series[f"mixed_fidelity_sigma_{sigma:g}"].fitted_rate
            if rate is not None:
                bundle.scalars[f"rate_ratio_sigma_{sigma:g}"] = rate / tau


def _osc_fgr(bundle: ResultBundle, cfg: ExperimentConfig) -> None:
    o, exp = cfg["oscillator"], cfg["experiment"]
    T = exp["T"]
    params = osc.OscParams(o["omega0"], _drive(o))
    mixture = _mixture(o, exp["seed"])
    traj = osc.mixture_trajectories(mixture, params, T, o["dt"])
    chi2 = osc.chi2_series(mixture, params, T, trajectories=traj)
    window = o["chi2_window"] if o["chi2_window"] != "auto" else (0.5 * T, float(T))
    K = osc.action_correlation_constant(chi2.times, chi2.values, window)
    measured = osc.classical_mixed_fidelity(mixture, o["fgr_sigma"], params, T, trajectories=traj)
    predicted = osc.fgr_fidelity(o["fgr_sigma"], K, T, times=traj.times)
    bundle.series["chi2"] = chi2
    bundle.series["mixed_fidelity"] = measured
    bundle.series["fgr_prediction"] = predicted
    bundle.scalars.update(K_action=K, chi2_window=list(window), fgr_sigma=o["fgr_sigma"],
                          fgr_max_relative_deviation=osc.fgr_deviation(measured, predicted))


def _osc_ivr(bundle: ResultBundle, cfg: ExperimentConfig) -> None:
    o, exp = cfg["oscillator"], cfg["experiment"]
    T = exp["T"]
    params = osc.OscParams(o["omega0"], _drive(o))
    alpha0 = complex(*o["alpha0"])
    sigma = o["epsilon"] / o["hbar"]
    sampler = osc.QuantumCellSampler(o["hbar"], o["ivr_samples"], exp["seed"], o["quantum_fluctuations"])
    amp = osc.ivr_fidelity_amplitude(alpha0, sigma, sampler, params, T, o["dt"])
    fid = amp.fidelity
    bundle.series["ivr_fidelity"] = DecaySeries(amp.times, fid, 2 * np.abs(amp.amplitude) * amp.stderr + amp.stderr**2,
                                                label="IVR fidelity")
    times = amp.times
    expo = np.zeros(times.size)
    grads = np.zeros(times.size)
    later = times > 0
    expo[later], grads[later] = osc.early_time_exponents(alpha0, o["epsilon"], o["hbar"], params, times[later], o["dt"])
    bundle.series["early_time_fidelity"] = DecaySeries(times, np.exp(-expo), np.zeros(times.size),
                                                       label="short-time law")
    bundle.series["early_time_exponent"] = DecaySeries(times, expo, np.zeros(times.size), label="-ln F")
    bundle.scalars.update(sigma=sigma, alpha0=[alpha0.real, alpha0.imag])
    lo, hi = o["early_window"]
    mask = (times >= lo) & (times <= hi)
    try:
        g = fit_log_growth(times[mask], expo[mask])
        s = fit_log_growth(times[mask], grads[mask])
        bundle.scalars.update(superexp_slope=g.slope, superexp_residual=g.residual,
                              stretching_slope=s.slope, stretching_residual=s.residual)
    except NumericalValidityError as exc:
        bundle.fit_errors["early_time_exponent"] = str(exc)


def _glauber(bundle: ResultBundle, cfg: ExperimentConfig) -> None:
    g, exp = cfg["glauber"], cfg["experiment"]
    n_max = exp["T"]
    target = None
    if g["weight"] == "gaussian":
        weight = gaussian_weight(g["width"])
    elif g["weight"] == "ring":
        weight = ring_weight(g["ring_action"], g["ring_width"])
    elif g["weight"] == "tabulated":
        weight = read_tabulated_weight(g["file"])
    else:
        if g["anharmonic"]:
            match = match_thermal(g["temperature"], g["omega0"], g["hbar"])
            weight, target = match.weight, match.target
            bundle.scalars["thermal_max_relative_error"] = match.max_relative_error
        else:
            from .glauber import thermal_populations, thermal_weight

            weight = thermal_weight(g["temperature"], g["omega0"], g["hbar"], anharmonic=False)
            target = thermal_populations(g["temperature"], g["omega0"], g["hbar"], anharmonic=False)
    rho = populations_from_weight(weight, g["hbar"], n_max=n_max)
    n = np.arange(n_max + 1, dtype=float)
    zeros = np.zeros(n.size)
    bundle.series["populations"] = DecaySeries(n, rho, zeros, label="number-state populations")
    if target is not None:
        padded = np.zeros(n.size)
        k = min(target.size, n.size)
        padded[:k] = target[:k]
        bundle.series["target_populations"] = DecaySeries(n, padded, zeros, label="thermal target")
    bundle.scalars.update(total=float(math.fsum(rho)), tail=1.0 - float(math.fsum(rho)),
                          mean_action=weight.mean_action(), weight_family=weight.family)


EXPERIMENTS = {
    "rotor-echo": _rotor_echo,
    "rotor-classical": _rotor_classical,
    "osc-correlation": _osc_correlation,
    "osc-fgr": _osc_fgr,
    "osc-ivr": _osc_ivr,
    "glauber-populations": _glauber,
}


def run(config: ExperimentConfig, out_dir=None, write: bool = True, figures: bool | None = None) -> ResultBundle:
    """Execute ``config`` and (optionally) persist CSV files, summary.json and figures."""
    bundle = ResultBundle(config.kind, config)
    try:
        EXPERIMENTS[config.kind](bundle, config)
    except NumericalValidityError as exc:
        raise type(exc)(f"{config.kind}: {exc}") from exc
    if not write:
        return bundle
    out = Path(out_dir or config.get("experiment", "out") or f"results/{config.kind}")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}", field="experiment.out") from None
    bundle.out_dir = out
    for name, series in bundle.series.items():
        fname = f"{name}.csv"
        write_series_csv(out / fname, series)
        bundle.files[name] = fname
    write_summary(out / "summary.json", bundle.summary())
    want_figures = config.get("experiment", "figures") if figures is None else figures
    if want_figures:
        from .plotting import render_bundle

        bundle.files.update(render_bundle(bundle, out))
    return bundle


# --------------------------------------------------------------------------- comparison

def compare_rates(bundle: ResultBundle, quantum: str = "coherent", classical: str = "classical",
                  tolerance: float = FOLLOW_TOLERANCE) -> dict:
    """Ratio of the fitted quantum and classical decay rates plus the Lyapunov reference ln(K/2)."""
    rates = {}
    for name in (quantum, classical):
        s = bundle.series.get(name)
        if s is None or s.fit is None:
            raise MissingSeriesError(f"bundle has no fitted {name!r} series")
        rates[name] = s.fit
    q, c = rates[quantum], rates[classical]
    ratio = q.rate / c.rate if c.rate != 0 else math.inf
    report = {
        "quantum_rate": q.rate,
        "quantum_rate_stderr": q.rate_stderr,
        "classical_rate": c.rate,
        "classical_rate_stderr": c.rate_stderr,
        "ratio": ratio,
        "tolerance": tolerance,
        "follows_classical": bool(abs(ratio - 1.0) <= tolerance),
    }
    rotor = bundle.config.sections.get("rotor")
    if rotor is not None and rotor["K"] > 2:
        lam = math.log(rotor["K"] / 2.0)
        report.update(
            lyapunov_reference=lam,
            ratio_to_lyapunov=q.rate / lam,
            distinct_from_lyapunov=bool(abs(q.rate - lam) > q.rate_stderr),
        )
    return report


def refit_csv(path, window) -> dict:
    series = read_series_csv(path)
    fit = fit_decay_rate(series.times, series.values, tuple(window))
    return {"file": str(path), "rate": fit.rate, "rate_stderr": fit.rate_stderr, "offset": fit.offset,
            "residual": fit.residual, "window": list(fit.window), "points": fit.npoints}
