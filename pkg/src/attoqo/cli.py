"""Command-line driver: config parsing, scenario pipelines and run manifests.

Config files are line based::

    [run]
    scenario = spectrum
    seed = 7

    [pulse]
    wavelength_nm = 800
    intensity_wcm2 = 1e14

Blank lines and lines starting with ``#`` or ``;`` are ignored.  Every key
belongs to a known section; duplicates, unknown keys and out-of-range values
are rejected with the offending line number.

Exit codes: 0 success, 2 parse error, 3 numeric error, 4 selection efficiency.
"""
from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AttoqoError, ConfigError, SelectionEfficiencyError
from .textio import format_csv, sha256_file

EXIT_OK, EXIT_PARSE, EXIT_NUMERIC, EXIT_SELECTION = 0, 2, 3, 4

SCENARIOS = ("spectrum", "qstate", "condition", "coherence", "drive", "ati")
STOCHASTIC = ("condition", "drive")
REQUIRED = object()


# ---------------------------------------------------------------------------
# value types


def _float(lo=None, hi=None, lo_open=False):
    def conv(s):
        x = float(s)
        if not np.isfinite(x):
            raise ValueError("must be finite")
        if lo is not None and (x < lo or (lo_open and x == lo)):
            raise ValueError(f"must be {'>' if lo_open else '>='} {lo:g}")
        if hi is not None and x > hi:
            raise ValueError(f"must be <= {hi:g}")
        return x

    return conv


def _int(lo=None):
    def conv(s):
        x = int(s)
        if lo is not None and x < lo:
            raise ValueError(f"must be >= {lo}")
        return x

    return conv


def _choice(*opts):
    def conv(s):
        if s not in opts:
            raise ValueError(f"must be one of {', '.join(opts)}")
        return s

    return conv


def _bool(s):
    low = s.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError("must be true or false")


def _floats(lo=None):
    def conv(s):
        vals = tuple(_float(lo)(p.strip()) for p in s.split(",") if p.strip())
        if not vals:
            raise ValueError("empty list")
        return vals

    return conv


def _ints(lo=None):
    def conv(s):
        vals = tuple(_int(lo)(p.strip()) for p in s.split(",") if p.strip())
        if not vals:
            raise ValueError("empty list")
        return vals

    return conv


def _text(s):
    if not s:
        raise ValueError("empty value")
    return s


def _sweep(s):
    target, sep, rest = s.partition(":")
    sec, dot, key = target.strip().partition(".")
    if not (sep and dot and sec and key):
        raise ValueError("expected 'section.key: v1, v2, ...'")
    vals = tuple(v.strip() for v in rest.split(",") if v.strip())
    if not vals:
        raise ValueError("sweep needs at least one value")
    return (sec, key, vals)


# section -> key -> (converter, default)
SCHEMA: dict[str, dict[str, tuple]] = {
    "run": {
        "scenario": (_choice(*SCENARIOS), REQUIRED),
        "seed": (_int(0), None),
        "threads": (_int(1), None),
        "out": (_text, None),
        "sweep": (_sweep, None),
    },
    "pulse": {
        "wavelength_nm": (_float(0, lo_open=True), REQUIRED),
        "intensity_wcm2": (_float(0, lo_open=True), REQUIRED),
        "cycles": (_float(1), 8.0),
        "envelope": (_choice("sin2", "gaussian", "flat-top"), "sin2"),
        "cep": (_float(), 0.0),
        "ramp_cycles": (_float(0, lo_open=True), 2.0),
    },
    "atom": {"ip": (_float(0, lo_open=True), 0.5)},
    "coupling": {
        "g": (_float(0, lo_open=True), 1e-4),
        "q_cutoff": (_int(2), 30),
        "n_emitters": (_int(1), 1),
    },
    "numerics": {"dt": (_float(0, lo_open=True), 0.2)},
    "spectrum": {"window": (_choice("hann", "none", "blackman"), "hann")},
    "qstate": {
        "correlations": (_bool, False),
        "kernel_points": (_int(0), 0),
    },
    "condition": {
        "source": (_choice("pipeline", "manual"), "pipeline"),
        "shots": (_int(1), 1_000_000),
        "acceptance": (_float(0, 1, lo_open=True), 0.01),
        "window": (_float(0), None),
        "alpha_re": (_float(), None),
        "alpha_im": (_float(), 0.0),
        "delta_re": (_float(), None),
        "delta_im": (_float(), 0.0),
        "omega": (_float(0), 0.0),
    },
    "coherence": {
        "order": (_int(1), 9),
        "delays": (_int(1), 64),
        "correlations": (_bool, False),
        "kernel_points": (_int(0), 0),
        "pad": (_float(0), 0.0),
    },
    "drive": {
        "kind": (_choice("coherent", "squeezed-vacuum", "displaced-squeezed", "thermal"), "coherent"),
        "alpha0_re": (_float(), None),
        "alpha0_im": (_float(), 0.0),
        "r": (_float(0), None),
        "theta": (_float(), 0.0),
        "nbar": (_float(0), None),
        "nodes": (_int(1), 64),
        "method": (_choice("mc", "gh"), "mc"),
    },
    "ati": {
        "count": (_int(0), 0),
        "energy_span": (_float(2), 3.5),
        "orders": (_ints(1), (1, 2, 3, 4, 5)),
        "emission_count": (_int(64), 128),
        "entropy_energy": (_floats(0), (1.0,)),
    },
}

NEEDS = {
    "spectrum": ("run", "pulse", "atom", "spectrum"),
    "qstate": ("run", "pulse", "atom", "coupling", "qstate"),
    "condition": ("run", "pulse", "atom", "coupling", "condition"),
    "coherence": ("run", "pulse", "atom", "coupling", "coherence"),
    "drive": ("run", "pulse", "atom", "coupling", "drive"),
    "ati": ("run", "pulse", "atom", "coupling", "ati"),
}

# parsed value -> config text
def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple) and len(value) == 3 and isinstance(value[2], tuple):
        return f"{value[0]}.{value[1]}: " + ", ".join(value[2])
    if isinstance(value, tuple):
        return ", ".join(_render(v) for v in value)
    return str(value)


# ---------------------------------------------------------------------------
# config


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration.

    ``values`` maps section -> key -> converted value for every key given in
    the file; defaults are filled in on access.
    """

    values: dict = field(default_factory=dict)

    def __post_init__(self):
        sc = self.scenario
        missing = [s for s in NEEDS[sc] if s not in self.values]
        if missing:
            raise ConfigError(f"scenario {sc} needs section [{missing[0]}]")
        if sc in STOCHASTIC and self.seed is None:
            if sc == "condition" or (self.get("drive", "kind") != "coherent" and self.get("drive", "method") == "mc"):
                raise ConfigError(f"scenario {sc} is stochastic: [run] seed is required")

    def get(self, section: str, key: str):
        sec = self.values.get(section, {})
        if key in sec:
            return sec[key]
        default = SCHEMA[section][key][1]
        if default is REQUIRED:
            raise ConfigError(f"[{section}] {key} is required")
        return default

    @property
    def scenario(self) -> str:
        return self.values["run"]["scenario"]

    @property
    def seed(self) -> int | None:
        return self.get("run", "seed")

    @property
    def threads(self) -> int:
        return self.get("run", "threads") or (os.cpu_count() or 1)

    @property
    def pulse(self):
        from .sfa import LaserPulse

        g = lambda k: self.get("pulse", k)
        return LaserPulse.from_lab(
            g("wavelength_nm"),
            g("intensity_wcm2"),
            cep=g("cep"),
            envelope=g("envelope"),
            cycles=g("cycles"),
            ramp_cycles=g("ramp_cycles"),
        )

    @property
    def atom(self):
        from .sfa import AtomModel

        return AtomModel(self.get("atom", "ip"))

    @property
    def coupling(self):
        from .qstate import CouplingConfig

        return CouplingConfig(self.get("coupling", "g"), self.get("coupling", "q_cutoff"), self.get("coupling", "n_emitters"))

    @property
    def dt(self) -> float:
        return self.get("numerics", "dt")

    def with_value(self, section: str, key: str, raw: str) -> "RunConfig":
        """Copy with one key replaced by the parsed ``raw`` text."""
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {section}.{key}")
        try:
            val = SCHEMA[section][key][0](raw)
        except ValueError as exc:
            raise ConfigError(f"{section}.{key} = {raw}: {exc}") from None
        vals = {s: dict(kv) for s, kv in self.values.items()}
        vals.setdefault(section, {})[key] = val
        return RunConfig(vals)

    def to_text(self) -> str:
        lines = []
        for sec in SCHEMA:
            if sec not in self.values:
                continue
            lines.append(f"[{sec}]")
            for key in SCHEMA[sec]:
                if key in self.values[sec]:
                    lines.append(f"{key} = {_render(self.values[sec][key])}")
            lines.append("")
        return "\n".join(lines)

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()


def parse_text(text: str, overrides=()) -> RunConfig:
    """Parse config text; ``overrides`` are (section, key, raw) triples applied on top."""
    values: dict[str, dict] = {}
    section = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", n)
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", n)
            if section in values:
                raise ConfigError(f"duplicate section [{section}]", n)
            values[section] = {}
            continue
        key, eq, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not eq or not key:
            raise ConfigError(f"expected 'key = value', got {line!r}", n)
        if section is None:
            raise ConfigError(f"key {key!r} outside any section", n)
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", n)
        if key in values[section]:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", n)
        try:
            values[section][key] = SCHEMA[section][key][0](val)
        except ValueError as exc:
            raise ConfigError(f"{key} = {val}: {exc}", n) from None
    for sec, key, raw in overrides:
        try:
            values.setdefault(sec, {})[key] = SCHEMA[sec][key][0](raw)
        except ValueError as exc:
            raise ConfigError(f"{sec}.{key} = {raw}: {exc}") from None
    if "run" not in values:
        raise ConfigError("missing section [run]")
    if "scenario" not in values["run"]:
        raise ConfigError("[run] scenario is required")
    for sec, kv in values.items():
        for key, (_, default) in SCHEMA[sec].items():
            if default is REQUIRED and key not in kv:
                raise ConfigError(f"[{sec}] {key} is required")
    cfg = RunConfig(values)
    sw = cfg.get("run", "sweep")
    if sw is not None:
        for v in sw[2]:
            cfg.with_value(sw[0], sw[1], v)
    return cfg


def parse_config(path, overrides=()) -> RunConfig:
    """Read and validate a config file (unit conversion happens in ``.pulse``)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_text(text, overrides)


# ---------------------------------------------------------------------------
# manifests


@dataclass
class RunManifest:
    entries: list = field(default_factory=list)
    out: Path = Path(".")

    def add(self, key: str, value):
        self.entries.append((key, value if isinstance(value, str) else _render(value)))

    def write_file(self, name: str, text: str):
        p = self.out / name
        p.write_text(text)
        self.add(f"file.{name}.sha256", sha256_file(p))

    def digests(self) -> dict:
        return {k[5:-7]: v for k, v in self.entries if k.startswith("file.")}

    def value(self, key: str) -> str:
        for k, v in self.entries:
            if k == key:
                return v
        raise KeyError(key)

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.entries)


class _Stage:
    def __init__(self, manifest: RunManifest, name: str):
        self.m, self.name = manifest, name

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.m.add(f"stage.{self.name}.seconds", f"{time.perf_counter() - self.t0:.3f}")
        return False


# ---------------------------------------------------------------------------
# scenarios


def _dipole(cfg: RunConfig, pad: float = 0.0):
    from .sfa import TimeGrid, dipole_expectation

    p = cfg.pulse
    return dipole_expectation(p, cfg.atom, TimeGrid.covering(p, cfg.dt, pad=pad * p.duration))


def _scenario_spectrum(cfg: RunConfig, m: RunManifest):
    from .sfa import hhg_spectrum, plateau_cutoff

    with _Stage(m, "dipole"):
        rec = _dipole(cfg)
    with _Stage(m, "spectrum"):
        spec = hhg_spectrum(rec, cfg.get("spectrum", "window"))
        cut = plateau_cutoff(spec)
    m.write_file("dipole.csv", rec.to_csv())
    m.write_file("spectrum.csv", spec.to_csv())
    m.add("result.cutoff_harmonic", float(cut))


def _kernel(cfg: RunConfig, section: str, rec=None):
    from .sfa import TimeGrid, dipole_correlation

    n = cfg.get(section, "kernel_points")
    p = cfg.pulse
    if rec is None:
        grid = TimeGrid(p.t_start, p.duration / (n - 1), n) if n else None
    else:
        span = rec.grid.t_end - rec.grid.t0
        if not n:
            w_max = cfg.coupling.q_cutoff * p.omega
            n = int(np.ceil(span * w_max / (0.9 * np.pi))) + 1
        grid = TimeGrid(rec.grid.t0, span / (n - 1), n)
    return dipole_correlation(p, cfg.atom, grid)


def _scenario_qstate(cfg: RunConfig, m: RunManifest):
    from .phase_space import squeezing_parameters
    from .qstate import bilinear_coefficients, coherent_amplitudes, driver_amplitude, gaussian_output_state

    cp = cfg.coupling
    with _Stage(m, "dipole"):
        rec = _dipole(cfg)
    with _Stage(m, "amplitudes"):
        amps = coherent_amplitudes(rec, cp, driver_amplitude(cfg.pulse, cp))
    bil = None
    if cfg.get("qstate", "correlations"):
        with _Stage(m, "kernel"):
            bil = bilinear_coefficients(_kernel(cfg, "qstate"), cp, cfg.pulse.omega)
    with _Stage(m, "state"):
        state = gaussian_output_state(amps, bil, include_driver=False)
        sq = np.array([squeezing_parameters(state, k) for k in range(state.modes)])
        nbar = np.array([state.mean_photon_number(k) for k in range(state.modes)])
    m.write_file("amplitudes.csv", amps.to_csv())
    m.write_file("modes.csv", format_csv(["q", "mean_photon_number", "squeezing_r", "squeezing_angle"], [amps.orders, nbar, sq[:, 0], sq[:, 1]]))
    m.add("result.delta_alpha", f"{amps.delta_alpha.real!r} {amps.delta_alpha.imag!r}")
    m.add("result.max_squeezing_r", float(sq[:, 0].max()))


def _conditioning_input(cfg: RunConfig, m: RunManifest):
    from .conditioning import ConditioningInput
    from .qstate import coherent_amplitudes, driver_amplitude

    g = lambda k: cfg.get("condition", k)
    if g("source") == "manual":
        if g("alpha_re") is None or g("delta_re") is None:
            raise ConfigError("manual conditioning needs alpha_re and delta_re in [condition]")
        # one harmonic mode carrying all of Omega
        return ConditioningInput(complex(g("alpha_re"), g("alpha_im")), complex(g("delta_re"), g("delta_im")), [np.sqrt(g("omega"))])
    cp = cfg.coupling
    with _Stage(m, "dipole"):
        rec = _dipole(cfg)
    with _Stage(m, "amplitudes"):
        amps = coherent_amplitudes(rec, cp, driver_amplitude(cfg.pulse, cp))
    return ConditioningInput.from_amplitudes(amps)


def _scenario_condition(cfg: RunConfig, m: RunManifest):
    from .conditioning import calibrate_window, postselect_energy_conserving, sample_shots

    inp = _conditioning_input(cfg, m)
    amps = np.concatenate([[inp.alpha_in + inp.delta_alpha], inp.chi])
    with _Stage(m, "shots"):
        table = sample_shots(amps, cfg.get("condition", "shots"), cfg.seed)
    with _Stage(m, "selection"):
        window = cfg.get("condition", "window")
        if window is None:
            window = calibrate_window(table, inp.alpha_in, cfg.get("condition", "acceptance"))
        res = postselect_energy_conserving(table, inp.alpha_in, window, reference=inp)
    m.write_file(
        "selection.csv",
        format_csv(
            ["shots", "kept", "window", "acceptance", "omega_estimate", "fidelity"],
            [[table.shots], [int(res.kept.sum())], [res.window], [res.acceptance], [res.omega_estimate], [res.fidelity]],
        ),
    )
    m.write_file("cat_state.txt", res.reconstructed.to_text())
    m.add("result.acceptance", res.acceptance)
    m.add("result.fidelity", float(res.fidelity))


def _scenario_coherence(cfg: RunConfig, m: RunManifest):
    from .coherence import first_order_correlation, g1_normalized, g2, mode_photon_numbers, wkt_spectrum

    cp = cfg.coupling
    q = cfg.get("coherence", "order")
    n_delay = cfg.get("coherence", "delays")
    with _Stage(m, "dipole"):
        rec = _dipole(cfg, cfg.get("coherence", "pad"))
    corr = None
    if cfg.get("coherence", "correlations"):
        with _Stage(m, "kernel"):
            corr = _kernel(cfg, "coherence", rec)
    with _Stage(m, "correlations"):
        orders, coh, inc = mode_photon_numbers(rec, corr, cp)
        s1 = g1_normalized(first_order_correlation(rec, corr, q, cp, n_delay=n_delay))
        s2 = g2(rec, corr, q, cp, n_delay=n_delay)
    with _Stage(m, "wkt"):
        w_coh, w_inc = wkt_spectrum(rec, corr, cp)
    v1 = np.asarray(s1.values, dtype=complex)
    m.write_file("photon_numbers.csv", format_csv(["q", "coherent", "incoherent"], [orders, coh, inc]))
    m.write_file("g1.csv", format_csv(["tau", "re", "im", "abs"], [s1.tau, v1.real, v1.imag, np.abs(v1)]))
    m.write_file("g2.csv", s2.to_csv())
    m.write_file("wkt.csv", format_csv(["omega", "harmonic_order", "coherent", "incoherent"], [w_coh.omega, w_coh.harmonic_order, w_coh.intensity, w_inc.intensity]))
    m.add("result.min_abs_g1", float(np.abs(v1).min()))
    m.add("result.g2_zero", float(np.real(s2.values[0])))


def _scenario_drive(cfg: RunConfig, m: RunManifest):
    from .driver import DriverDistribution, SamplerConfig, averaged_hhg_spectrum, classical_limit_weight
    from .qstate import driver_amplitude

    g = lambda k: cfg.get("drive", k)
    p, cp = cfg.pulse, cfg.coupling
    a_ref = driver_amplitude(p, cp)
    kind = g("kind")
    alpha0 = a_ref if g("alpha0_re") is None else complex(g("alpha0_re"), g("alpha0_im"))
    if kind == "coherent":
        dist = DriverDistribution(kind, alpha0)
    elif kind == "squeezed-vacuum" and g("r") is None:
        dist = DriverDistribution.matched(kind, abs(a_ref) ** 2, g("theta"))
    elif kind == "thermal" and g("nbar") is None:
        dist = DriverDistribution.matched(kind, abs(a_ref) ** 2)
    elif kind == "thermal":
        dist = DriverDistribution(kind, 0.0, nbar=g("nbar"))
    elif kind == "squeezed-vacuum":
        dist = DriverDistribution(kind, 0.0, r=g("r"), theta=g("theta"))
    else:
        dist = DriverDistribution(kind, alpha0, r=g("r") or 0.0, theta=g("theta"))
    sampler = SamplerConfig(g("method"), g("nodes"), cfg.seed, cfg.dt)
    with _Stage(m, "average"):
        spec = averaged_hhg_spectrum(classical_limit_weight(dist), p, cfg.atom, cp, sampler, cfg.threads)
    m.write_file("spectrum.csv", spec.to_csv())
    m.add("result.mean_photon_number", dist.mean_photon_number)
    m.add("result.cutoff_harmonic", spec.cutoff_harmonic)


def _scenario_ati(cfg: RunConfig, m: RunManifest):
    from .ati import ContinuumGrid, emission_table, falloff_ratio, light_matter_entropy, photoelectron_spectrum
    from .sfa import ponderomotive_energy

    g = lambda k: cfg.get("ati", k)
    p, atom, cp = cfg.pulse, cfg.atom, cfg.coupling
    count = g("count")
    if count == 0:
        # energy spacing <= w/2 at 2.5 Up, where the falloff window sits
        up = ponderomotive_energy(p)
        count = max(256, int(np.ceil(4 * np.sqrt(5 * up) * np.sqrt(2 * g("energy_span") * up) / p.omega)) + 1)
    elif count < 64:
        raise ConfigError("[ati] count must be 0 (automatic) or at least 64")
    with _Stage(m, "photoelectrons"):
        pes = photoelectron_spectrum(p, atom, ContinuumGrid.for_pulse(p, count, g("energy_span")))
        ratio = falloff_ratio(pes)
    with _Stage(m, "emission"):
        tab = emission_table(p, atom, cp, np.asarray(g("orders")), ContinuumGrid.for_pulse(p, g("emission_count")), dipole_dt=cfg.dt)
    with _Stage(m, "entropy"):
        e = np.asarray(g("entropy_energy")) * ponderomotive_energy(p)
        v = np.sqrt(2 * e)
        s = np.array([light_matter_entropy(p, atom, cp, vi) for vi in v])
    m.write_file("photoelectrons.csv", pes.to_csv())
    m.write_file("emission.csv", tab.to_csv())
    m.write_file("entropy.csv", format_csv(["energy_au", "energy_over_Up", "v", "entropy"], [e, np.asarray(g("entropy_energy")), v, s]))
    m.add("result.falloff_ratio", float(ratio))


RUNNERS = {
    "spectrum": _scenario_spectrum,
    "qstate": _scenario_qstate,
    "condition": _scenario_condition,
    "coherence": _scenario_coherence,
    "drive": _scenario_drive,
    "ati": _scenario_ati,
}


def run(cfg: RunConfig, out) -> RunManifest:
    """Execute one scenario (or every point of a sweep) and write the manifest."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    m = RunManifest(out=out)
    m.add("tool_version", __version__)
    m.add("config_sha256", cfg.digest())
    m.add("scenario", cfg.scenario)
    m.add("seed", "none" if cfg.seed is None else str(cfg.seed))
    m.add("threads", str(cfg.threads))
    (out / "config.txt").write_text(cfg.to_text())
    sw = cfg.get("run", "sweep")
    if sw is None:
        RUNNERS[cfg.scenario](cfg, m)
    else:
        sec, key, vals = sw
        m.add("sweep", _render(sw))
        base = RunConfig({s: {k: v for k, v in kv.items() if not (s == "run" and k == "sweep")} for s, kv in cfg.values.items()})
        for i, raw in enumerate(vals):
            name = f"sweep_{i:03d}"
            sub = run(base.with_value(sec, key, raw), out / name)
            m.add(f"{name}.{sec}.{key}", raw)
            m.add(f"file.{name}/manifest.txt.sha256", sha256_file(out / name / "manifest.txt"))
            for k, v in sub.entries:
                if k.startswith("file."):
                    m.add(f"file.{name}/{k[5:]}", v)
    (out / "manifest.txt").write_text(m.to_text())
    return m


# ---------------------------------------------------------------------------
# command line


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_PARSE
    if isinstance(exc, SelectionEfficiencyError):
        return EXIT_SELECTION
    return EXIT_NUMERIC


def error_record(exc: BaseException) -> str:
    rec = [("error", type(exc).__name__), ("exit_code", str(exit_code(exc)))]
    if isinstance(exc, ConfigError) and exc.line is not None:
        rec.append(("line", str(exc.line)))
    if isinstance(exc, SelectionEfficiencyError):
        rec.append(("acceptance", repr(exc.acceptance)))
    rec.append(("message", " ".join(str(exc).split())))
    return "".join(f"{k} = {v}\n" for k, v in rec)


def _fail(exc: BaseException, out: Path | None) -> int:
    text = error_record(exc)
    sys.stderr.write(text)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.txt").write_text(text)
        except OSError:
            pass
    return exit_code(exc)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="attoqo", description="Strong-field quantum optics pipelines")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (default: [run] out, else ./attoqo_out)")
    r.add_argument("--seed", type=int)
    r.add_argument("--threads", type=int)
    v = sub.add_parser("validate", help="parse and validate a config")
    v.add_argument("config")
    sub.add_parser("version", help="print the tool version")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "version":
        print(f"attoqo {__version__}")
        return EXIT_OK
    out = Path(args.out) if getattr(args, "out", None) else None
    try:
        if args.command == "validate":
            cfg = parse_config(args.config)
            print(f"ok: scenario {cfg.scenario}, config_sha256 {cfg.digest()}")
            return EXIT_OK
        over = [("run", k, str(v)) for k, v in (("seed", args.seed), ("threads", args.threads)) if v is not None]
        cfg = parse_config(args.config, over)
        if out is None:
            out = Path(cfg.get("run", "out") or "attoqo_out")
        m = run(cfg, out)
    except AttoqoError as exc:
        return _fail(exc, out)
    print(f"wrote {len(m.digests())} files and manifest.txt to {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
