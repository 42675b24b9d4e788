"""Command-line front end: config parsing, subcommands and trace files."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import __version__
from .coefficients import solve_coefficients, SlownessPoint, UNKNOWNS
from .errors import ConfigError, DomainError, MaterialError, NumericalError, PoroError
from .greens import Problem, Receiver, ReceiverModel, rotate_to_3d
from .material import PoroelasticLayer, SourceAmplitudes, derive_layer
from .timeseries import Trace, Wavelet, convolve, wavelet_value

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

UNITS = {
    "density": {"kg/m3": 1.0, "g/cm3": 1000.0},
    "pressure": {"Pa": 1.0, "kPa": 1e3, "MPa": 1e6, "GPa": 1e9},
    "length": {"m": 1.0, "km": 1e3},
    "time": {"s": 1.0, "ms": 1e-3},
    "frequency": {"Hz": 1.0, "kHz": 1e3},
    "none": {"": 1.0},
}
CANON = {"density": "kg/m3", "pressure": "Pa", "length": "m", "time": "s", "frequency": "Hz",
         "none": ""}

LAYER_KEYS = {"rho_s": "density", "rho_f": "density", "phi": "none", "a": "none",
              "K_s": "pressure", "K_f": "pressure", "K_b": "pressure", "mu": "pressure"}
SOURCE_KEYS = {"h": "length", "f_u": "none", "f_w": "none", "f_p": "none"}
TIME_KEYS = {"t_start": "time", "t_end": "time", "dt": "time", "samples_per_period": "none"}
SECTIONS = ("top", "bottom", "source", "wavelet", "receivers", "time")


@dataclass(frozen=True)
class ReceiverSpec:
    name: str
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class ProblemConfig:
    top: PoroelasticLayer
    bottom: PoroelasticLayer
    h: float
    source: SourceAmplitudes
    wavelet: Wavelet
    receivers: tuple[ReceiverSpec, ...]
    t_start: float
    t_end: float
    dt: float

    def problem(self) -> Problem:
        return Problem.build(self.top, self.bottom, self.h, self.source)


# -- parsing ---------------------------------------------------------------

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_QUANTITY = re.compile(rf"^\s*({_NUM})\s*([A-Za-z/0-9]*)\s*$")


def _quantity(text: str, kind: str, key: str, line: int) -> float:
    m = _QUANTITY.match(text)
    if not m:
        raise ConfigError(f"cannot read a number from {text.strip()!r} for '{key}'", line)
    value, unit = m.groups()
    table = UNITS[kind]
    if unit not in table:
        if kind == "none":
            raise ConfigError(f"'{key}' is dimensionless but has unit '{unit}'", line)
        if not unit:
            raise ConfigError(f"'{key}' needs a unit suffix ({', '.join(table)})", line)
        raise ConfigError(f"unknown unit '{unit}' for '{key}' (expected one of {', '.join(table)})",
                          line)
    return float(value) * table[unit]


def parse_config(text: str) -> ProblemConfig:
    """Parse the bracketed key = value format; errors carry 1-based line numbers."""
    data: dict[str, dict[str, tuple[str, int]]] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            if section in data:
                raise ConfigError(f"duplicate section [{section}]", lineno)
            data[section] = {}
            continue
        if section is None:
            raise ConfigError("key outside of any section", lineno)
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key in data[section]:
            raise ConfigError(f"duplicate key '{key}' in [{section}]", lineno)
        data[section][key] = (value, lineno)

    end = len(text.splitlines()) + 1
    for name in SECTIONS:
        if name not in data:
            raise ConfigError(f"missing section [{name}]", end)

    def block(name, spec, optional=()):
        out = {}
        sec = data[name]
        for key, (value, lineno) in sec.items():
            if key not in spec:
                raise ConfigError(f"unknown key '{key}' in [{name}]", lineno)
            out[key] = _quantity(value, spec[key], key, lineno)
        for key in spec:
            if key not in out and key not in optional:
                raise ConfigError(f"missing key '{key}' in [{name}]", end)
        return out

    def layer(name):
        vals = block(name, LAYER_KEYS)
        line = min(v[1] for v in data[name].values())
        try:
            return PoroelasticLayer(**vals)
        except MaterialError as exc:
            msg = str(exc)
            alias = {"porosity": "phi", "tortuosity": "a"}
            for key, (_, lineno) in data[name].items():
                if re.search(rf"\b{re.escape(key)}\b", msg) or any(
                        w in msg and k == key for w, k in alias.items()):
                    line = lineno
                    break
            raise ConfigError(f"[{name}] {exc}", line) from exc

    top, bottom = layer("top"), layer("bottom")
    src = block("source", SOURCE_KEYS, optional=("f_u", "f_w", "f_p"))
    h = src.pop("h")
    if not h > 0:
        raise ConfigError("source height h must be positive", data["source"]["h"][1])

    wav = data["wavelet"]
    for key, (_, lineno) in wav.items():
        if key not in ("f0", "kind"):
            raise ConfigError(f"unknown key '{key}' in [wavelet]", lineno)
    if "f0" not in wav:
        raise ConfigError("missing key 'f0' in [wavelet]", end)
    f0 = _quantity(wav["f0"][0], "frequency", "f0", wav["f0"][1])
    kind = wav.get("kind", ("gaussian_d4", 0))[0]
    try:
        wavelet = Wavelet(f0, kind)
    except DomainError as exc:
        raise ConfigError(str(exc), wav["f0"][1]) from exc

    receivers = []
    for name, (value, lineno) in data["receivers"].items():
        parts = value.split(",")
        if len(parts) != 3:
            raise ConfigError(f"receiver '{name}' needs three coordinates x, y, z", lineno)
        x, y, z = (_quantity(p, "length", name, lineno) for p in parts)
        if z == 0.0:
            raise ConfigError(f"receiver '{name}' lies on the interface (z = 0)", lineno)
        if np.hypot(x, y) == 0.0 and z == h:
            raise ConfigError(f"receiver '{name}' coincides with the source", lineno)
        receivers.append(ReceiverSpec(name, x, y, z))
    if not receivers:
        raise ConfigError("no receivers given", data and end)

    tm = block("time", TIME_KEYS, optional=("t_start", "dt", "samples_per_period"))
    t_start = tm.get("t_start", 0.0)
    t_end = tm["t_end"]
    if not t_end > t_start:
        raise ConfigError("t_end must exceed t_start", data["time"]["t_end"][1])
    if "dt" in tm and "samples_per_period" in tm:
        raise ConfigError("give either dt or samples_per_period, not both", data["time"]["dt"][1])
    if "dt" in tm:
        dt = tm["dt"]
    else:
        dt = 1.0 / (tm.get("samples_per_period", 200.0) * f0)
    if not dt > 0:
        raise ConfigError("time step must be positive", end)
    return ProblemConfig(top, bottom, h, SourceAmplitudes(**src), wavelet, tuple(receivers),
                         t_start, t_end, dt)


def dump_config(cfg: ProblemConfig) -> str:
    """Canonical text form; parse_config(dump_config(c)) == c."""
    out = io.StringIO()
    for name, lay in (("top", cfg.top), ("bottom", cfg.bottom)):
        out.write(f"[{name}]\n")
        for f in fields(lay):
            unit = CANON[LAYER_KEYS[f.name]]
            out.write(f"{f.name} = {getattr(lay, f.name)!r} {unit}".rstrip() + "\n")
    out.write("[source]\n")
    out.write(f"h = {cfg.h!r} m\n")
    for key in ("f_u", "f_w", "f_p"):
        out.write(f"{key} = {getattr(cfg.source, key)!r}\n")
    out.write("[wavelet]\n")
    out.write(f"f0 = {cfg.wavelet.f0!r} Hz\nkind = {cfg.wavelet.kind}\n")
    out.write("[receivers]\n")
    for r in cfg.receivers:
        out.write(f"{r.name} = {r.x!r} m, {r.y!r} m, {r.z!r} m\n")
    out.write("[time]\n")
    out.write(f"t_start = {cfg.t_start!r} s\nt_end = {cfg.t_end!r} s\ndt = {cfg.dt!r} s\n")
    return out.getvalue()


def config_hash(cfg: ProblemConfig) -> str:
    return hashlib.sha256(dump_config(cfg).encode()).hexdigest()


def load_config(path: str) -> ProblemConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}", 0) from exc


def config_from_header(path: str) -> ProblemConfig:
    """Re-parse the config block embedded in a trace file header."""
    lines = []
    inside = False
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].rstrip("\n")
            if body.strip() == "config:":
                inside = True
                continue
            if inside:
                if not body.startswith("   "):
                    inside = False
                    continue
                lines.append(body[3:])
    return parse_config("\n".join(lines))


# -- grids and trace computation --------------------------------------------

def time_grid(cfg: ProblemConfig, arrivals) -> np.ndarray:
    """Uniform grid, nudged by dt/7 when a sample would land on an arrival."""
    n = int(np.floor((cfg.t_end - cfg.t_start) / cfg.dt + 1e-9)) + 1
    start = cfg.t_start
    for _ in range(7):
        t = start + cfg.dt * np.arange(n)
        k = np.rint((np.asarray(arrivals) - start) / cfg.dt)
        hit = np.abs(start + k * cfg.dt - np.asarray(arrivals)) <= 1e-6 * cfg.dt
        if not np.any(hit):
            return t
        start += cfg.dt / 7.0
    return t


def onsets(model: ReceiverModel) -> dict[str, float]:
    return {w: model.onset(w) for w in model.waves}


def _wave_trace(problem: Problem, receiver: Receiver, wave: str, times: np.ndarray):
    model = ReceiverModel(problem, receiver)
    start = model.onset(wave)
    ux = np.zeros(len(times))
    uz = np.zeros(len(times))
    for i, t in enumerate(times):
        if t > start:
            ux[i], uz[i] = model.wave_green(wave, float(t))
    return ux, uz


def worker_count() -> int:
    env = os.environ.get("PORO_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"PORO_THREADS must be an integer (got {env!r})", 0) from exc
        return max(1, n)
    return max(1, os.cpu_count() or 1)


@dataclass
class ReceiverTraces:
    spec: ReceiverSpec
    model: ReceiverModel
    times: np.ndarray
    per_wave: dict  # wave -> (ux, uy, uz) arrays


def compute_green(cfg: ProblemConfig, problem: Problem | None = None) -> list[ReceiverTraces]:
    problem = problem or cfg.problem()
    models = []
    for spec in cfg.receivers:
        rec = Receiver(float(np.hypot(spec.x, spec.y)), 0.0, spec.z)
        models.append((spec, rec, ReceiverModel(problem, rec)))
    arrivals = [t for _, _, m in models for t in onsets(m).values()]
    times = time_grid(cfg, arrivals)
    tasks = [(spec, rec, w) for spec, rec, m in models for w in m.waves]
    nworkers = min(worker_count(), len(tasks))
    if nworkers > 1:
        with ProcessPoolExecutor(nworkers) as pool:
            futures = [pool.submit(_wave_trace, problem, rec, w, times) for _, rec, w in tasks]
            results = [f.result() for f in futures]
    else:
        results = [_wave_trace(problem, rec, w, times) for _, rec, w in tasks]
    out = []
    it = iter(results)
    for spec, rec, model in models:
        per = {}
        for w in model.waves:
            ux, uz = next(it)
            x3, y3, z3 = rotate_to_3d(ux, uz, spec.x, spec.y)
            per[w] = (np.asarray(x3) * np.ones_like(ux), np.asarray(y3) * np.ones_like(ux), z3)
        out.append(ReceiverTraces(spec, model, times, per))
    return out


def convolve_traces(rt: ReceiverTraces, wavelet: Wavelet, derivative: bool = False) -> dict:
    """Displacement seismograms, or their time derivative.

    The wavelet is switched on at the first sample with a nonzero value, so the
    derivative picks up the boundary term G(t) f(0) next to G * f'.
    """
    dt = rt.times[1] - rt.times[0]
    f_start = float(wavelet_value(wavelet, 0.0)) if derivative else 0.0
    out = {}
    for w, comps in rt.per_wave.items():
        jumps = (rt.model.onset(w),)
        out[w] = tuple(convolve(Trace(rt.times[0], dt, c, jumps), wavelet, derivative).samples
                       + f_start * c for c in comps)
    return out


# -- output -------------------------------------------------------------------

def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_trace_file(path: str, cfg: ProblemConfig, rt: ReceiverTraces, per_wave: dict,
                     kind: str) -> None:
    waves = list(rt.model.waves)
    table = rt.model.arrivals()
    lines = [
        f"# porocdh {__version__} {kind} trace",
        f"# config_sha256: {config_hash(cfg)}",
        f"# receiver: {rt.spec.name} {_fmt(rt.spec.x)} {_fmt(rt.spec.y)} {_fmt(rt.spec.z)}",
        f"# waves: {' '.join(waves)}",
        "# arrivals: wave t0 t_h1 t_h2 head_exists",
    ]
    for w in waves:
        win = table[w]
        th1 = _fmt(win.t_h1) if win.head_exists else "-"
        th2 = _fmt(win.t_h2) if win.head_exists else "-"
        lines.append(f"#   {w} {_fmt(win.t0)} {th1} {th2} {str(win.head_exists).lower()}")
    lines.append("# config:")
    lines += ["#    " + ln for ln in dump_config(cfg).splitlines()]
    cols = ["t"] + [f"{w}_{c}" for w in waves + ["total"] for c in "xyz"]
    lines.append("# columns: " + " ".join(cols))
    total = [sum(per_wave[w][c] for w in waves) for c in range(3)]
    data = [rt.times] + [per_wave[w][c] for w in waves for c in range(3)] + total
    body = np.column_stack(data)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
        for row in body:
            fh.write(" ".join(_fmt(v) for v in row) + "\n")


def read_trace_file(path: str):
    """Return (column names, data array) from a trace file."""
    names = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# columns:"):
                names = line.split(":", 1)[1].split()
            if not line.startswith("#"):
                break
    return names, np.loadtxt(path, comments="#", ndmin=2)


def _table(rows, header) -> str:
    rows = [[str(c) for c in r] for r in rows]
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(header)]
    out = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    out += ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    return "\n".join(out) + "\n"


# -- subcommands -----------------------------------------------------------------

def cmd_material(cfg, args, out):
    rows = []
    for name, lay in (("top", cfg.top), ("bottom", cfg.bottom)):
        d = derive_layer(lay)
        rows.append([name] + [f"{v:.10g}" for v in
                              (d.rho, d.rho_w, d.beta, d.m, d.lam, d.alpha, d.V_Pf, d.V_Ps, d.V_S)])
    out.write(_table(rows, ["layer", "rho", "rho_w", "beta", "m", "lambda", "alpha",
                            "V_Pf", "V_Ps", "V_S"]))
    return EXIT_OK


def cmd_coeffs(cfg, args, out):
    problem = cfg.problem()
    q = SlownessPoint(complex(args.qx_re, args.qx_im), args.qy)
    c = solve_coefficients(q, args.incidence, problem.top, problem.bottom)
    rows = [[k, _fmt(v.real), _fmt(v.imag)] for k, v in zip(UNKNOWNS, c.as_array())]
    out.write(_table(rows, ["coefficient", "real", "imag"]))
    return EXIT_OK


def cmd_times(cfg, args, out):
    problem = cfg.problem()
    for spec in cfg.receivers:
        model = ReceiverModel(problem, Receiver(float(np.hypot(spec.x, spec.y)), 0.0, spec.z))
        out.write(f"receiver {spec.name} ({spec.x:g}, {spec.y:g}, {spec.z:g}) m\n")
        rows = []
        for w, win in model.arrivals().items():
            rows.append([w, f"{win.t0:.8f}",
                         f"{win.t_h1:.8f}" if win.head_exists else "-",
                         f"{win.t_h2:.8f}" if win.head_exists else "-",
                         "yes" if win.head_exists else "no"])
        out.write(_table(rows, ["wave", "t0", "t_h1", "t_h2", "head_exists"]))
        out.write("\n")
    return EXIT_OK


def _emit(cfg, args, out, kind):
    os.makedirs(args.output, exist_ok=True)
    traces = compute_green(cfg)
    for rt in traces:
        if kind == "green":
            per = rt.per_wave
        else:
            per = convolve_traces(rt, cfg.wavelet, derivative=args.derivative)
        path = os.path.join(args.output, f"{kind}_{rt.spec.name}.txt")
        write_trace_file(path, cfg, rt, per, kind if not getattr(args, "derivative", False)
                         else "velocity")
        out.write(f"wrote {path}\n")
    return EXIT_OK


def cmd_green(cfg, args, out):
    return _emit(cfg, args, out, "green")


def cmd_seismogram(cfg, args, out):
    return _emit(cfg, args, out, "seismogram")


def cmd_validate(cfg, args, out):
    from .validation import audit
    problem = cfg.problem()
    recs = [Receiver(float(np.hypot(s.x, s.y)), 0.0, s.z) for s in cfg.receivers]
    reports = audit(problem, recs, samples=args.samples, seed=args.seed)
    rows = [[r.name, f"{r.max_error:.3e}", f"{r.tolerance:.1e}", "pass" if r.passed else "FAIL",
             r.worst] for r in reports]
    out.write(_table(rows, ["check", "max error", "tolerance", "status", "worst case"]))
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["check", "max_error", "tolerance", "passed", "worst"])
            for r in reports:
                w.writerow([r.name, repr(r.max_error), repr(r.tolerance), r.passed, r.worst])
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VALIDATION


COMMANDS = {"material": cmd_material, "coeffs": cmd_coeffs, "times": cmd_times,
            "green": cmd_green, "seismogram": cmd_seismogram, "validate": cmd_validate}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="porocdh", description="Exact transient waves in two "
                                "poroelastic half-spaces (Cagniard-de Hoop).")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("material", "times"):
        sp = sub.add_parser(name)
        sp.add_argument("config")
    sp = sub.add_parser("coeffs")
    sp.add_argument("config")
    sp.add_argument("--qx-re", type=float, required=True)
    sp.add_argument("--qx-im", type=float, default=0.0)
    sp.add_argument("--qy", type=float, default=0.0)
    sp.add_argument("--incidence", choices=("Pf", "Ps"), required=True)
    for name in ("green", "seismogram"):
        sp = sub.add_parser(name)
        sp.add_argument("config")
        sp.add_argument("-o", "--output", default=".")
        if name == "seismogram":
            sp.add_argument("--derivative", action="store_true",
                            help="convolve with the wavelet derivative (particle velocity)")
    sp = sub.add_parser("validate")
    sp.add_argument("config")
    sp.add_argument("--csv", default=None)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    return p


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        err.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except MaterialError as exc:
        err.write(f"material error: {exc}\n")
        return EXIT_CONFIG
    except (NumericalError, DomainError) as exc:
        err.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except PoroError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
