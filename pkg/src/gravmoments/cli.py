"""Command-line front end.

Commands: simulate, return-time, eotvos, reconstruct, interferometer.
Parameters come from per-command flags, optionally seeded from a flat
``key = value`` config file (``--config``); explicit flags win.  Every run
writes its CSV artifacts plus a ``manifest.json`` recording the resolved
configuration.  CSV values carry 17 significant digits so they round-trip
exactly; outputs are byte-identical for identical config and seed.  SVG
plots are optional (``--svg``); the CSV files are the contract.

Exit codes: 0 success, 2 configuration error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    ConfigurationError,
    GravMomentsError,
    NoReturnError,
    QuadratureError,
    SingularityAbort,
)
from .dynamics import (
    IntegratorConfig,
    free_potential,
    gravity_gradient_potential,
    linear_potential,
    newtonian_potential,
    power_law_potential,
    quadratic_potential,
)
from .experiments import (
    EotvosInput,
    MachZehnderConfig,
    eotvos_estimate,
    mach_zehnder_phase,
    return_time_curve,
)
from .moments import CanonicalState, HbarContext, RawMomentSequence, SecondOrderState
from .reconstruct import (
    HermiteBasis,
    reconstruct_density,
    reconstruct_phase_derivative,
    reconstruct_state,
)
from .dynamics import integrate_canonical

__all__ = ["main", "run", "RunConfig", "build_parser"]

_COMMANDS = ("simulate", "return-time", "eotvos", "reconstruct", "interferometer")


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigurationError(f"expected a number, got {text!r}") from None


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigurationError(f"expected an integer, got {text!r}") from None


def _parse_floats(text: str) -> list:
    """Comma-separated list of numbers."""
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise ConfigurationError(f"empty list {text!r}")
    return [_parse_float(t.strip()) for t in items]


def _parse_grid(text: str) -> list:
    """Grid syntax start:stop:count, inclusive at both ends."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigurationError(f"grid must be start:stop:count, got {text!r}")
    start, stop = _parse_float(parts[0]), _parse_float(parts[1])
    count = _parse_int(parts[2])
    if count < 1:
        raise ConfigurationError(f"grid count must be >= 1, got {count}")
    if count == 1:
        return [start]
    return list(np.linspace(start, stop, count))


def _parse_str(text: str) -> str:
    return text


@dataclass(frozen=True)
class Param:
    convert: object
    default: object = None
    help: str = ""
    choices: tuple | None = None


_TOL_PARAMS = {
    "rel-tol": Param(_parse_float, 1e-10, "relative integration tolerance"),
    "abs-tol": Param(_parse_float, 1e-12, "absolute integration tolerance"),
}

_PARAM_SPECS = {
    "simulate": {
        "potential": Param(
            _parse_str,
            "free",
            "potential kind",
            ("free", "linear", "quadratic", "newtonian", "power-law"),
        ),
        "g": Param(_parse_float, 1.0, "linear field strength"),
        "k": Param(_parse_float, 1.0, "quadratic curvature Phi''"),
        "gm": Param(_parse_float, 1.0, "GM of the central body"),
        "alpha-n": Param(_parse_float, 1.0, "power-law correction amplitude"),
        "n-exp": Param(_parse_float, 3.0, "power-law exponent N"),
        "r0-pow": Param(_parse_float, 1.0, "power-law reference radius"),
        "mass": Param(_parse_float, 1.0, "particle mass"),
        "hbar": Param(_parse_float, 1.0, "hbar (1 in nondimensional work)"),
        "x0": Param(_parse_float, 0.0, "initial position"),
        "p0": Param(_parse_float, 0.0, "initial momentum"),
        "s0": Param(_parse_float, 1.0, "initial width (0 for point particle)"),
        "ps0": Param(_parse_float, 0.0, "initial width momentum"),
        "u-casimir": Param(_parse_float, None, "Casimir U (default hbar^2/4)"),
        "t-final": Param(_parse_float, 10.0, "integration time"),
        "n-samples": Param(_parse_int, 1000, "number of output samples"),
        "method": Param(
            _parse_str, "adaptive_rk", "integrator", ("adaptive_rk", "fixed_step")
        ),
        "h-init": Param(_parse_float, None, "initial/fixed step size"),
        **_TOL_PARAMS,
    },
    "return-time": {
        "u": Param(_parse_floats, [1e-5, 1e-3, 1e-1], "uncertainty scales"),
        "eps-grid": Param(_parse_grid, list(np.linspace(-0.9, -0.1, 9)), "energy grid"),
        "s0": Param(_parse_float, None, "initial width (default balance scale)"),
        "ps0": Param(_parse_float, 0.0, "initial width momentum"),
        "r0": Param(_parse_float, 1.0, "launch radius"),
        "abscissa": Param(
            _parse_str,
            "classical",
            "energy column convention: classical energy or launch kinetic energy",
            ("classical", "kinetic"),
        ),
        **_TOL_PARAMS,
    },
    "eotvos": {
        "g": Param(_parse_float, 10.0, "field strength (m/s^2)"),
        "d2g": Param(_parse_float, 1e-12, "field-strength curvature (1/(m s^2))"),
        "width": Param(_parse_floats, [1e-10, 1.0], "packet widths s (m)"),
    },
    "reconstruct": {
        "order": Param(_parse_int, 2, "truncation order"),
        "x-mean": Param(_parse_float, 0.0, "<x>"),
        "p-mean": Param(_parse_float, 0.0, "<p>"),
        "dxx": Param(_parse_float, 1.0, "Dxx"),
        "dxp": Param(_parse_float, 0.0, "Dxp"),
        "dpp": Param(_parse_float, None, "Dpp (default minimal uncertainty)"),
        "hbar": Param(_parse_float, 1.0, "hbar"),
        "center": Param(_parse_float, None, "basis center (default <x>)"),
        "alpha": Param(_parse_float, None, "basis width (default sqrt(2 Dxx))"),
        "x-grid": Param(_parse_grid, None, "sampling grid (default center +- 6 sigma)"),
        "raw-moments": Param(_parse_floats, None, "raw moments <x^0>,...,<x^N>"),
        "mixed-moments": Param(_parse_floats, None, "Re<x^n p> for n = 0..N"),
    },
    "interferometer": {
        "pulse-spacing": Param(_parse_float, 1.0, "pulse spacing T"),
        "hbar-k": Param(_parse_float, 2.0, "photon momentum kick"),
        "mass": Param(_parse_float, 1.0, "atom mass"),
        "hbar": Param(_parse_float, 1.0, "hbar"),
        "g": Param(_parse_float, 0.0, "uniform field strength"),
        "gradient": Param(_parse_floats, [0.0], "field gradients Phi''' -> 0; Phi'' values"),
        "x0": Param(_parse_float, 0.0, "initial position"),
        "p0": Param(_parse_float, 0.0, "initial momentum"),
        "s0": Param(_parse_float, 0.5, "initial width"),
        "ps0": Param(_parse_float, 0.0, "initial width momentum"),
        "u-casimir": Param(_parse_float, None, "Casimir U (default hbar^2/4)"),
        **_TOL_PARAMS,
    },
}

_OUTPUT_FILES = {
    "simulate": "trajectory.csv",
    "return-time": "return_time.csv",
    "eotvos": "eotvos.csv",
    "reconstruct": "reconstruction.csv",
    "interferometer": "mz_phase.csv",
}


@dataclass(frozen=True)
class RunConfig:
    """Resolved run description: command, typed parameters, output directory."""

    command: str
    parameters: dict
    output_dir: Path
    seed: int = 0
    svg: bool = False


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gravmoments",
        description="Semiclassical moment dynamics in gravitational potentials",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, schema in _PARAM_SPECS.items():
        p = sub.add_parser(command, help=f"run the {command} experiment")
        p.add_argument("--config", default=None, help="flat key = value config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", default=None, help="seed recorded for sweeps")
        p.add_argument("--svg", action="store_true", help="also write an SVG plot")
        for name, param in schema.items():
            p.add_argument(f"--{name}", default=None, help=param.help, metavar="V")
    return parser


def _read_config_file(path: str) -> dict:
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as err:
        raise ConfigurationError(f"cannot read config file {path!r}: {err}") from None
    for lineno, raw_line in enumerate(lines, start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(
                f"{path}:{lineno}: expected 'key = value', got {raw_line!r}"
            )
        key, value = line.split("=", 1)
        values[key.strip().replace("_", "-")] = value.strip()
    return values


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge built-in defaults, config-file values, and CLI overrides."""
    command = args.command
    schema = _PARAM_SPECS[command]
    file_values = _read_config_file(args.config) if args.config else {}
    reserved = {"out", "seed", "svg"}
    for key in file_values:
        if key not in schema and key not in reserved:
            raise ConfigurationError(
                f"unknown config key {key!r} for command {command!r}"
            )
    params = {}
    for name, param in schema.items():
        cli_value = getattr(args, name.replace("-", "_"))
        if cli_value is not None:
            raw = cli_value
        elif name in file_values:
            raw = file_values[name]
        else:
            params[name] = param.default
            continue
        try:
            value = param.convert(raw)
        except ConfigurationError as err:
            raise ConfigurationError(f"field {name!r}: {err}") from None
        if param.choices is not None and value not in param.choices:
            raise ConfigurationError(
                f"field {name!r}: {value!r} not one of {param.choices}"
            )
        params[name] = value
    out = args.out if args.out is not None else file_values.get("out", "out")
    seed_raw = args.seed if args.seed is not None else file_values.get("seed", "0")
    svg = bool(args.svg or file_values.get("svg", "").lower() in ("1", "true", "yes"))
    return RunConfig(
        command=command,
        parameters=params,
        output_dir=Path(out),
        seed=_parse_int(str(seed_raw)),
        svg=svg,
    )


def _fmt(value) -> str:
    return f"{float(value):.17g}"


def _write_csv(path: Path, header: list, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if not isinstance(v, str) else v for v in row) + "\n")


def _json_safe(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def _write_manifest(config: RunConfig, outputs: list, extra: dict | None = None) -> None:
    manifest = {
        "command": config.command,
        "package": "gravmoments",
        "version": __version__,
        "seed": config.seed,
        "svg": config.svg,
        "parameters": {k: _json_safe(v) for k, v in config.parameters.items()},
        "outputs": [Path(o).name for o in outputs],
    }
    if extra:
        manifest.update({k: _json_safe(v) for k, v in extra.items()})
    path = config.output_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _integrator_config(params: dict, method: str = "adaptive_rk", h_init=None) -> IntegratorConfig:
    return IntegratorConfig(
        rel_tol=params["rel-tol"],
        abs_tol=params["abs-tol"],
        method=method,
        h_init=h_init,
    )


def _build_potential(params: dict):
    kind = params["potential"]
    if kind == "free":
        return free_potential()
    if kind == "linear":
        return linear_potential(params["g"])
    if kind == "quadratic":
        return quadratic_potential(params["k"])
    if kind == "newtonian":
        return newtonian_potential(params["gm"])
    return power_law_potential(
        params["gm"], params["alpha-n"], params["n-exp"], params["r0-pow"]
    )


def _run_simulate(config: RunConfig) -> int:
    p = config.parameters
    pot = _build_potential(p)
    hbar = p["hbar"]
    u = p["u-casimir"]
    s0 = p["s0"]
    if s0 == 0.0:
        u = 0.0 if u is None else u
        initial = CanonicalState(p["x0"], p["p0"], 0.0, 0.0, u)
    else:
        if u is None:
            u = hbar * hbar / 4.0
        initial = CanonicalState(p["x0"], p["p0"], s0, p["ps0"], u)
    cfg = _integrator_config(p, p["method"], p["h-init"])
    traj = integrate_canonical(
        initial, pot, p["mass"], (0.0, p["t-final"]), cfg, n_samples=p["n-samples"]
    )
    out = config.output_dir / _OUTPUT_FILES["simulate"]
    traj.to_csv(out)
    _write_manifest(
        config,
        [out],
        {"status": traj.status, "message": traj.message, "tolerances": [cfg.rel_tol, cfg.abs_tol]},
    )
    if config.svg:
        _plot_trajectory(traj, config.output_dir / "trajectory.svg")
    if traj.status != "ok":
        print(f"numerical abort: {traj.message}", file=sys.stderr)
        return 3
    return 0


def _run_return_time(config: RunConfig) -> int:
    p = config.parameters
    cfg = _integrator_config(p)
    u_list = [0.0] + [u for u in p["u"] if u != 0.0]
    eps_grid = p["eps-grid"]
    out = config.output_dir / _OUTPUT_FILES["return-time"]
    rows = []
    status = 0
    try:
        table = return_time_curve(
            eps_grid, u_list, s0=p["s0"], ps0=p["ps0"], r0=p["r0"], cfg=cfg
        )
    except SingularityAbort as err:
        print(f"numerical abort: {err}", file=sys.stderr)
        table = []
        status = 3
    kinetic = p["abscissa"] == "kinetic"
    for row in table:
        eps_out = row.epsilon + 1.0 / p["r0"] if kinetic else row.epsilon
        rows.append((eps_out, row.u, row.t_return, row.status))
    _write_csv(out, ["epsilon", "u", "t_return", "status"], rows)
    _write_manifest(
        config,
        [out],
        {"abscissa": p["abscissa"], "tolerances": [cfg.rel_tol, cfg.abs_tol]},
    )
    if config.svg and rows:
        _plot_return_time(rows, config.output_dir / "return_time.svg")
    return status


def _run_eotvos(config: RunConfig) -> int:
    p = config.parameters
    rows = []
    for s in p["width"]:
        dxx = s * s
        eta = eotvos_estimate(EotvosInput(p["g"], p["d2g"], dxx))
        rows.append((p["g"], p["d2g"], dxx, eta))
    out = config.output_dir / _OUTPUT_FILES["eotvos"]
    _write_csv(out, ["g", "d2g", "dxx", "eta"], rows)
    _write_manifest(config, [out])
    if config.svg:
        _plot_eotvos(rows, config.output_dir / "eotvos.svg")
    return 0


def _run_reconstruct(config: RunConfig) -> int:
    p = config.parameters
    ctx = HbarContext(hbar=p["hbar"])
    order = p["order"]
    if p["raw-moments"] is not None:
        raw_list = p["raw-moments"]
        if len(raw_list) < order + 1:
            raise ConfigurationError(
                f"raw-moments supplies order {len(raw_list) - 1}, need {order}"
            )
        mixed = p["mixed-moments"]
        raw = RawMomentSequence(tuple(raw_list), tuple(mixed) if mixed else None)
        center = p["center"]
        alpha = p["alpha"]
        if center is None:
            center = raw.moments[1] if raw.order >= 1 else 0.0
        if alpha is None:
            if raw.order < 2:
                raise ConfigurationError("alpha required when no variance is supplied")
            dxx = raw.moments[2] - raw.moments[1] ** 2
            if dxx <= 0.0:
                raise ConfigurationError("supplied moments have nonpositive variance")
            alpha = math.sqrt(2.0 * dxx)
        basis = HermiteBasis(center, alpha, order)
        density = reconstruct_density(raw, basis)
        if mixed is not None:
            phase = reconstruct_phase_derivative(mixed, density, ctx)
        else:
            phase = reconstruct_phase_derivative([0.0] * (order + 1), density, ctx)
        from .reconstruct import ReconstructedState

        state = ReconstructedState(density, phase)
        sigma = alpha / math.sqrt(2.0)
    else:
        dpp = p["dpp"]
        if dpp is None:
            dpp = (p["hbar"] ** 2 / 4.0 + p["dxp"] ** 2) / p["dxx"]
        mstate = SecondOrderState(p["x-mean"], p["p-mean"], p["dxx"], p["dxp"], dpp)
        basis = None
        if p["center"] is not None or p["alpha"] is not None:
            center = p["center"] if p["center"] is not None else p["x-mean"]
            alpha = p["alpha"] if p["alpha"] is not None else math.sqrt(2.0 * p["dxx"])
            basis = HermiteBasis(center, alpha, order)
        state = reconstruct_state(mstate, ctx, order=order, basis=basis)
        sigma = math.sqrt(mstate.dxx)
    if p["x-grid"] is not None:
        xs = np.asarray(p["x-grid"], dtype=float)
    else:
        center = state.density.basis.center
        xs = np.linspace(center - 6.0 * sigma, center + 6.0 * sigma, 601)
    data = state.sample(xs)
    out = config.output_dir / _OUTPUT_FILES["reconstruct"]
    _write_csv(out, ["x", "rho", "dtheta_dx", "theta"], [tuple(r) for r in data])
    _write_manifest(
        config,
        [out],
        {
            "theta0": state.theta0,
            "theta0_is_gauge": state.theta0_is_gauge,
            "negative_regions": [list(r) for r in state.density.negative_regions],
        },
    )
    if config.svg:
        _plot_reconstruction(data, config.output_dir / "reconstruction.svg")
    return 0


def _run_interferometer(config: RunConfig) -> int:
    p = config.parameters
    ctx = HbarContext(hbar=p["hbar"])
    hbar = p["hbar"]
    u = p["u-casimir"]
    if u is None:
        u = hbar * hbar / 4.0
    initial = CanonicalState(p["x0"], p["p0"], p["s0"], p["ps0"], u)
    cfg = _integrator_config(p)
    rows = []
    validity = []
    for gradient in p["gradient"]:
        if gradient == 0.0:
            pot = linear_potential(p["g"]) if p["g"] != 0.0 else free_potential()
        else:
            pot = gravity_gradient_potential(p["g"], gradient)
        mz = MachZehnderConfig(
            pulse_spacing=p["pulse-spacing"],
            hbar_k=p["hbar-k"],
            mass=p["mass"],
            potential=pot,
            initial=initial,
            ctx=ctx,
        )
        result = mach_zehnder_phase(mz, cfg)
        rows.append(
            (p["pulse-spacing"], p["hbar-k"], gradient, result.separation, result.delta_theta)
        )
        validity.append(result.within_validity)
    out = config.output_dir / _OUTPUT_FILES["interferometer"]
    _write_csv(out, ["T", "k", "gradient", "separation", "dtheta"], rows)
    _write_manifest(
        config,
        [out],
        {"within_validity": validity, "tolerances": [cfg.rel_tol, cfg.abs_tol]},
    )
    if config.svg:
        _plot_interferometer(rows, config.output_dir / "mz_phase.svg")
    return 0


_RUNNERS = {
    "simulate": _run_simulate,
    "return-time": _run_return_time,
    "eotvos": _run_eotvos,
    "reconstruct": _run_reconstruct,
    "interferometer": _run_interferometer,
}


def run(config: RunConfig) -> int:
    """Dispatch a resolved configuration; returns the process exit code."""
    config.output_dir.mkdir(parents=True, exist_ok=True)
    return _RUNNERS[config.command](config)


def _merge_negative_values(argv: list) -> list:
    """Join '--flag -0.9:...' into '--flag=-0.9:...'.

    argparse misclassifies values that start with '-' (negative numbers,
    grids, lists) as option strings; merging them with their flag avoids
    that without changing the documented syntax.
    """
    merged = []
    skip = False
    for i, token in enumerate(argv):
        if skip:
            skip = False
            continue
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (
            token.startswith("--")
            and "=" not in token
            and nxt is not None
            and nxt.startswith("-")
            and len(nxt) > 1
            and (nxt[1].isdigit() or nxt[1] == ".")
        ):
            merged.append(f"{token}={nxt}")
            skip = True
        else:
            merged.append(token)
    return merged


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(_merge_negative_values(argv))
    try:
        config = resolve_config(args)
        return run(config)
    except ConfigurationError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (SingularityAbort, NoReturnError, QuadratureError) as err:
        print(f"numerical abort: {err}", file=sys.stderr)
        return 3
    except GravMomentsError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


# Plotting helpers import matplotlib lazily; CSV output never depends on them.


def _get_axes():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _plot_trajectory(traj, path: Path) -> None:
    plt = _get_axes()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(traj.times, traj.x, label="x(t)")
    if np.any(traj.s > 0.0):
        ax.plot(traj.times, traj.s, label="s(t)")
    ax.set_xlabel("t")
    ax.legend()
    fig.savefig(path, format="svg")
    plt.close(fig)


def _plot_return_time(rows, path: Path) -> None:
    plt = _get_axes()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    by_u = {}
    for eps, u, t_ret, status in rows:
        by_u.setdefault(u, []).append((eps, t_ret))
    for u, pts in sorted(by_u.items()):
        pts = sorted(pts)
        eps = [a for a, _ in pts]
        ts = [b for _, b in pts]
        if u == 0.0:
            ax.plot(eps, ts, "k--", label="classical (u = 0)")
        else:
            ax.plot(eps, ts, "-", label=f"u = {u:g}")
    ax.set_xlabel("energy")
    ax.set_ylabel("return time")
    ax.legend()
    fig.savefig(path, format="svg")
    plt.close(fig)


def _plot_eotvos(rows, path: Path) -> None:
    plt = _get_axes()
    fig, ax = plt.subplots(figsize=(6, 4))
    widths = [math.sqrt(r[2]) for r in rows]
    etas = [r[3] for r in rows]
    ax.loglog(widths, etas, "o-")
    ax.set_xlabel("packet width s (m)")
    ax.set_ylabel("eta")
    fig.savefig(path, format="svg")
    plt.close(fig)


def _plot_reconstruction(data, path: Path) -> None:
    plt = _get_axes()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(data[:, 0], data[:, 1], label="rho")
    ax2 = ax.twinx()
    ax2.plot(data[:, 0], data[:, 2], "C1", label="dtheta/dx")
    ax.set_xlabel("x")
    ax.set_ylabel("rho")
    ax2.set_ylabel("dtheta/dx")
    fig.savefig(path, format="svg")
    plt.close(fig)


def _plot_interferometer(rows, path: Path) -> None:
    plt = _get_axes()
    fig, ax = plt.subplots(figsize=(6, 4))
    grads = [r[2] for r in rows]
    phases = [r[4] for r in rows]
    ax.plot(grads, phases, "o-")
    ax.set_xlabel("field gradient")
    ax.set_ylabel("delta theta")
    fig.savefig(path, format="svg")
    plt.close(fig)


if __name__ == "__main__":
    sys.exit(main())
