"""Command-line front end: simulate, fit, summarize, fpca.

Experiments are described by a flat ``key = value`` config file with a
strict schema (unknown keys are rejected). Datasets travel as CSV with
the time column first; draws, summaries and diagnostics are written as
plot-ready CSV/JSON with shortest round-trip float formatting. All
writes go through a temp file plus atomic rename, and every command is
byte-reproducible given the same config and seed.

Exit codes: 0 success, 2 validation, 3 numerical, 4 I/O.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericalError
from .fpca import PM1_GRID, PIECEWISE_CD, centered_mean, fpca_basis, residual_sweep
from .grid import TimeGrid
from .mcmc import ChainConfig, PosteriorDraws, ProposalConfig, run_chain
from .model import PM1, ModelConfig, build_bases
from .posterior import aligned_delta_mu, center_mu, delta_mu, pointwise_summary
from .simulate import (
    FROM_MODEL_PM1,
    FROM_MODEL_PM2,
    VALUE_WARPED,
    SimSpec,
    generate_from_model,
    generate_value_warped,
)
from . import basis as basis_mod

log = logging.getLogger("bayesfmm")

# schema: key -> (caster, default); None default means required when used
_SCHEMA = {
    # model
    "b_fixed": (int, 6),
    "b_random": (int, 6),
    "fixed_basis": (str, "fourier"),
    "random_basis": (str, "bspline"),
    "prior_model": (str, PM1),
    "t_gamma": (int, 5),
    "theta_gamma": (float, 30.0),
    "prior_var_a": (float, 10000.0),
    "ig_shape": (float, 0.01),
    "ig_scale": (float, 0.01),
    # proposals
    "prop_var_a": (float, 1e-4),
    "prop_tau2_sigma": (float, 0.01),
    "prop_tau2_sigmac": (float, 0.01),
    "prop_delta": (float, 0.1),
    "prop_alpha": (float, 200.0),
    "adapt_interval": (int, 500),
    "target_accept_scalar": (float, 0.44),
    "target_accept_vector": (float, 0.23),
    # chain
    "n_iter": (int, None),
    "n_burn": (int, None),
    "thin": (int, 1),
    "seed": (int, 0),
    # simulation
    "generator": (str, None),
    "n_obs": (int, None),
    "n_times": (int, None),
    "sigma2_true": (float, 0.1),
    "sigmac2_true": (float, 0.25),
    "mu_id": (int, 3),
    # io / fpca
    "data_csv": (str, None),
    "out_dir": (str, "."),
    "num_components": (int, 4),
    "residual_b_max": (int, 30),
    "align_family": (str, PM1_GRID),
    "mean_iters": (int, 5),
}

_REQUIRED = {
    "simulate": ("generator", "n_obs", "n_times"),
    "fit": ("data_csv", "n_iter", "n_burn"),
    "summarize": ("data_csv",),
    "fpca": ("data_csv",),
}


def _fmt(x: float) -> str:
    """Shortest round-trip decimal representation."""
    return repr(float(x))


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if not isinstance(v, str) else v for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _write_json(path: Path, payload) -> None:
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def parse_config(path: str | Path) -> dict:
    """Parse and validate a flat key = value config file."""
    cfg = {k: v for k, (_, v) in _SCHEMA.items()}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except FileNotFoundError as err:
        raise ConfigError(f"config file not found: {path}") from err
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        caster = _SCHEMA[key][0]
        try:
            cfg[key] = caster(value)
        except ValueError as err:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {value!r}") from err
    return cfg


def _require(cfg: dict, command: str):
    for key in _REQUIRED[command]:
        if cfg.get(key) is None:
            raise ConfigError(f"missing required config key {key!r} for {command}")


def _model_config(cfg: dict) -> ModelConfig:
    try:
        return ModelConfig(
            b_fixed=cfg["b_fixed"],
            b_random=cfg["b_random"],
            fixed_basis=cfg["fixed_basis"],
            random_basis=cfg["random_basis"],
            prior_model=cfg["prior_model"],
            t_gamma=cfg["t_gamma"],
            theta_gamma=cfg["theta_gamma"],
            prior_var_a=cfg["prior_var_a"],
            ig_shape=cfg["ig_shape"],
            ig_scale=cfg["ig_scale"],
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err


def _proposal_config(cfg: dict, b_fixed: int) -> ProposalConfig:
    try:
        return ProposalConfig(
            sigma_a=cfg["prop_var_a"] * np.eye(b_fixed),
            tau2_sigma=cfg["prop_tau2_sigma"],
            tau2_sigmac=cfg["prop_tau2_sigmac"],
            delta=cfg["prop_delta"],
            alpha_prop=cfg["prop_alpha"],
            adapt_interval=cfg["adapt_interval"],
            target_accept_scalar=cfg["target_accept_scalar"],
            target_accept_vector=cfg["target_accept_vector"],
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err


@dataclass
class Dataset:
    grid: TimeGrid
    values: np.ndarray  # (n_obs, n_times)
    names: list[str]


def read_dataset(path: str | Path) -> Dataset:
    """Ingest a dataset CSV (time first, one column per observation).

    The time column must be strictly increasing and free of NaNs; times
    are rescaled to [0, 1] if they do not already span it.
    """
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except FileNotFoundError as err:
        raise ConfigError(f"dataset file not found: {path}") from err
    if len(lines) < 2:
        raise ConfigError(f"{path}: dataset needs a header and at least one row")
    header = [h.strip() for h in lines[0].split(",")]
    if len(header) < 2:
        raise ConfigError(f"{path}: dataset needs a time column and observations")
    try:
        table = np.array(
            [[float(v) for v in line.split(",")] for line in lines[1:] if line.strip()]
        )
    except ValueError as err:
        raise ConfigError(f"{path}: non-numeric entry in dataset") from err
    if table.ndim != 2 or table.shape[1] != len(header):
        raise ConfigError(f"{path}: ragged rows in dataset")
    if np.any(~np.isfinite(table)):
        raise ConfigError(f"{path}: dataset contains NaN or infinite values")
    times = table[:, 0]
    if np.any(np.diff(times) <= 0.0):
        raise ConfigError(f"{path}: time column must be strictly increasing")
    if times[0] != 0.0 or times[-1] != 1.0:
        log.info("rescaling time column of %s to [0, 1]", path)
        times = (times - times[0]) / (times[-1] - times[0])
        times[0], times[-1] = 0.0, 1.0
    return Dataset(grid=TimeGrid.from_points(times), values=table[:, 1:].T, names=header[1:])


def _write_dataset(path: Path, grid: TimeGrid, values: np.ndarray):
    header = ["time"] + [f"obs_{i + 1}" for i in range(values.shape[0])]
    rows = np.column_stack([grid.points, values.T])
    _write_csv(path, header, rows)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_simulate(cfg: dict, out_dir: Path) -> int:
    _require(cfg, "simulate")
    generator = cfg["generator"]
    spec = SimSpec(
        n_obs=cfg["n_obs"],
        n_times=cfg["n_times"],
        generator=generator,
        sigma2_true=cfg["sigma2_true"],
        sigmac2_true=cfg["sigmac2_true"],
        mu_id=cfg["mu_id"],
        seed=cfg["seed"],
    )
    grid = TimeGrid.uniform(spec.n_times)
    truth: dict = {
        "generator": generator,
        "seed": spec.seed,
        "sigma2": spec.sigma2_true,
        "sigmac2": spec.sigmac2_true,
        "time": list(grid.points),
    }
    if generator in (FROM_MODEL_PM1, FROM_MODEL_PM2):
        config = _model_config({**cfg, "prior_model": generator})
        data, state = generate_from_model(spec, config)
        fixed, _ = build_bases(config, grid)
        truth["a"] = list(state.a)
        truth["mu_values"] = list(fixed.eval_matrix @ state.a)
        if generator == FROM_MODEL_PM1:
            truth["phase_params"] = [g.alpha for g in state.phases]
        else:
            truth["phase_knots"] = list(config.phase_knots())
            truth["phase_params"] = [list(np.diff(g.values)) for g in state.phases]
    elif generator == VALUE_WARPED:
        data, mu = generate_value_warped(spec, grid)
        truth["mu_id"] = spec.mu_id
        truth["mu_values"] = list(np.asarray(mu))
    else:
        raise ConfigError(f"unknown generator {generator!r}")
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_dataset(out_dir / "dataset.csv", grid, data)
    _write_json(out_dir / "truth.json", truth)
    log.info("wrote %s and %s", out_dir / "dataset.csv", out_dir / "truth.json")
    return 0


def _phase_columns(config: ModelConfig, n_obs: int) -> list[str]:
    if config.prior_model == PM1:
        return [f"alpha_{i + 1}" for i in range(n_obs)]
    return [
        f"gamma{i + 1}_d{j + 1}"
        for i in range(n_obs)
        for j in range(config.t_gamma - 1)
    ]


def _write_draws(path: Path, draws: PosteriorDraws, chain: ChainConfig, config: ModelConfig):
    n_obs = draws.n_obs
    header = (
        ["iteration"]
        + [f"a_{k + 1}" for k in range(draws.a.shape[1])]
        + ["sigma2", "sigmac2"]
        + _phase_columns(config, n_obs)
    )
    rows = []
    for k in range(draws.n_kept):
        iteration = chain.n_burn + (k + 1) * chain.thin
        phase_flat = draws.phase_params[k].reshape(-1)
        rows.append(
            [float(iteration)]
            + [float(v) for v in draws.a[k]]
            + [float(draws.sigma2[k]), float(draws.sigmac2[k])]
            + [float(v) for v in phase_flat]
        )
    _write_csv(path, header, rows)


def cmd_fit(cfg: dict, out_dir: Path, n_chains: int) -> int:
    _require(cfg, "fit")
    dataset = read_dataset(cfg["data_csv"])
    config = _model_config(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    for c in range(n_chains):
        chain = ChainConfig(
            n_total=cfg["n_iter"], n_burn=cfg["n_burn"], thin=cfg["thin"], seed=cfg["seed"] + c
        )
        prop = _proposal_config(cfg, config.b_fixed)
        draws = run_chain(dataset.values, config, prop, chain, grid=dataset.grid)
        suffix = f"_chain{c + 1:02d}" if n_chains > 1 else ""
        _write_draws(out_dir / f"draws{suffix}.csv", draws, chain, config)
        _write_json(
            out_dir / f"acceptance{suffix}.json",
            {
                "rates": draws.acceptance,
                "counts": {k: list(v) for k, v in draws.accept_counts.items()},
                "seed": draws.seed,
            },
        )
        prop_final = draws.proposal
        _write_json(
            out_dir / f"proposal_final{suffix}.json",
            {
                "sigma_a": [list(row) for row in np.asarray(prop_final.sigma_a)],
                "scale_a": prop_final.scale_a,
                "tau2_sigma": prop_final.tau2_sigma,
                "tau2_sigmac": prop_final.tau2_sigmac,
                "delta": prop_final.delta,
                "alpha_prop": prop_final.alpha_prop,
                "adapt_interval": prop_final.adapt_interval,
            },
        )
        log.info("chain %d/%d done (acceptance %s)", c + 1, n_chains, draws.acceptance)
    return 0


def read_draws(path: str | Path, config: ModelConfig) -> tuple[PosteriorDraws, np.ndarray]:
    """Load a draws CSV back into a PosteriorDraws plus iteration numbers."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except FileNotFoundError as err:
        raise ConfigError(f"draws file not found: {path}") from err
    header = lines[0].split(",")
    bf = sum(1 for h in header if h.startswith("a_"))
    if bf != config.b_fixed:
        raise ConfigError(
            f"draws file has {bf} coefficient columns, config expects {config.b_fixed}"
        )
    table = np.array([[float(v) for v in line.split(",")] for line in lines[1:] if line.strip()])
    if table.size == 0:
        raise ConfigError(f"{path}: draws file has no rows")
    iters = table[:, 0]
    a = table[:, 1 : 1 + bf]
    sigma2 = table[:, 1 + bf]
    sigmac2 = table[:, 2 + bf]
    phase_flat = table[:, 3 + bf :]
    if config.prior_model == PM1:
        phase_params = phase_flat
        knots = None
    else:
        per_obs = config.t_gamma - 1
        if phase_flat.shape[1] % per_obs:
            raise ConfigError("phase columns inconsistent with t_gamma")
        phase_params = phase_flat.reshape(table.shape[0], -1, per_obs)
        knots = config.phase_knots()
    draws = PosteriorDraws(
        a=a,
        sigma2=sigma2,
        sigmac2=sigmac2,
        phase_params=phase_params,
        prior_model=config.prior_model,
        phase_knots=knots,
        acceptance={},
        accept_counts={},
        proposal=ProposalConfig(),
        seed=-1,
    )
    return draws, iters


def cmd_summarize(cfg: dict, draws_path: str, truth_path: str | None, out_dir: Path) -> int:
    _require(cfg, "summarize")
    dataset = read_dataset(cfg["data_csv"])
    config = _model_config(cfg)
    draws, iters = read_draws(draws_path, config)
    fixed, _ = build_bases(config, dataset.grid)
    centered = center_mu(draws, fixed, dataset.grid)
    mean, lower, upper = pointwise_summary(centered)
    t = dataset.grid.points
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out_dir / "mu_summary.csv",
        ["time", "mean", "q025", "q975"],
        np.column_stack([t, np.asarray(mean), np.asarray(lower), np.asarray(upper)]),
    )
    _write_csv(
        out_dir / "gamma_bar.csv",
        ["time", "gamma_bar"],
        np.column_stack([t, centered.gamma_bar.eval(t)]),
    )
    _write_csv(
        out_dir / "sigma2_draws.csv",
        ["iteration", "sigma2"],
        np.column_stack([iters, draws.sigma2]),
    )
    _write_csv(
        out_dir / "sigmac2_draws.csv",
        ["iteration", "sigmac2"],
        np.column_stack([iters, draws.sigmac2]),
    )
    trace_cols = [iters] + [draws.a[:, k] for k in range(draws.a.shape[1])]
    trace_header = ["iteration"] + [f"a_{k + 1}" for k in range(draws.a.shape[1])]
    trace_cols += [draws.sigma2, draws.sigmac2]
    trace_header += ["sigma2", "sigmac2"]
    first_phase = draws.phase_params[:, 0]
    if first_phase.ndim == 1:
        trace_cols.append(first_phase)
        trace_header.append("alpha_1")
    else:
        for j in range(first_phase.shape[1]):
            trace_cols.append(first_phase[:, j])
            trace_header.append(f"gamma1_d{j + 1}")
    _write_csv(out_dir / "trace.csv", trace_header, np.column_stack(trace_cols))
    if truth_path is not None:
        truth = json.loads(Path(truth_path).read_text(encoding="utf-8"))
        mu_truth = np.asarray(truth["mu_values"], dtype=np.float64)
        if mu_truth.shape[0] != len(dataset.grid):
            raise ConfigError("truth mu_values length does not match the data grid")
        raw = delta_mu(np.asarray(mean), mu_truth, dataset.grid)
        aligned, alpha = aligned_delta_mu(np.asarray(mean), mu_truth, dataset.grid)
        _write_json(
            out_dir / "delta_mu.json",
            {"delta_mu": raw, "delta_mu_aligned": aligned, "align_alpha": alpha},
        )
    log.info("summaries written to %s", out_dir)
    return 0


def cmd_fpca(cfg: dict, out_dir: Path) -> int:
    _require(cfg, "fpca")
    dataset = read_dataset(cfg["data_csv"])
    family = cfg["align_family"]
    if family not in (PM1_GRID, PIECEWISE_CD):
        raise ConfigError(f"unknown align_family {family!r}")
    grid = dataset.grid
    mu_bar = centered_mean(dataset.values, grid, iters=cfg["mean_iters"], family=family)
    components, singular, energy = fpca_basis(
        dataset.values, grid, mu_bar, cfg["num_components"], family=family
    )
    sweep = residual_sweep(
        dataset.values,
        grid,
        lambda b: basis_mod.make_basis(basis_mod.MODIFIED_FOURIER, b, grid),
        b_max=cfg["residual_b_max"],
        family=family,
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    t = grid.points
    _write_csv(out_dir / "mu_bar.csv", ["time", "mu_bar"], np.column_stack([t, np.asarray(mu_bar)]))
    _write_csv(
        out_dir / "fpca_basis.csv",
        ["time"] + [f"u_{k + 1}" for k in range(components.shape[1])],
        np.column_stack([t, components]),
    )
    _write_csv(
        out_dir / "fpca_energy.csv",
        ["component", "singular_value", "energy_fraction"],
        [
            [float(k + 1), float(s), float(energy[k])]
            for k, s in enumerate(singular)
        ],
    )
    _write_csv(
        out_dir / "residual_sweep.csv",
        ["b", "residual_plain", "residual_optimized"],
        sweep,
    )
    log.info("fpca outputs written to %s", out_dir)
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bayesfmm",
        description="Bayesian functional mixed-effects model with time warping",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "fit", "summarize", "fpca"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat key = value config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory (default: config out_dir)")
        if name == "fit":
            p.add_argument("--chains", type=int, default=1, help="independent chains to run")
        if name == "summarize":
            p.add_argument("--draws", required=True, help="draws CSV from fit")
            p.add_argument("--truth", default=None, help="truth JSON from simulate")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("BAYESFMM_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        out_dir = Path(args.out if args.out is not None else cfg["out_dir"])
        if args.command == "simulate":
            return cmd_simulate(cfg, out_dir)
        if args.command == "fit":
            if args.chains < 1:
                raise ConfigError("--chains must be at least 1")
            return cmd_fit(cfg, out_dir, args.chains)
        if args.command == "summarize":
            return cmd_summarize(cfg, args.draws, args.truth, out_dir)
        if args.command == "fpca":
            return cmd_fpca(cfg, out_dir)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except NumericalError as err:
        print(f"numerical error: {err}", file=sys.stderr)
        return 3
    except OSError as err:
        print(f"io error: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
