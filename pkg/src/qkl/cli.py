"""Command-line experiment runner.

Each subcommand ingests a JSON configuration, runs one pipeline and
writes a ``report.json`` (plus subcommand-specific CSV tables) into the
output directory.  Reports echo the configuration and are deterministic
for a fixed config and seed up to the ``timing`` field.

Exit codes: 0 success, 2 invalid configuration, 3 infeasible exponential
cost (the report is still written, with the radius), 4 a numerical
tolerance check failed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import tempfile
import time

import numpy as np

from . import fock, qef
from .errors import ConfigError, InfeasibleError, QklError, ToleranceError
from .kernel_eig import nystrom_decompose, trace_target
from .linalg import expm
from .oqho import (
    build_model,
    model_from_state_space,
    pr_residual,
    recover_theta,
    steady_covariance,
)
from .response import fourier_coefficients, fundamental_series
from .sinbasis import SinBasis, mercer_tail_bound, recovered_ccr_gram

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_TOLERANCE = 4

_DEFAULTS = {
    "basis_K": 256,
    "grid": 400,
    "N": "auto",
    "seed": 0,
    "out_dir": "qkl-out",
}


# ---------------------------------------------------------------------------
# configuration handling

def _parse_matrix(obj, name: str) -> np.ndarray:
    if (
        not isinstance(obj, dict)
        or not {"rows", "cols", "data"} <= set(obj)
    ):
        raise ConfigError(
            f"matrix '{name}' must be an object with rows/cols/data"
        )
    rows, cols = obj["rows"], obj["cols"]
    data = obj["data"]
    if len(data) != rows or any(len(r) != cols for r in data):
        raise ConfigError(
            f"matrix '{name}' data does not match declared {rows}x{cols}"
        )
    try:
        return np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"matrix '{name}' has non-numeric entries: {exc}") from None


def _apply_override(cfg: dict, dotted: str, raw: str) -> None:
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    parts = dotted.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override path '{dotted}' crosses a non-object")
    node[parts[-1]] = value


def load_config(path: str, overrides, out_dir=None, seed=None) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value")
        key, raw = item.split("=", 1)
        _apply_override(cfg, key, raw)
    if out_dir is not None:
        cfg["out_dir"] = out_dir
    if seed is not None:
        cfg["seed"] = seed
    for key, value in _DEFAULTS.items():
        cfg.setdefault(key, value)
    if "T" not in cfg:
        raise ConfigError("config must set the horizon 'T'")
    if not isinstance(cfg["T"], (int, float)) or cfg["T"] <= 0:
        raise ConfigError("'T' must be a positive number")
    if not isinstance(cfg["basis_K"], int) or cfg["basis_K"] < 1:
        raise ConfigError("'basis_K' must be a positive integer")
    if not isinstance(cfg["grid"], int) or cfg["grid"] < 16:
        raise ConfigError("'grid' must be an integer >= 16")
    if cfg["N"] != "auto" and (not isinstance(cfg["N"], int) or cfg["N"] < 1):
        raise ConfigError("'N' must be a positive integer or \"auto\"")
    return cfg


def _model_from_config(cfg: dict):
    spec = cfg.get("model")
    if not isinstance(spec, dict):
        raise ConfigError("config must set 'model'")
    if {"theta", "R", "M"} <= set(spec):
        return build_model(
            _parse_matrix(spec["theta"], "model.theta"),
            _parse_matrix(spec["R"], "model.R"),
            _parse_matrix(spec["M"], "model.M"),
        )
    if {"A", "B", "theta"} <= set(spec):
        return model_from_state_space(
            _parse_matrix(spec["A"], "model.A"),
            _parse_matrix(spec["B"], "model.B"),
            _parse_matrix(spec["theta"], "model.theta"),
        )
    raise ConfigError("'model' needs keys theta/R/M or A/B/theta")


def _weight_from_config(cfg: dict, n: int) -> np.ndarray:
    if "Pi" not in cfg:
        raise ConfigError("this subcommand requires the weight matrix 'Pi'")
    weight = _parse_matrix(cfg["Pi"], "Pi")
    if weight.shape != (n, n):
        raise ConfigError(f"'Pi' must be {n}x{n} for this model")
    return weight


# ---------------------------------------------------------------------------
# output helpers

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, obj) -> None:
    _atomic_write(path, json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n")


def _write_csv(path: str, header: list[str], rows) -> None:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    _atomic_write(path, buf.getvalue())


def _config_hash(cfg: dict) -> str:
    canonical = json.dumps(_jsonable(cfg), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


# ---------------------------------------------------------------------------
# subcommands

def _cmd_check_model(cfg: dict, out_dir: str) -> dict:
    model = _model_from_config(cfg)
    eigs = np.linalg.eigvals(model.drift)
    stable = model.is_stable()
    out = {
        "pr_residual": pr_residual(model),
        "hurwitz": stable,
        "drift_eigenvalues": [[e.real, e.imag] for e in eigs],
    }
    if stable:
        recovered = recover_theta(model.drift, model.dispersion, model.field_j)
        out["theta_roundtrip_error"] = float(
            np.linalg.norm(recovered - model.theta)
        )
        kernel = steady_covariance(model)
        out["invariant_imag_error"] = float(
            np.linalg.norm(kernel.covariance.imag - model.theta)
        )
        out["sigma_min_eigenvalue"] = float(np.linalg.eigvalsh(kernel.sigma).min())
        if out["theta_roundtrip_error"] > 1e-10:
            raise ToleranceError(
                f"CCR round-trip error {out['theta_roundtrip_error']:.3e} > 1e-10"
            )
    return out


def _cmd_wiener_kl(cfg: dict, out_dir: str) -> dict:
    basis = SinBasis(cfg["T"], cfg["basis_K"])
    quad = basis.default_quadrature()
    n_show = min(basis.size, 64)
    sines = basis.sine_samples(quad.nodes)[:n_show]
    cosines = basis.cosine_samples(quad.nodes)[:n_show]
    gram_f = (sines * quad.weights) @ sines.T
    gram_g = (cosines * quad.weights) @ cosines.T
    gram_err = max(
        np.abs(gram_f - np.eye(n_show)).max(), np.abs(gram_g - np.eye(n_show)).max()
    )

    lam = basis.eigenvalue(np.arange(basis.size))
    partial = np.cumsum(lam)
    target = cfg["T"] ** 2 / 2.0
    terms = [2**i for i in range(2, 20) if 2**i <= basis.size]
    if terms[-1] != basis.size:
        terms.append(basis.size)
    mercer_rows = [
        (
            k,
            float(partial[k - 1]),
            float(target - partial[k - 1]),
            float(cfg["T"] ** 2 / (np.pi**2 * k)),
        )
        for k in terms
    ]
    _write_csv(
        os.path.join(out_dir, "mercer.csv"),
        ["terms", "partial_sum", "deficit", "tail_bound"],
        mercer_rows,
    )

    n_ccr = min(basis.size, 8)
    ccr = recovered_ccr_gram(basis, n_ccr, n_nodes=cfg["grid"])
    ccr_err = float(np.abs(ccr - np.eye(n_ccr)).max())
    _write_csv(
        os.path.join(out_dir, "ccr.csv"),
        ["j", "k", "recovered", "target"],
        [
            (j, k, float(ccr[j, k]), float(j == k))
            for j in range(n_ccr)
            for k in range(n_ccr)
        ],
    )
    _write_csv(
        os.path.join(out_dir, "orthonormality.csv"),
        ["j", "k", "sine_inner", "cosine_inner"],
        [
            (j, k, float(gram_f[j, k]), float(gram_g[j, k]))
            for j in range(min(n_show, 16))
            for k in range(min(n_show, 16))
        ],
    )

    out = {
        "gram_max_error": float(gram_err),
        "mercer_deficit": float(target - partial[-1]),
        "mercer_tail_bound": mercer_tail_bound(basis),
        "ccr_max_error": ccr_err,
    }
    if gram_err > 1e-10:
        raise ToleranceError(f"orthonormality error {gram_err:.3e} > 1e-10")
    if out["mercer_deficit"] > out["mercer_tail_bound"]:
        raise ToleranceError("eigenvalue sum deficit exceeds its tail bound")
    if ccr_err > 2e-6:
        raise ToleranceError(f"recovered CCR error {ccr_err:.3e} > 2e-6")
    return out


def _cmd_expm_fourier(cfg: dict, out_dir: str) -> dict:
    model = _model_from_config(cfg)
    horizon = cfg["T"]
    k_max = cfg["basis_K"]
    pad = 256
    coeffs = fourier_coefficients(model, horizon, k_max + pad)
    tail_sq = np.cumsum(np.linalg.norm(coeffs, axis=(1, 2))[::-1] ** 2)[::-1]

    quad = SinBasis(horizon, max(k_max, 64)).default_quadrature()
    exact = np.stack([expm(model.drift, t) for t in quad.nodes])

    rows = []
    worst = 0.0
    sizes = [2**i for i in range(2, 20) if 2**i <= k_max]
    if sizes[-1] != k_max:
        sizes.append(k_max)
    for size in sizes:
        series = fundamental_series(model, horizon, size, quad.nodes)
        err_sq = float(
            np.sum(quad.weights * np.linalg.norm(exact - series, axis=(1, 2)) ** 2)
        )
        l2 = np.sqrt(err_sq)
        tail = np.sqrt(tail_sq[size])
        rows.append((size, l2, float(tail), float(abs(l2 - tail))))
        worst = max(worst, abs(l2 - tail))
    _write_csv(
        os.path.join(out_dir, "expm_fourier.csv"),
        ["K", "l2_error", "parseval_tail", "mismatch"],
        rows,
    )
    if worst > 1e-8:
        raise ToleranceError(f"series error vs tail mismatch {worst:.3e} > 1e-8")
    return {"max_parseval_mismatch": float(worst), "sizes": sizes}


def _cmd_kernel_eig(cfg: dict, out_dir: str) -> dict:
    model = _model_from_config(cfg)
    kernel = steady_covariance(model)
    decomp = nystrom_decompose(kernel, cfg["T"], cfg["grid"])
    total = float(np.sum(decomp.eigenvalues))
    cumulative = np.cumsum(decomp.eigenvalues) / max(total, 1e-300)
    _write_csv(
        os.path.join(out_dir, "spectrum.csv"),
        ["index", "mu", "cumulative_fraction"],
        [
            (k, float(decomp.eigenvalues[k]), float(cumulative[k]))
            for k in range(decomp.n_modes)
        ],
    )
    target = trace_target(decomp)
    residual = abs(total - target) / max(target, 1e-300)
    out = {
        "trace_sum": total,
        "trace_target": target,
        "trace_residual_rel": float(residual),
        "clipped_mass": decomp.clipped_mass,
        "n_modes": decomp.n_modes,
    }
    if residual > 1e-3:
        raise ToleranceError(f"trace identity residual {residual:.3e} > 1e-3")
    return out


def _qef_problem(cfg: dict):
    model = _model_from_config(cfg)
    kernel = steady_covariance(model)
    weight = _weight_from_config(cfg, model.n)
    decomp = nystrom_decompose(kernel, cfg["T"], cfg["grid"])
    return kernel, decomp, weight


def _cmd_qef(cfg: dict, out_dir: str) -> dict:
    kernel, decomp, weight = _qef_problem(cfg)
    final = qef.evaluate_qef(kernel, decomp, weight, n_modes=cfg["N"])

    rows = []
    for n in range(1, final.n_modes + 1):
        step = qef.evaluate_qef(kernel, decomp, weight, n_modes=n)
        rows.append(
            (
                n,
                float(step.value) if step.value is not None else float("nan"),
                float(step.diagnostics["tail_mass"]),
            )
        )
    _write_csv(
        os.path.join(out_dir, "qef_convergence.csv"),
        ["N", "xi", "tail_mass"],
        rows,
    )

    out = {
        "n_modes": final.n_modes,
        "sigmas": list(map(float, final.sigmas)),
        "feasibility_radius": float(final.radius),
        "feasible": final.feasible,
        "xi": float(final.value) if final.value is not None else None,
        "diagnostics": final.diagnostics,
    }

    rng = np.random.default_rng(cfg["seed"])
    if final.feasible and final.value is not None and final.n_modes >= 1:
        mode = int(rng.integers(final.n_modes))
        angle = float(rng.uniform(0.0, 2.0 * np.pi))
        rotated = decomp.modes.copy()
        rotated[mode] = np.exp(1j * angle) * rotated[mode]
        spun = type(decomp)(
            kernel=decomp.kernel,
            grid=decomp.grid,
            eigenvalues=decomp.eigenvalues,
            modes=rotated,
            clipped_mass=decomp.clipped_mass,
            weighted_matrix=decomp.weighted_matrix,
        )
        alt = qef.evaluate_qef(kernel, spun, weight, n_modes=final.n_modes)
        out["phase_invariance_delta"] = float(
            abs(alt.value - final.value) / final.value
        )

    if not final.feasible:
        err = InfeasibleError(final.radius)
        err.outputs = out
        raise err
    return out


def _cmd_oracle_compare(cfg: dict, out_dir: str) -> dict:
    oracle_cfg = cfg.get("oracle", {})
    tol = oracle_cfg.get("tol", 1e-3)
    if "synthetic" in oracle_cfg:
        synth = oracle_cfg["synthetic"]
        mu = np.asarray(synth["mu"], dtype=float)
        gram = np.asarray(synth["G"], dtype=float)
        n_modes = len(mu)
        if gram.shape != (n_modes, n_modes, 2, 2):
            raise ConfigError(
                "oracle.synthetic.G must be an N x N array of 2x2 blocks"
            )
        scale = np.sqrt(np.outer(mu, mu))
        h = (scale[:, :, None, None] * gram).transpose(0, 2, 1, 3).reshape(
            2 * n_modes, 2 * n_modes
        )
    else:
        kernel, decomp, weight = _qef_problem(cfg)
        n_modes = 2 if cfg["N"] == "auto" else int(cfg["N"])
        if n_modes > 3:
            raise ConfigError("oracle comparison supports at most N = 3")
        mu = decomp.eigenvalues[:n_modes]
        gram = np.array(
            [
                [qef.gram_block(decomp, weight, j, k) for k in range(n_modes)]
                for j in range(n_modes)
            ]
        )
        h = qef.assemble_quadratic_form(decomp, weight, n_modes)

    dim = cfg.get("fock_d", fock.DEFAULT_DIMS.get(n_modes, 14))
    determinant_value = qef.qef_value(h)
    oracle_value, delta = fock.oracle_qef_refined(mu, gram, n_modes, dim)
    rel = abs(determinant_value - oracle_value) / max(abs(oracle_value), 1e-300)
    out = {
        "n_modes": n_modes,
        "fock_dim": dim,
        "determinant_value": float(determinant_value),
        "oracle_value": float(oracle_value),
        "relative_delta": float(rel),
        "refinement_delta": float(delta),
    }
    _write_csv(
        os.path.join(out_dir, "oracle.csv"),
        ["n_modes", "fock_dim", "determinant_value", "oracle_value", "relative_delta"],
        [(n_modes, dim, float(determinant_value), float(oracle_value), float(rel))],
    )
    if rel > tol:
        raise ToleranceError(
            f"determinant and brute-force values differ by {rel:.3e} > {tol:.0e}"
        )
    return out


_COMMANDS = {
    "check-model": _cmd_check_model,
    "wiener-kl": _cmd_wiener_kl,
    "expm-fourier": _cmd_expm_fourier,
    "kernel-eig": _cmd_kernel_eig,
    "qef": _cmd_qef,
    "oracle-compare": _cmd_oracle_compare,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qkl",
        description="Karhunen-Loeve pipelines for open quantum harmonic oscillators",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config key (dotted path, JSON value)",
        )
        p.add_argument("--seed", type=int, default=None, help="seed override")
    args = parser.parse_args(argv)

    started = time.monotonic()
    try:
        cfg = load_config(args.config, args.overrides, args.out, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = cfg["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    report = {
        "subcommand": args.subcommand,
        "config": cfg,
        "config_hash": _config_hash(cfg),
        "outputs": {},
        "error": None,
    }

    code = EXIT_OK
    try:
        report["outputs"] = _COMMANDS[args.subcommand](cfg, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        report["error"] = {"category": "infeasible", "radius": float(exc.radius)}
        report["outputs"] = getattr(exc, "outputs", None) or {
            "feasibility_radius": float(exc.radius)
        }
        code = EXIT_INFEASIBLE
    except ToleranceError as exc:
        report["error"] = {"category": "tolerance", "message": str(exc)}
        code = EXIT_TOLERANCE
    except QklError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    report["timing"] = {"seconds": time.monotonic() - started}
    _write_json(os.path.join(out_dir, "report.json"), report)
    if report["error"] is not None:
        print(
            f"{args.subcommand}: {report['error']['category']} "
            f"(see {out_dir}/report.json)",
            file=sys.stderr,
        )
    return code


if __name__ == "__main__":
    sys.exit(main())
