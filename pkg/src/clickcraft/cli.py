"""Command-line surface.

    clickcraft <protocol> --config <path> [--out DIR] [--format csv|json]
               [--grid re0,re1,im0,im1,nre,nim] [--manifest] [...]

Protocols: herald, subtract, add, amplify, clickstats, errorbound.  Parameters
come from a single versioned JSON config ("schema": 1); a handful of flags
override config fields for sweeps.  Outputs are deterministic: fixed file
names, fixed field order, 17-significant-digit decimal floats, LF line
endings, no timestamps, so identical configs produce byte-identical files.

Exit codes: 0 success, 1 config parse error, 2 parameter validation error,
3 numerical failure (a cutoff could not hold the requested tail tolerance).

The environment variable CLICKCRAFT_THREADS caps internal parallelism of the
grid evaluation; results do not depend on it.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .fock import CutoffError, SqueezerConfig, BeamSplitterConfig, make_state, photon_distribution
from .pfunc import GridSpec, PhaseSpaceMixture, evaluate_grid
from .povm import DetectorConfig, click_statistics, operator_norm_distance
from .processes import (
    AdditionSpec,
    AmplifySpec,
    SubtractionSpec,
    add,
    herald_tmsv_distribution,
    probability_table,
    subtract,
)

PROTOCOLS = ("herald", "subtract", "add", "amplify", "clickstats", "errorbound")


class ConfigError(Exception):
    """The config file is missing, malformed, or schema-incompatible."""


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_text(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="\n")


def _write_json(path: Path, payload: object) -> None:
    _write_text(path, json.dumps(payload, sort_keys=True, indent=1) + "\n")


def _csv(rows: list[list[str]]) -> str:
    return "\n".join(",".join(row) for row in rows) + "\n"


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------


def load_config(path: str | None) -> dict:
    if path is None:
        return {"schema": 1}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        config = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    if config.get("schema", 1) != 1:
        raise ConfigError(f"unsupported config schema {config.get('schema')!r}")
    return config


def _require(config: dict, key: str) -> object:
    if key not in config:
        raise ConfigError(f"config is missing the {key!r} field")
    return config[key]


def _complex_from(value) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2:
        return complex(value[0], value[1])
    raise ConfigError(f"expected a number or [re, im] pair, got {value!r}")


def _detector_from(node) -> DetectorConfig:
    if not isinstance(node, dict):
        raise ConfigError("detector must be an object with fields N and eta")
    return DetectorConfig(int(_require(node, "N")), float(_require(node, "eta")))


def _mixture_from(node) -> PhaseSpaceMixture:
    kind = _require(node, "kind")
    if kind == "vacuum":
        return PhaseSpaceMixture.vacuum()
    if kind == "coherent":
        return PhaseSpaceMixture.coherent(_complex_from(_require(node, "alpha")))
    if kind == "thermal":
        return PhaseSpaceMixture.thermal(float(_require(node, "nbar")))
    if kind == "displaced_thermal":
        return PhaseSpaceMixture.displaced_thermal(
            _complex_from(_require(node, "alpha")), float(_require(node, "nbar"))
        )
    raise ConfigError(f"unsupported input state kind {kind!r}")


def _grid_from(node) -> GridSpec:
    if not isinstance(node, dict):
        raise ConfigError("grid must be an object with extents and cell counts")
    return GridSpec(
        re_min=float(_require(node, "re_min")),
        re_max=float(_require(node, "re_max")),
        im_min=float(_require(node, "im_min")),
        im_max=float(_require(node, "im_max")),
        n_re=int(_require(node, "n_re")),
        n_im=int(_require(node, "n_im")),
    )


def _grid_from_flag(text: str) -> GridSpec:
    parts = text.split(",")
    if len(parts) != 6:
        raise ConfigError("--grid expects re0,re1,im0,im1,nre,nim")
    return GridSpec(
        re_min=float(parts[0]),
        re_max=float(parts[1]),
        im_min=float(parts[2]),
        im_max=float(parts[3]),
        n_re=int(parts[4]),
        n_im=int(parts[5]),
    )


def _clicks_list(node, n_max: int) -> list[int]:
    if node == "all" or node is None:
        return list(range(n_max + 1))
    if isinstance(node, int):
        return [node]
    if isinstance(node, list) and all(isinstance(k, int) for k in node):
        return list(node)
    raise ConfigError(f"clicks must be an integer, a list of integers or 'all'")


# ---------------------------------------------------------------------------
# output writers
# ---------------------------------------------------------------------------


def _write_grid(
    outdir: Path, stem: str, fmt: str, matrix: np.ndarray, grid: GridSpec
) -> list[str]:
    re, im = grid.centers()
    if fmt == "csv":
        rows = [["re", "im", "value"]]
        for i in range(grid.n_im):
            for j in range(grid.n_re):
                rows.append([_fmt(re[j]), _fmt(im[i]), _fmt(matrix[i, j])])
        _write_text(outdir / f"{stem}.csv", _csv(rows))
        return [f"{stem}.csv"]
    payload = {
        "grid": {
            "re_min": grid.re_min,
            "re_max": grid.re_max,
            "im_min": grid.im_min,
            "im_max": grid.im_max,
            "n_re": grid.n_re,
            "n_im": grid.n_im,
        },
        "values_row_major": [float(v) for v in matrix.reshape(-1)],
    }
    _write_json(outdir / f"{stem}.json", payload)
    return [f"{stem}.json"]


def _mixture_terms_payload(mixture: PhaseSpaceMixture, probability: float) -> dict:
    return {
        "probability": probability,
        "gaussians": [
            {"c": g.c, "z": [g.z.real, g.z.imag], "a": g.a} for g in mixture.gaussians
        ],
        "deltas": [{"c": d.c, "z": [d.z.real, d.z.imag]} for d in mixture.deltas],
        "pruned_mass": mixture.dropped,
    }


def _write_distribution(
    outdir: Path, stem: str, fmt: str, columns: dict[str, np.ndarray]
) -> list[str]:
    names = list(columns)
    if fmt == "csv":
        length = len(next(iter(columns.values())))
        rows = [names] + [
            [
                str(int(columns[n][i])) if n in ("n", "k", "N") else _fmt(columns[n][i])
                for n in names
            ]
            for i in range(length)
        ]
        _write_text(outdir / f"{stem}.csv", _csv(rows))
        return [f"{stem}.csv"]
    payload = {
        n: [int(v) for v in col] if n in ("n", "k", "N") else [float(v) for v in col]
        for n, col in columns.items()
    }
    _write_json(outdir / f"{stem}.json", payload)
    return [f"{stem}.json"]


# ---------------------------------------------------------------------------
# protocol runners (each returns written file names and resolved parameters)
# ---------------------------------------------------------------------------


def _run_herald(config: dict, outdir: Path, fmt: str, grid) -> tuple[list[str], dict]:
    inp = _require(config, "input")
    if _require(inp, "kind") != "phase_diffused_tmsv":
        raise ConfigError("the herald protocol takes a phase_diffused_tmsv input")
    omega = float(_require(inp, "omega"))
    det = _detector_from(_require(config, "detector"))
    clicks = _clicks_list(config.get("clicks"), det.N)
    cutoff = config.get("cutoff")
    files: list[str] = []
    summary = {"clicks": clicks, "probabilities": []}
    for k in clicks:
        res = herald_tmsv_distribution(omega, det, k, cutoff)
        n = np.arange(res.weights.size)
        files += _write_distribution(
            outdir,
            f"herald_k{k}",
            fmt,
            {"n": n, "weight": res.weights, "normalized": res.normalized},
        )
        summary["probabilities"].append(res.probability)
    _write_json(outdir / "summary.json", summary)
    files.append("summary.json")
    resolved = {"omega": omega, "detector": {"N": det.N, "eta": det.eta}, "clicks": clicks}
    return files, resolved


def _conditioning_protocol(
    protocol: str, config: dict, outdir: Path, fmt: str, grid: GridSpec | None
) -> tuple[list[str], dict]:
    p_in = _mixture_from(_require(config, "input"))
    det = _detector_from(_require(config, "detector"))
    optics = _require(config, "optics")
    if protocol == "subtract":
        bs = BeamSplitterConfig(float(_require(optics, "t")))
        make_spec = lambda k: SubtractionSpec(bs, det, k)
        resolved_optics = {"t": bs.t, "r": bs.r}
    else:
        sq = (
            SqueezerConfig.from_mu(float(optics["mu"]))
            if "mu" in optics
            else SqueezerConfig(float(_require(optics, "xi")))
        )
        make_spec = lambda k: AdditionSpec(sq, det, k)
        resolved_optics = {"xi": sq.xi, "mu": sq.mu, "nu": sq.nu}
    clicks = _clicks_list(config.get("clicks"), det.N)
    run = subtract if protocol == "subtract" else add

    files: list[str] = []
    summary = {"clicks": clicks, "probabilities": []}
    for k in clicks:
        outcome = run(p_in, make_spec(k))
        summary["probabilities"].append(outcome.probability)
        _write_json(
            outdir / f"terms_k{k}.json",
            _mixture_terms_payload(outcome.state, outcome.probability),
        )
        files.append(f"terms_k{k}.json")
        if grid is not None:
            matrix = evaluate_grid(outcome.state, grid)
            files += _write_grid(outdir, f"pfunction_k{k}", fmt, matrix, grid)
    _write_json(outdir / "summary.json", summary)
    files.append("summary.json")
    resolved = {
        "detector": {"N": det.N, "eta": det.eta},
        "optics": resolved_optics,
        "clicks": clicks,
        "eta_eff": make_spec(clicks[0]).eta_eff,
    }
    return files, resolved


def _percent(x: float) -> str:
    return f"{100.0 * x:.2f}"


def _run_amplify(config: dict, outdir: Path, fmt: str, grid) -> tuple[list[str], dict]:
    inp = _require(config, "input")
    if _require(inp, "kind") != "coherent":
        raise ConfigError("the amplify protocol takes a coherent input")
    beta = _complex_from(_require(inp, "alpha"))
    add_node = _require(config, "addition")
    sub_node = _require(config, "subtraction")
    sq = SqueezerConfig.from_mu(float(_require(_require(add_node, "optics"), "mu")))
    bs = BeamSplitterConfig(float(_require(_require(sub_node, "optics"), "t")))
    det1 = _detector_from(_require(add_node, "detector"))
    det2 = _detector_from(_require(sub_node, "detector"))
    spec = AmplifySpec(AdditionSpec(sq, det1, 0), SubtractionSpec(bs, det2, 0))

    table = probability_table(spec, beta)
    files: list[str] = []
    if fmt == "csv":
        rows = [["k1", "k2", "probability", "percent"]]
        for k1 in range(det1.N + 1):
            for k2 in range(det2.N + 1):
                rows.append([str(k1), str(k2), _fmt(table[k1, k2]), _percent(table[k1, k2])])
        _write_text(outdir / "probability_table.csv", _csv(rows))
        files.append("probability_table.csv")
    else:
        payload = {
            "N1": det1.N,
            "N2": det2.N,
            "probabilities": [[float(v) for v in row] for row in table],
            "percent": [[_percent(v) for v in row] for row in table],
        }
        _write_json(outdir / "probability_table.json", payload)
        files.append("probability_table.json")

    clicks_node = config.get("clicks", "all")
    if grid is not None:
        if isinstance(clicks_node, dict):
            k1_list = _clicks_list(clicks_node.get("k1"), det1.N)
            k2_list = _clicks_list(clicks_node.get("k2"), det2.N)
        elif isinstance(clicks_node, list) and len(clicks_node) == 2:
            k1_list, k2_list = [clicks_node[0]], [clicks_node[1]]
        else:
            k1_list = _clicks_list(clicks_node, det1.N)
            k2_list = _clicks_list(clicks_node, det2.N)
        from dataclasses import replace

        for k1 in k1_list:
            added = add(PhaseSpaceMixture.coherent(beta), replace(spec.add, k=k1))
            for k2 in k2_list:
                outcome = subtract(added.state, replace(spec.sub, k=k2))
                matrix = evaluate_grid(outcome.state, grid)
                files += _write_grid(outdir, f"pfunction_k{k1}_{k2}", fmt, matrix, grid)
                _write_json(
                    outdir / f"terms_k{k1}_{k2}.json",
                    _mixture_terms_payload(outcome.state, outcome.probability),
                )
                files.append(f"terms_k{k1}_{k2}.json")
    resolved = {
        "beta": [beta.real, beta.imag],
        "addition": {"detector": {"N": det1.N, "eta": det1.eta}, "mu": sq.mu},
        "subtraction": {"detector": {"N": det2.N, "eta": det2.eta}, "t": bs.t},
    }
    return files, resolved


def _run_clickstats(config: dict, outdir: Path, fmt: str, grid) -> tuple[list[str], dict]:
    inp = _require(config, "input")
    kind = _require(inp, "kind")
    if kind == "photon_distribution":
        probs = np.asarray([float(v) for v in _require(inp, "probs")])
    else:
        cutoff = int(inp.get("cutoff", 64))
        state = make_state(
            kind,
            cutoff,
            alpha=_complex_from(inp.get("alpha", 0.0)),
            nbar=float(inp.get("nbar", 0.0)),
            n=int(inp.get("n", 0)),
        )
        probs = photon_distribution(state)
    det = _detector_from(_require(config, "detector"))
    dist = click_statistics(probs, det)
    files = _write_distribution(
        outdir,
        "click_distribution",
        fmt,
        {"k": np.arange(det.N + 1), "probability": dist.probs},
    )
    return files, {"detector": {"N": det.N, "eta": det.eta}, "input_kind": kind}


def _run_errorbound(config: dict, outdir: Path, fmt: str, grid) -> tuple[list[str], dict]:
    eta = float(_require(config, "eta"))
    k = int(_require(config, "k"))
    n_values = [int(n) for n in _require(config, "N")]
    cutoff = int(config.get("cutoff", 512))
    values, sups, tails = [], [], []
    for n in n_values:
        res = operator_norm_distance(DetectorConfig(n, eta), k, cutoff)
        values.append(res.value)
        sups.append(res.grid_sup)
        tails.append(res.tail_bound)
    files = _write_distribution(
        outdir,
        "errorbound",
        fmt,
        {
            "N": np.asarray(n_values),
            "distance": np.asarray(values),
            "grid_sup": np.asarray(sups),
            "tail_bound": np.asarray(tails),
        },
    )
    return files, {"eta": eta, "k": k, "N": n_values, "cutoff": cutoff}


_RUNNERS = {
    "herald": _run_herald,
    "subtract": lambda c, o, f, g: _conditioning_protocol("subtract", c, o, f, g),
    "add": lambda c, o, f, g: _conditioning_protocol("add", c, o, f, g),
    "amplify": _run_amplify,
    "clickstats": _run_clickstats,
    "errorbound": _run_errorbound,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clickcraft",
        description="Conditional quantum state engineering with click-detector systems.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="protocol", required=True)
    for name in PROTOCOLS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON parameter file (schema 1)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), help="tabular output format")
        p.add_argument("--grid", help="re0,re1,im0,im1,nre,nim grid override")
        p.add_argument("--manifest", action="store_true", help="write manifest.json")
        if name == "errorbound":
            p.add_argument("--eta", type=float)
            p.add_argument("--k", type=int)
            p.add_argument("--N", help="comma-separated diode counts")
            p.add_argument("--cutoff", type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if config.get("protocol", args.protocol) != args.protocol:
            raise ConfigError(
                f"config is for protocol {config.get('protocol')!r}, "
                f"not {args.protocol!r}"
            )
        # flag overrides
        if args.protocol == "errorbound":
            if args.eta is not None:
                config["eta"] = args.eta
            if args.k is not None:
                config["k"] = args.k
            if args.N is not None:
                config["N"] = [int(v) for v in args.N.split(",")]
            if args.cutoff is not None:
                config["cutoff"] = args.cutoff
        fmt = args.format or config.get("format", "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError(f"unknown output format {fmt!r}")
        grid = None
        if args.grid is not None:
            grid = _grid_from_flag(args.grid)
        elif "grid" in config:
            grid = _grid_from(config["grid"])
    except ConfigError as exc:
        print(f"clickcraft: config error: {exc}", file=sys.stderr)
        return 1

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        files, resolved = _RUNNERS[args.protocol](config, outdir, fmt, grid)
    except ConfigError as exc:
        print(f"clickcraft: config error: {exc}", file=sys.stderr)
        return 1
    except CutoffError as exc:
        print(f"clickcraft: numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"clickcraft: invalid parameters: {exc}", file=sys.stderr)
        return 2

    if args.manifest:
        manifest = {
            "version": __version__,
            "protocol": args.protocol,
            "format": fmt,
            "resolved": resolved,
            "outputs": sorted(files),
        }
        if grid is not None:
            manifest["grid"] = {
                "re_min": grid.re_min,
                "re_max": grid.re_max,
                "im_min": grid.im_min,
                "im_max": grid.im_max,
                "n_re": grid.n_re,
                "n_im": grid.n_im,
            }
        _write_json(outdir / "manifest.json", manifest)
    for name in files:
        print(outdir / name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
