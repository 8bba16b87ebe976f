"""Command-line pipeline: ``aimgft {inspect,verify-zero,transform,tv}``.

Every subcommand prints its main report to stdout. With ``--out DIR`` the
reports and plot data are also written to ``DIR``; wall-clock timings go to
``DIR/timings.json`` only, so the other files are reproducible byte for
byte.

Exit codes: 0 success, 1 input error, 2 numerical failure, 3 spectral
ambiguity.
"""

import argparse
import sys
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import reporting
from .aim import aim_transform, energy_ranking, projection_agreement, spectrum_of
from .estimators import InexactGFT, JordanGFT
from .exceptions import AimGFTError, InputError
from .graph import FORMATS, load_graph, load_signal
from .spectral import (
    DEFAULT_ALPHA,
    DEFAULT_CLUSTER_TOL,
    DEFAULT_DELTA,
    SUBSPACE_TOL,
    numerical_rank,
    verify_numerical_zero,
)
from .variation import tv_report

MODES = ("aim", "exact-chains", "compare")


@dataclass(frozen=True)
class RunConfig:
    command: str
    graph: str
    signal: str = None
    format: str = None
    nodes: str = None
    mode: str = "aim"
    alpha: float = DEFAULT_ALPHA
    delta: float = DEFAULT_DELTA
    k_max: int = None
    cluster_tol: float = DEFAULT_CLUSTER_TOL
    tol_rank: float = SUBSPACE_TOL
    tol_chain: float = None
    threshold: float = 0.6
    retries: int = 10
    seed: int = 0
    normalize: str = "matrix"
    out: str = None

    def __post_init__(self):
        for name in ("alpha", "delta", "cluster_tol", "tol_rank", "threshold"):
            value = getattr(self, name)
            if not value > 0:
                raise InputError(f"--{name.replace('_', '-')} must be positive, got {value}")
        if self.tol_chain is not None and not self.tol_chain > 0:
            raise InputError("--tol-chain must be positive")
        if not self.alpha > self.delta:
            raise InputError("--alpha must exceed --delta")
        if self.threshold > 1:
            raise InputError("--threshold must lie in (0, 1]")
        if self.mode not in MODES:
            raise InputError(f"--mode must be one of {MODES}")

    def report_view(self):
        """Settings that determine the outputs; paths are recorded as given."""
        return {k: v for k, v in asdict(self).items() if k != "out"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser():
    p = _Parser(prog="aimgft", description="Graph Fourier transforms over defective adjacency matrices.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--graph", required=True, help="edge-list CSV or Matrix Market file")
        sp.add_argument("--format", choices=FORMATS, help="graph file format (default: from suffix)")
        sp.add_argument("--nodes", help="node table CSV (id,lat,lon) fixing node order")
        sp.add_argument("--cluster-tol", type=float, default=DEFAULT_CLUSTER_TOL)
        sp.add_argument("--tol-rank", type=float, default=SUBSPACE_TOL)
        sp.add_argument("--out", help="output directory")
        return sp

    common(sub.add_parser("inspect", help="node/edge counts, ranks and clustered spectrum"))

    vz = common(sub.add_parser("verify-zero", help="singular-value test for a multiple zero eigenvalue"))
    vz.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    vz.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    vz.add_argument("--k-max", type=int)

    tr = common(sub.add_parser("transform", help="decompose a signal over spectral components"))
    tr.add_argument("--signal", required=True, help="node_id,value CSV")
    tr.add_argument("--mode", choices=MODES, default="aim")
    tr.add_argument("--threshold", type=float, default=0.6, help="energy fraction to select components")
    tr.add_argument("--tol-chain", type=float)
    tr.add_argument("--retries", type=int, default=10)
    tr.add_argument("--seed", type=int, default=0)

    tv = common(sub.add_parser("tv", help="total variation of each component and its bound"))
    tv.add_argument("--mode", choices=("aim", "exact-chains"), default="aim")
    tv.add_argument("--normalize", choices=("matrix", "columns"), default="matrix")
    tv.add_argument("--seed", type=int, default=0)
    return p


def _config(args):
    fields = {k.replace("-", "_"): v for k, v in vars(args).items() if v is not None}
    return RunConfig(**fields)


def _outdir(cfg):
    if cfg.out is None:
        return None
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _graph(cfg):
    return load_graph(cfg.graph, cfg.format, nodes=cfg.nodes)


def cmd_inspect(cfg):
    graph = _graph(cfg)
    A = graph.adjacency()
    raw, spectrum = spectrum_of(A, cfg.cluster_tol, cfg.tol_rank)
    report = {
        "nodes": graph.node_count,
        "edges": graph.edge_count,
        "adjacency_rank": numerical_rank(A),
        "solver_rank": raw.solver_rank,
        "distinct_eigenvalues": spectrum.k,
        "spectrum": reporting.spectrum_summary(spectrum),
        "deficient": spectrum.deficient(),
        "missing_vectors": int(sum(d.deficiency for d in spectrum.distinct)),
        "ambiguous_eigenvalues": len(spectrum.ambiguities),
    }
    out = _outdir(cfg)
    if out is not None:
        reporting.write_json(out / "inspect.json", report)
    return report


def cmd_verify_zero(cfg):
    graph = _graph(cfg)
    verdict = verify_numerical_zero(graph.adjacency(), cfg.alpha, cfg.delta, cfg.k_max)
    report = verdict.to_dict()
    out = _outdir(cfg)
    if out is not None:
        reporting.write_json(out / "verify_zero.json", report)
    return report


def _write_decomposition(out, spectrum, aim, selected):
    reporting.write_csv(out / "projections.csv", reporting.projection_header(aim.k), reporting.projection_rows(aim))
    reporting.write_csv(out / "energy_plot.csv", ["index", "energy_fraction"], reporting.energy_plot_rows(spectrum, aim))
    reporting.write_csv(
        out / "magnitudes.csv",
        ["node"] + [f"component_{i}" for i in selected],
        reporting.magnitude_rows(aim, selected),
    )


def _decomposition_report(est, s, threshold):
    aim = aim_transform(est.basis_, s)
    ranking = energy_ranking(aim.energies, threshold, total=aim.norm_sq if aim.norm_sq > 0 else None)
    report = aim.to_dict()
    report["spectrum"] = reporting.spectrum_summary(est.spectrum_)
    report["threshold"] = threshold
    report["ranking"] = ranking.order
    report["selected"] = ranking.selected
    report["negative_energy"] = ranking.has_negative
    report["provenance_counts"] = {
        tag: est.basis_.provenance.count(tag) for tag in sorted(set(est.basis_.provenance))
    }
    return aim, ranking, report


def _run_aim(cfg, graph, s, out):
    est = InexactGFT(cluster_tol=cfg.cluster_tol, rank_tol=cfg.tol_rank).fit(graph.adjacency())
    aim, ranking, report = _decomposition_report(est, s, cfg.threshold)
    report["mode"] = "aim"
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        reporting.write_json(out / "aim.json", report)
        _write_decomposition(out, est.spectrum_, aim, ranking.selected)
    return est, aim, report


def _run_chains(cfg, graph, s, out):
    est = JordanGFT(
        cluster_tol=cfg.cluster_tol,
        rank_tol=cfg.tol_rank,
        tol_chain=cfg.tol_chain,
        retries=cfg.retries,
        seed=cfg.seed,
        fallback=True,
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        est.fit(graph.adjacency())
    for w in caught:
        print(f"warning: {w.message}; falling back to basis completion", file=sys.stderr)
    aim, ranking, report = _decomposition_report(est, s, cfg.threshold)
    report["mode"] = "exact-chains"
    report["fallback"] = est.fell_back_
    report["chains"] = [cs.to_manifest() for cs in est.chain_sets_]
    if est.basis_.is_jordan:
        report["jordan_subspaces"] = [
            {
                "component": p.component,
                "columns": [p.start, p.stop],
                "projection_norm": float(np.linalg.norm(p.projection)),
            }
            for p in est.chain_projections(s)
        ]
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        reporting.write_json(out / "chains.json", report)
        labels, V = [], []
        for cs in est.chain_sets_:
            for c, C in enumerate(cs.chains):
                for k in range(C.shape[1]):
                    labels.append((len(labels), complex(cs.lam).real, complex(cs.lam).imag, c, k))
                V.append(C)
        if V:
            reporting.write_csv(
                out / "chain_vectors.csv",
                ["column", "eigenvalue_re", "eigenvalue_im", "chain", "position", "row", "re", "im"],
                reporting.vector_rows(np.hstack(V), labels),
            )
        _write_decomposition(out, est.spectrum_, aim, ranking.selected)
    return est, aim, report


def cmd_transform(cfg):
    graph = _graph(cfg)
    if cfg.signal is None:
        raise InputError("--signal is required")
    s = load_signal(cfg.signal, graph).values
    out = _outdir(cfg)
    timings = {}
    if cfg.mode == "aim":
        est, _, report = _run_aim(cfg, graph, s, out)
        timings["aim_basis_seconds"] = est.fit_seconds_
    elif cfg.mode == "exact-chains":
        est, _, report = _run_chains(cfg, graph, s, out)
        timings["chain_basis_seconds"] = est.fit_seconds_
    else:
        est_a, aim_a, rep_a = _run_aim(cfg, graph, s, None if out is None else out / "aim")
        est_c, aim_c, rep_c = _run_chains(cfg, graph, s, None if out is None else out / "exact-chains")
        timings["aim_basis_seconds"] = est_a.fit_seconds_
        timings["chain_basis_seconds"] = est_c.fit_seconds_
        report = {
            "mode": "compare",
            "max_abs_difference": projection_agreement(aim_a, aim_c),
            "norm": float(np.sqrt(aim_a.norm_sq)),
            "fallback": rep_c["fallback"],
            "aim": {"selected": rep_a["selected"], "components": rep_a["components"]},
            "exact_chains": {"selected": rep_c["selected"], "components": rep_c["components"]},
        }
        if out is not None:
            reporting.write_json(out / "agreement.json", report)
    report["config"] = cfg.report_view()
    if out is not None:
        reporting.write_json(out / "timings.json", timings)
    return report


def cmd_tv(cfg):
    graph = _graph(cfg)
    A = graph.adjacency()
    if cfg.mode == "exact-chains":
        est = JordanGFT(cluster_tol=cfg.cluster_tol, rank_tol=cfg.tol_rank, seed=cfg.seed).fit(A)
    else:
        est = InexactGFT(cluster_tol=cfg.cluster_tol, rank_tol=cfg.tol_rank).fit(A)
    rep = tv_report(A, est.basis_, cfg.normalize)
    text = rep.to_csv()
    out = _outdir(cfg)
    if out is not None:
        (out / "tv.csv").write_text(text)
    return text


COMMANDS = {
    "inspect": cmd_inspect,
    "verify-zero": cmd_verify_zero,
    "transform": cmd_transform,
    "tv": cmd_tv,
}


def main(argv=None):
    """Run the CLI and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
        result = COMMANDS[cfg.command](cfg)
    except AimGFTError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    sys.stdout.write(result if isinstance(result, str) else reporting.dumps(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
