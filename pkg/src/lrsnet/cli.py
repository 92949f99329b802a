"""Command-line interface: simulate / fit / grid / select / cluster / eval /
pipeline. A JSON config file can predefine any flag; explicit flags win."""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from types import SimpleNamespace

import numpy as np

from . import netio
from .model import AdjacencyMatrix, Hyperparams
from .membership import cluster_nodes, project_principal, spectral_embedding
from .netio import Report, atomic_write_text, read_matrix, write_matrix
from .selection import (GridRangeError, estimate_K_elbow, evaluate_metrics,
                        grid_search, heuristic_select, numerical_rank,
                        scree_eigenvalues, sparse_support)
from .solver import fit as admm_fit
from .synthgen import generate_ground_truth, preset_for_case, sample_adjacency

DEFAULTS = {
    "format": "edge-list",
    "index_base": 1,
    "n": None,
    "seed": 0,
    "lam": 0.5,
    "inner_step": 0.05,
    "inner_tol": 1e-9,
    "outer_tol": 1e-7,
    "max_outer_iters": 20000,
    "max_inner_iters": 50000,
    "grid_gamma": "1e-4:1e-1:8",
    "grid_delta": "1e-3:1e0:8",
    "jobs": 1,
    "min_degree": 0,
    "count": 15,
    "k_hat": None,
    "clusters": None,
    "project": False,
    "scenario": None,
    "case": None,
    "gamma": None,
    "delta": None,
    "subset_nodes": None,
    "truth_dir": None,
    "true_labels": None,
}


def _merge_config(ns: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from --config, then from built-in defaults."""
    values = {}
    if getattr(ns, "config", None):
        with open(ns.config) as fh:
            values = json.load(fh)
        unknown = set(values) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for key, default in DEFAULTS.items():
        if getattr(ns, key, None) is None:
            setattr(ns, key, values.get(key, default))
    return ns


def _parse_grid(spec: str) -> np.ndarray:
    try:
        lo, hi, steps = spec.split(":")
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError as exc:
        raise ValueError(f"grid spec must be lo:hi:steps, got {spec!r}") from exc
    if lo <= 0 or hi < lo or steps < 1:
        raise ValueError(f"invalid grid spec {spec!r}")
    return np.logspace(np.log10(lo), np.log10(hi), steps)


def _hyperparams(ns, gamma=1.0, delta=1.0) -> Hyperparams:
    return Hyperparams(gamma=gamma, delta=delta, lam=ns.lam,
                       inner_step=ns.inner_step, inner_tol=ns.inner_tol,
                       outer_tol=ns.outer_tol,
                       max_outer_iters=ns.max_outer_iters,
                       max_inner_iters=ns.max_inner_iters)


def _load_input(ns) -> AdjacencyMatrix:
    if not ns.input:
        raise ValueError("--input is required")
    return netio.load_network(ns.input, fmt=ns.format, n=ns.n,
                              index_base=ns.index_base)


def _outdir(ns) -> str:
    if not ns.out_dir:
        raise ValueError("--out-dir is required")
    os.makedirs(ns.out_dir, exist_ok=True)
    return ns.out_dir


def _write_labels(path, node_ids, labels):
    lines = ["node,label"]
    lines += [f"{int(i)},{int(l)}" for i, l in zip(node_ids, labels)]
    atomic_write_text(path, "\n".join(lines) + "\n")


def _read_labels(path) -> dict:
    out = {}
    with open(path) as fh:
        header = fh.readline()
        for line in fh:
            if not line.strip():
                continue
            parts = line.strip().split(",")
            out[int(parts[0])] = int(parts[1])
    return out


def _fit_section(res, gamma, delta) -> dict:
    return {
        "alpha": res.params.alpha,
        "rank": res.rank_L,
        "s_count": len(res.support_S),
        "objective": res.objective,
        "iters": res.iters,
        "converged": bool(res.converged),
        "residual": float(res.residual_history[-1]),
        "gamma": gamma,
        "delta": delta,
    }


def cmd_simulate(ns) -> Report:
    out = _outdir(ns)
    case = ns.case
    if case is None:
        raise ValueError("--case is required (1..6)")
    if ns.scenario is not None:
        expected = 1 if case <= 3 else 2
        if ns.scenario != expected:
            raise ValueError(f"case {case} belongs to scenario {expected}")
    cfg = preset_for_case(case, seed=ns.seed)
    gt = generate_ground_truth(cfg)
    X = sample_adjacency(gt, ns.seed + 1)

    netio.write_network(os.path.join(out, "network.csv"), X, fmt="dense")
    write_matrix(os.path.join(out, "truth_F.csv"), gt.F_star)
    write_matrix(os.path.join(out, "truth_L.csv"), gt.L_star)
    write_matrix(os.path.join(out, "truth_S.csv"), gt.S_star)
    write_matrix(os.path.join(out, "truth_P.csv"), gt.P_star)
    truth = {
        "alpha_star": gt.alpha_star,
        "D_star": gt.D_star.tolist(),
        "K": gt.K,
        "n": gt.n,
        "adhoc_pairs": [list(p) for p in gt.adhoc_pairs],
        "overlap_l": gt.overlap_l.tolist(),
        "overlap_m": gt.overlap_m.tolist(),
        "config": {"n": cfg.n, "K": cfg.K, "n_l": cfg.n_l, "l": cfg.l,
                   "n_m": cfg.n_m, "m": cfg.m, "s_count": cfg.s_count,
                   "seed": cfg.seed},
    }
    atomic_write_text(os.path.join(out, "truth.json"),
                      json.dumps(truth, indent=2, sort_keys=True) + "\n")
    labels = gt.cluster_labels()
    lines = ["node,label,topics"]
    for j in range(gt.n):
        topics = ";".join(str(t) for t in sorted(gt.labels[j]))
        lines.append(f"{j},{labels[j]},{topics}")
    atomic_write_text(os.path.join(out, "labels.csv"), "\n".join(lines) + "\n")

    rep = Report(command="simulate",
                 config={"case": case, "seed": ns.seed},
                 artifacts={name: os.path.join(out, name) for name in
                            ("network.csv", "truth.json", "labels.csv",
                             "truth_F.csv", "truth_L.csv", "truth_S.csv",
                             "truth_P.csv")})
    rep.write(os.path.join(out, "report.json"))
    return rep


def cmd_fit(ns) -> Report:
    out = _outdir(ns)
    X = _load_input(ns)
    if ns.gamma is None or ns.delta is None:
        raise ValueError("fit requires --gamma and --delta")
    h = _hyperparams(ns, gamma=ns.gamma, delta=ns.delta)
    res = admm_fit(X, h)
    write_matrix(os.path.join(out, "fit_L.csv"), res.params.L)
    write_matrix(os.path.join(out, "fit_S.csv"), res.params.S)
    atomic_write_text(os.path.join(out, "residuals.csv"),
                      "\n".join(repr(float(r)) for r in res.residual_history)
                      + "\n")
    rep = Report(command="fit",
                 config={"gamma": ns.gamma, "delta": ns.delta,
                         "input": ns.input},
                 top_edges=netio.top_edges(res.params.S),
                 artifacts={name: os.path.join(out, name) for name in
                            ("fit_L.csv", "fit_S.csv", "residuals.csv")})
    rep.fit = _fit_section(res, ns.gamma, ns.delta)
    rep.write(os.path.join(out, "report.json"))
    return rep


def _run_grid(ns, X):
    gammas = _parse_grid(ns.grid_gamma)
    deltas = _parse_grid(ns.grid_delta)
    return grid_search(X, gammas, deltas, _hyperparams(ns), n_jobs=ns.jobs)


def cmd_grid(ns) -> Report:
    out = _outdir(ns)
    X = _load_input(ns)
    table = _run_grid(ns, X)
    path = os.path.join(out, "selection.csv")
    table.to_csv(path)
    rep = Report(command="grid",
                 config={"grid_gamma": ns.grid_gamma,
                         "grid_delta": ns.grid_delta, "input": ns.input},
                 artifacts={"selection.csv": path})
    rep.selection["table_path"] = path
    rep.write(os.path.join(out, "report.json"))
    return rep


def _scree_section(ns, X):
    count = min(ns.count, X.n)
    values = scree_eigenvalues(X, count)
    degenerate = False
    if ns.k_hat is not None:
        k_hat = ns.k_hat
        overridden = True
    else:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            k_hat = estimate_K_elbow(values)
        degenerate = any("flat spectrum" in str(w.message) for w in caught)
        overridden = False
    section = {"values": [float(v) for v in values], "k_hat": int(k_hat),
               "k_hat_overridden": overridden, "degenerate": degenerate}
    return section, values, int(k_hat)


def _row_dict(row):
    return {"gamma": row.gamma, "delta": row.delta, "rank": row.rank_L,
            "s_count": row.s_count, "bic": row.bic, "aic": row.aic}


def cmd_select(ns) -> Report:
    out = _outdir(ns)
    X = _load_input(ns)
    scree_section, values, k_hat = _scree_section(ns, X)
    atomic_write_text(os.path.join(out, "scree.csv"),
                      "\n".join(repr(float(v)) for v in values) + "\n")
    table = _run_grid(ns, X)
    table_path = os.path.join(out, "selection.csv")
    table.to_csv(table_path)
    gamma, delta = heuristic_select(table, k_hat, X.nnz())
    rep = Report(command="select",
                 config={"input": ns.input, "grid_gamma": ns.grid_gamma,
                         "grid_delta": ns.grid_delta},
                 artifacts={"scree.csv": os.path.join(out, "scree.csv"),
                            "selection.csv": table_path})
    rep.scree = scree_section
    rep.selection = {"table_path": table_path,
                     "heuristic": _row_dict(table.row_for(gamma, delta)),
                     "aic": _row_dict(table.best_aic()),
                     "bic": _row_dict(table.best_bic())}
    rep.write(os.path.join(out, "report.json"))
    return rep


def cmd_cluster(ns) -> Report:
    out = _outdir(ns)
    if not ns.input:
        raise ValueError("--input is required (a fitted L matrix)")
    L = read_matrix(ns.input)
    k_embed = ns.k_hat if ns.k_hat is not None else max(1, numerical_rank(L))
    emb = spectral_embedding(L, k_embed)
    if ns.project:
        points = project_principal(emb)
        coords = points
        k_default = k_embed + 1
    else:
        points = emb
        coords = emb.vectors[:, :2] if k_embed >= 2 else emb.vectors
        k_default = k_embed
    k = ns.clusters if ns.clusters is not None else k_default
    mr = cluster_nodes(points, k, seed=ns.seed)
    labels_path = os.path.join(out, "labels.csv")
    coords_path = os.path.join(out, "coords.csv")
    _write_labels(labels_path, np.arange(L.shape[0]), mr.labels)
    write_matrix(coords_path, coords)
    rep = Report(command="cluster",
                 config={"input": ns.input, "clusters": k,
                         "k_hat": k_embed, "project": bool(ns.project),
                         "seed": ns.seed},
                 artifacts={"labels.csv": labels_path,
                            "coords.csv": coords_path})
    rep.membership = {"k": int(k), "labels_path": labels_path,
                      "coords_path": coords_path, "inertia": mr.inertia}
    rep.write(os.path.join(out, "report.json"))
    return rep


def cmd_eval(ns) -> Report:
    out = _outdir(ns)
    if not ns.fit_dir or not ns.truth_dir:
        raise ValueError("eval requires --fit-dir and --truth-dir")
    L = read_matrix(os.path.join(ns.fit_dir, "fit_L.csv"))
    S = read_matrix(os.path.join(ns.fit_dir, "fit_S.csv"))
    with open(os.path.join(ns.truth_dir, "truth.json")) as fh:
        truth_meta = json.load(fh)
    truth = SimpleNamespace(
        n=truth_meta["n"], K=truth_meta["K"],
        adhoc_pairs=[tuple(p) for p in truth_meta["adhoc_pairs"]])
    fitview = SimpleNamespace(rank_L=numerical_rank(L),
                              support_S=sparse_support(S))
    labels_path = ns.labels or os.path.join(ns.fit_dir, "labels.csv")
    found = _read_labels(labels_path)
    true_map = _read_labels(os.path.join(ns.truth_dir, "labels.csv"))
    nodes = sorted(found)
    labels_found = [found[i] for i in nodes]
    labels_true = [true_map[i] for i in nodes]
    ev = evaluate_metrics(fitview, truth, labels_found, labels_true)
    rep = Report(command="eval",
                 config={"fit_dir": ns.fit_dir, "truth_dir": ns.truth_dir})
    rep.metrics = {"m1": ev.m1, "m2": ev.m2, "m3": ev.m3, "m4": ev.m4,
                   "rank_found": ev.rank_found}
    rep.write(os.path.join(out, "report.json"))
    return rep


def cmd_pipeline(ns) -> Report:
    out = _outdir(ns)
    X = _load_input(ns)
    node_ids = np.arange(X.n)

    if ns.subset_nodes:
        with open(ns.subset_nodes) as fh:
            subset = [int(t) for line in fh for t in line.replace(",", " ").split()
                      if t.strip() and not t.startswith("node")]
        X, node_ids = netio.giant_component(X, subset)

    n_before = X.n
    X, mapping = netio.preprocess(X, ns.min_degree)
    kept = sorted(mapping, key=mapping.get)
    node_ids = node_ids[kept]

    scree_section, values, k_hat = _scree_section(ns, X)
    atomic_write_text(os.path.join(out, "scree.csv"),
                      "\n".join(repr(float(v)) for v in values) + "\n")

    table = _run_grid(ns, X)
    table_path = os.path.join(out, "selection.csv")
    table.to_csv(table_path)
    gamma, delta = heuristic_select(table, k_hat, X.nnz())
    res = admm_fit(X, _hyperparams(ns, gamma=gamma, delta=delta))

    write_matrix(os.path.join(out, "fit_L.csv"), res.params.L)
    write_matrix(os.path.join(out, "fit_S.csv"), res.params.S)

    k_embed = max(1, res.rank_L)
    emb = spectral_embedding(res.params.L, k_embed)
    if ns.project and k_embed >= 2:
        points = project_principal(emb)
        coords = points
        k_default = k_hat + 1
    else:
        points = emb
        coords = emb.vectors[:, :2] if k_embed >= 2 else emb.vectors
        k_default = k_hat
    k = ns.clusters if ns.clusters is not None else k_default
    mr = cluster_nodes(points, k, seed=ns.seed)

    labels_path = os.path.join(out, "labels.csv")
    coords_path = os.path.join(out, "coords.csv")
    _write_labels(labels_path, node_ids, mr.labels)
    write_matrix(coords_path, coords)
    for c in range(k):
        members = node_ids[mr.labels == c]
        atomic_write_text(os.path.join(out, f"cluster_{c}_nodes.csv"),
                          "\n".join(str(int(i)) for i in members) + "\n")

    rep = Report(command="pipeline",
                 config={"input": ns.input, "min_degree": ns.min_degree,
                         "grid_gamma": ns.grid_gamma,
                         "grid_delta": ns.grid_delta, "seed": ns.seed,
                         "clusters": int(k), "project": bool(ns.project),
                         "isolation_removal": "iterated to fixed point"},
                 top_edges=netio.top_edges(res.params.S),
                 artifacts={"selection.csv": table_path,
                            "scree.csv": os.path.join(out, "scree.csv"),
                            "labels.csv": labels_path,
                            "coords.csv": coords_path,
                            "fit_L.csv": os.path.join(out, "fit_L.csv"),
                            "fit_S.csv": os.path.join(out, "fit_S.csv")})
    rep.preprocess = {"n_input": int(n_before), "n_kept": int(X.n),
                      "dropped_low_degree": None, "dropped_isolated": None,
                      "kept_nodes": [int(i) for i in node_ids]}
    rep.scree = scree_section
    rep.selection = {"table_path": table_path,
                     "heuristic": _row_dict(table.row_for(gamma, delta)),
                     "aic": _row_dict(table.best_aic()),
                     "bic": _row_dict(table.best_bic())}
    rep.fit = _fit_section(res, gamma, delta)
    rep.membership = {"k": int(k), "labels_path": labels_path,
                      "coords_path": coords_path, "inertia": mr.inertia}

    if ns.true_labels:
        true_map = _read_labels(ns.true_labels)
        labels_true = [true_map[int(i)] for i in node_ids]
        metrics = {"m1": None, "m2": None, "m3": None, "m4": None,
                   "rank_found": res.rank_L}
        if ns.truth_dir and X.n == n_before and np.array_equal(
                node_ids, np.arange(len(true_map))):
            with open(os.path.join(ns.truth_dir, "truth.json")) as fh:
                meta = json.load(fh)
            truth = SimpleNamespace(n=meta["n"], K=meta["K"],
                                    adhoc_pairs=[tuple(p) for p in
                                                 meta["adhoc_pairs"]])
            ev = evaluate_metrics(res, truth, mr.labels, labels_true)
            metrics = {"m1": ev.m1, "m2": ev.m2, "m3": ev.m3, "m4": ev.m4,
                       "rank_found": ev.rank_found}
        else:
            from .selection import best_match_mismatches
            metrics["m4"] = best_match_mismatches(mr.labels, labels_true) / X.n
        rep.metrics = metrics

    rep.write(os.path.join(out, "report.json"))
    return rep


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "grid": cmd_grid,
    "select": cmd_select,
    "cluster": cmd_cluster,
    "eval": cmd_eval,
    "pipeline": cmd_pipeline,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="lrsnet",
        description="Low-rank plus sparse logistic network models")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file holding flag defaults")
        sp.add_argument("--out-dir", dest="out_dir")
        sp.add_argument("--seed", type=int)

    def net_input(sp):
        sp.add_argument("--input")
        sp.add_argument("--format", choices=["edge-list", "dense"])
        sp.add_argument("--n", type=int, help="node count for edge lists")
        sp.add_argument("--index-base", dest="index_base", type=int,
                        choices=[0, 1])

    def solver_opts(sp):
        sp.add_argument("--lambda", dest="lam", type=float)
        sp.add_argument("--inner-step", dest="inner_step", type=float)
        sp.add_argument("--inner-tol", dest="inner_tol", type=float)
        sp.add_argument("--outer-tol", dest="outer_tol", type=float)
        sp.add_argument("--max-outer-iters", dest="max_outer_iters", type=int)
        sp.add_argument("--max-inner-iters", dest="max_inner_iters", type=int)

    def grid_opts(sp):
        sp.add_argument("--grid-gamma", dest="grid_gamma",
                        help="lo:hi:steps, log-spaced")
        sp.add_argument("--grid-delta", dest="grid_delta")
        sp.add_argument("--jobs", type=int)

    sp = sub.add_parser("simulate", help="generate a synthetic network")
    common(sp)
    sp.add_argument("--scenario", type=int, choices=[1, 2])
    sp.add_argument("--case", type=int, choices=range(1, 7))

    sp = sub.add_parser("fit", help="fit one (gamma, delta) pair")
    common(sp)
    net_input(sp)
    solver_opts(sp)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--delta", type=float)

    sp = sub.add_parser("grid", help="fit every grid cell")
    common(sp)
    net_input(sp)
    solver_opts(sp)
    grid_opts(sp)

    sp = sub.add_parser("select", help="scree, grid and model selection")
    common(sp)
    net_input(sp)
    solver_opts(sp)
    grid_opts(sp)
    sp.add_argument("--k-hat", dest="k_hat", type=int)
    sp.add_argument("--count", type=int, help="scree eigenvalue count")

    sp = sub.add_parser("cluster", help="cluster nodes from a fitted L matrix")
    common(sp)
    sp.add_argument("--input", help="CSV holding the fitted L matrix")
    sp.add_argument("--k-hat", dest="k_hat", type=int,
                    help="embedding dimension (default: numerical rank)")
    sp.add_argument("--clusters", type=int)
    sp.add_argument("--project", action="store_const", const=True)

    sp = sub.add_parser("eval", help="score a fit against simulated truth")
    common(sp)
    sp.add_argument("--fit-dir", dest="fit_dir")
    sp.add_argument("--truth-dir", dest="truth_dir")
    sp.add_argument("--labels", help="found labels CSV (default: fit dir)")

    sp = sub.add_parser("pipeline",
                        help="preprocess, select, fit, cluster, report")
    common(sp)
    net_input(sp)
    solver_opts(sp)
    grid_opts(sp)
    sp.add_argument("--min-degree", dest="min_degree", type=int)
    sp.add_argument("--k-hat", dest="k_hat", type=int)
    sp.add_argument("--count", type=int)
    sp.add_argument("--clusters", type=int)
    sp.add_argument("--project", action="store_const", const=True)
    sp.add_argument("--subset-nodes", dest="subset_nodes",
                    help="restrict to these nodes' giant component first")
    sp.add_argument("--truth-dir", dest="truth_dir")
    sp.add_argument("--true-labels", dest="true_labels")

    return p


def run_command(ns: argparse.Namespace) -> Report:
    ns = _merge_config(ns)
    return COMMANDS[ns.command](ns)


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        run_command(ns)
    except (ValueError, KeyError, OSError, GridRangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
