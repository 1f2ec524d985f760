"""Experiment runner: dataset generation, fitting over trials, sweeps and reports.

Every run is driven by an :class:`ExperimentConfig`. Constants that the
benchmark definitions leave open (weight init scheme, kappa transform,
reaction-diffusion coefficients, initial state, observation operator) are
mandatory in config files so they are always recorded with the results.
"""

import csv
import dataclasses
import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, problems
from .linalg import DEFAULT_REL_TOL
from .model import assemble

SCHEMA_VERSION = 1
THREADS_ENV = "ELMDEEPONET_THREADS"

REQUIRED_PHYSICS = {
    "antiderivative": (),
    "nonlinear_ode": ("initial_condition",),
    "darcy": ("kappa_transform",),
    "inverse_source": ("D", "k", "u0", "observation"),
}

DEFAULT_PHYSICS = {
    "antiderivative": {},
    "nonlinear_ode": {"initial_condition": 0.0, "refine": 10},
    "darcy": {"kappa_transform": "exp", "grid": 50, "f_value": 1.0},
    "inverse_source": {"D": 0.01, "k": 0.01, "u0": "zero", "observation": "final_time_slice",
                       "nx": 100, "nt": 1000},
}


class StageError(RuntimeError):
    """An error tagged with the pipeline stage it came from."""

    def __init__(self, stage, exc):
        super().__init__(f"[{stage}] {type(exc).__name__}: {exc}")
        self.stage = stage


def derive_seed(master, *keys):
    """Deterministic 63-bit sub-seed for ``(master, *keys)``."""
    state = np.random.SeedSequence([int(master), *map(int, keys)]).generate_state(2, np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


@dataclasses.dataclass
class ExperimentConfig:
    problem: str = "antiderivative"
    n: int = 2000
    n_train: int = None
    m: int = 100
    big_m: int = 100
    p1: int = 1000
    p2: int = 100
    length_scale: float = 0.1
    jitter: float = 1e-10
    branch_spec: dict = dataclasses.field(default_factory=lambda: {"kind": "slfn"})
    trunk_spec: dict = dataclasses.field(default_factory=lambda: {"kind": "mlp", "layers": 3})
    init_scheme: str = "kaiming_uniform"
    physics: dict = None
    seed: int = 0
    trials: int = 1
    rel_tol: float = DEFAULT_REL_TOL
    ridge: float = 0.0
    output_dir: str = None
    dataset_path: str = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.problem not in problems.PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}; choose from {problems.PROBLEMS}")
        if self.physics is None:
            self.physics = dict(DEFAULT_PHYSICS[self.problem])
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.n_train is None:
            self.n_train = self.n // 2
        if self.problem == "darcy":
            g = int(self.physics.get("grid", 50))
            self.m = self.big_m = g * g
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"unsupported config schema_version {self.schema_version}")

    def to_dict(self):
        return dataclasses.asdict(self)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def config_hash(self):
        d = self.to_dict()
        for key in ("output_dir", "dataset_path"):
            d.pop(key)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        missing = [k for k in ("problem", "init_scheme", "physics", "schema_version") if k not in d]
        if missing:
            raise ValueError(f"config is missing mandatory fields {missing}")
        need = [k for k in REQUIRED_PHYSICS.get(d["problem"], ()) if k not in d["physics"]]
        if need:
            raise ValueError(f"physics block for {d['problem']} must set {need}")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields {sorted(unknown)}")
        physics = dict(DEFAULT_PHYSICS[d["problem"]], **d["physics"])
        d["physics"] = physics
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def generate_dataset(cfg):
    ph = cfg.physics
    common = dict(n=cfg.n, l=cfg.length_scale, seed=cfg.seed, jitter=cfg.jitter)
    if cfg.problem == "antiderivative":
        return problems.gen_antiderivative(m=cfg.m, big_m=cfg.big_m, **common)
    if cfg.problem == "nonlinear_ode":
        if float(ph["initial_condition"]) != 0.0:
            raise ValueError("only the zero initial condition is supported")
        return problems.gen_nonlinear_ode(m=cfg.m, big_m=cfg.big_m, refine=int(ph.get("refine", 10)), **common)
    if cfg.problem == "darcy":
        return problems.gen_darcy(kappa_transform=ph["kappa_transform"], grid=int(ph.get("grid", 50)),
                                  f_value=float(ph.get("f_value", 1.0)), **common)
    if ph["u0"] != "zero" or ph["observation"] != "final_time_slice":
        raise ValueError("inverse_source supports u0='zero' with observation='final_time_slice'")
    return problems.gen_inverse_source(d=float(ph["D"]), k=float(ph["k"]), m=cfg.m, big_m=cfg.big_m,
                                       nx=int(ph.get("nx", 100)), nt=int(ph.get("nt", 1000)), **common)


def load_or_generate(cfg):
    if cfg.dataset_path and Path(cfg.dataset_path).exists():
        return problems.OperatorDataset.load(cfg.dataset_path)
    return generate_dataset(cfg)


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage attached
        raise StageError(name, exc) from exc


def build_model(cfg, ds, trial, p1=None, p2=None):
    branch = dict(cfg.branch_spec)
    branch.setdefault("init", cfg.init_scheme)
    trunk = dict(cfg.trunk_spec)
    trunk.setdefault("init", cfg.init_scheme)
    p1 = cfg.p1 if p1 is None else p1
    p2 = cfg.p2 if p2 is None else p2
    return assemble(branch, trunk, p1, p2, derive_seed(cfg.seed, 1, trial),
                    ds.m, ds.collocation_points.shape[1], cfg.rel_tol, cfg.ridge)


def _run_trials(cfg, train, test, p1, p2, keep_model=False):
    errors, times, ranks_t, ranks_b, resid = [], [], [], [], []
    first = None
    for trial in range(cfg.trials):
        model = _stage("assemble", build_model, cfg, train, trial, p1, p2)
        rep = _stage("fit", model.fit, train)
        ev = _stage("evaluate", model.evaluate, test)
        errors.append(ev.relative_error)
        times.append(rep.seconds)
        ranks_t.append(rep.rank_t)
        ranks_b.append(rep.rank_b)
        resid.append(rep.relative_residual)
        if keep_model and first is None:
            first = model
    return {
        "errors": errors, "times": times, "rank_t": ranks_t, "rank_b": ranks_b,
        "train_relative_residual": resid, "model": first,
    }


def _sample_dumps(cfg, model, test, count=3):
    rng = np.random.Generator(np.random.PCG64(derive_seed(cfg.seed, 2)))
    idx = np.sort(rng.choice(test.n, size=min(count, test.n), replace=False))
    sub = test.subset(idx)
    pred = model.predict(sub.inputs, sub.collocation_points)
    return [{"index": int(i),
             "input": sub.inputs[j].tolist(),
             "truth": sub.labels[:, j].tolist(),
             "prediction": pred[:, j].tolist()} for j, i in enumerate(idx)]


def model_label(cfg):
    trunk = "Sinusoidal ELM-DeepONet" if cfg.trunk_spec.get("kind") == "sinusoidal" else "ELM-DeepONet"
    return f"{trunk} ({cfg.branch_spec.get('kind', 'slfn')} branch)"


def run_experiment(cfg, dataset=None, write=True):
    """Generate (or reuse) the dataset, then fit and evaluate ``cfg.trials`` models.

    Returns a JSON-serializable record. Wall-clock values live under
    ``"timing"`` so that the rest of the record is reproducible bit for bit.
    """
    ds = dataset if dataset is not None else _stage("generate", load_or_generate, cfg)
    train, test = _stage("split", ds.split, cfg.n_train)
    out = _run_trials(cfg, train, test, cfg.p1, cfg.p2, keep_model=True)
    err = np.asarray(out["errors"])
    times = np.asarray(out["times"])
    record = {
        "model": model_label(cfg),
        "problem": cfg.problem,
        "p1": cfg.p1, "p2": cfg.p2,
        "n_parameters": cfg.p1 * cfg.p2,
        "trials": cfg.trials,
        "relative_error_mean": float(err.mean()),
        "relative_error_std": float(err.std()),
        "relative_errors": err.tolist(),
        "rank_t": out["rank_t"], "rank_b": out["rank_b"],
        "train_relative_residual": out["train_relative_residual"],
        "sensor_points": ds.sensor_points.tolist(),
        "collocation_points": ds.collocation_points.tolist(),
        "samples": _sample_dumps(cfg, out["model"], test),
        "provenance": {
            "config_hash": cfg.config_hash(),
            "seed": cfg.seed,
            "trial_seeds": [derive_seed(cfg.seed, 1, t) for t in range(cfg.trials)],
            "library_version": __version__,
            "dataset_meta": ds.meta,
            "config": cfg.to_dict(),
        },
        "timing": {"fit_seconds_mean": float(times.mean()), "fit_seconds": times.tolist()},
    }
    if write and cfg.output_dir:
        _stage("write", write_record, record, cfg.output_dir)
    return record


def write_record(record, out_dir):
    """Write ``record_<problem>_<hash>.json``/``.csv`` plus a separate ``.timing.json``.

    Wall-clock numbers only go to the timing file, so the other two files
    are byte-identical across reruns of the same config.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"record_{record['problem']}_{record['provenance']['config_hash']}"
    body = {k: v for k, v in record.items() if k != "timing"}
    with open(out / f"{stem}.json", "w") as fh:
        json.dump(body, fh, indent=1, sort_keys=True)
        fh.write("\n")
    with open(out / f"{stem}.timing.json", "w") as fh:
        json.dump(record["timing"], fh, indent=1, sort_keys=True)
        fh.write("\n")
    cols = ["model", "problem", "p1", "p2", "n_parameters", "trials",
            "relative_error_mean", "relative_error_std"]
    with open(out / f"{stem}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols + ["config_hash"])
        w.writerow([record[c] for c in cols] + [record["provenance"]["config_hash"]])
    return out / f"{stem}.json"


@dataclasses.dataclass
class SweepTable:
    p1_grid: list
    p2_grid: list
    mean: np.ndarray
    std: np.ndarray
    errors: dict  # (p1, p2) -> message for failed cells
    fit_seconds: np.ndarray

    def cell(self, p1, p2):
        return float(self.mean[self.p1_grid.index(p1), self.p2_grid.index(p2)])

    def to_csv(self, path):
        """Rows are p1 values, columns p2 values; failed cells hold ``ERROR``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["p1\\p2"] + list(self.p2_grid))
            for i, p1 in enumerate(self.p1_grid):
                row = [p1]
                for j, p2 in enumerate(self.p2_grid):
                    row.append("ERROR" if (p1, p2) in self.errors else repr(float(self.mean[i, j])))
                w.writerow(row)


def thread_count():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_sweep(cfg, p1_grid, p2_grid, dataset=None, workers=None, order=None):
    """Average test error of every (p1, p2) cell over ``cfg.trials`` trials.

    Cell values do not depend on evaluation order: trial ``t`` always uses
    the sub-seed ``derive_seed(cfg.seed, 1, t)``. A failing cell is recorded
    in ``errors`` and does not stop the sweep.
    """
    p1_grid, p2_grid = list(p1_grid), list(p2_grid)
    if not p1_grid or not p2_grid:
        raise ValueError("sweep grids must be non-empty")
    ds = dataset if dataset is not None else _stage("generate", load_or_generate, cfg)
    train, test = ds.split(cfg.n_train)
    mean = np.full((len(p1_grid), len(p2_grid)), np.nan)
    std = np.full_like(mean, np.nan)
    secs = np.full_like(mean, np.nan)
    failures = {}
    cells = [(i, j) for i in range(len(p1_grid)) for j in range(len(p2_grid))]
    if order is not None:
        cells = [cells[k] for k in order]

    def work(cell):
        i, j = cell
        try:
            return cell, _run_trials(cfg, train, test, p1_grid[i], p2_grid[j]), None
        except Exception as exc:  # noqa: BLE001 - recorded in-cell
            return cell, None, str(exc)

    with ThreadPoolExecutor(max_workers=workers or thread_count()) as pool:
        results = list(pool.map(work, cells))
    for (i, j), out, msg in results:
        if msg is not None:
            failures[(p1_grid[i], p2_grid[j])] = msg
            continue
        mean[i, j] = np.mean(out["errors"])
        std[i, j] = np.std(out["errors"])
        secs[i, j] = np.mean(out["times"])
    return SweepTable(p1_grid, p2_grid, mean, std, failures, secs)


def emit_report(records, out_dir):
    """Write the comparison table and per-sample prediction dumps.

    Files: ``comparison.csv`` (model, #parameters, training time (s),
    relative error) and, for each record ``r`` and dumped sample ``s``,
    ``predictions_r{r}_s{s}.csv`` (point, truth, prediction; 2-D problems
    use x, y) plus ``inputs_r{r}_s{s}.csv`` (sensor, input).
    """
    if not records:
        raise ValueError("emit_report needs at least one record")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    path = out / "comparison.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "n_parameters", "training_time_s", "relative_error"])
        for r in records:
            w.writerow([r["model"], r["n_parameters"], f"{r['timing']['fit_seconds_mean']:.4f}",
                        f"{r['relative_error_mean']:.6f}"])
    written.append(path)
    for ri, r in enumerate(records):
        pts = np.asarray(r["collocation_points"])
        sens = np.asarray(r["sensor_points"])
        for si, s in enumerate(r["samples"]):
            p = out / f"predictions_r{ri}_s{si}.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh)
                head = ["x", "y"] if pts.shape[1] == 2 else ["point"]
                w.writerow(head + ["truth", "prediction"])
                for pt, t, q in zip(pts, s["truth"], s["prediction"]):
                    w.writerow([repr(float(v)) for v in pt] + [repr(float(t)), repr(float(q))])
            written.append(p)
            p = out / f"inputs_r{ri}_s{si}.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["x", "y", "input"] if sens.shape[1] == 2 else ["sensor", "input"])
                for pt, v in zip(sens, s["input"]):
                    w.writerow([repr(float(c)) for c in pt] + [repr(float(v))])
            written.append(p)
    return written


def load_records(in_dir):
    """Read every record written by :func:`write_record` in ``in_dir``."""
    recs = []
    for p in sorted(Path(in_dir).glob("record_*.json")):
        if p.name.endswith(".timing.json"):
            continue
        with open(p) as fh:
            rec = json.load(fh)
        timing = p.with_name(p.stem + ".timing.json")
        rec["timing"] = json.loads(timing.read_text()) if timing.exists() else {"fit_seconds_mean": float("nan")}
        recs.append(rec)
    return recs


def benchmark_config(name, **overrides):
    """Documented settings used to reproduce each benchmark.

    ``name`` is a problem name or ``"antiderivative_sinusoidal"`` /
    ``"nonlinear_ode_sinusoidal"`` for the fixed-basis trunk variants.
    """
    sinusoidal = name.endswith("_sinusoidal")
    problem = name[: -len("_sinusoidal")] if sinusoidal else name
    base = dict(problem=problem, trials=5)
    if problem in ("antiderivative", "nonlinear_ode"):
        # p1 = N puts B at the interpolation threshold; the cutoff regularizes it
        base.update(n=2000, m=100, big_m=100, p1=1000, p2=100, rel_tol=3e-4)
    elif problem == "darcy":
        # a ReLU unit active on a single sample leaves a ~1e-5 singular value in B
        base.update(n=500, p1=20, p2=200, rel_tol=1e-4,
                    branch_spec={"kind": "mlp", "hidden": [128, 128]})
    elif problem == "inverse_source":
        base.update(n=2000, m=100, big_m=100, p1=10000, p2=50, rel_tol=1e-10,
                    trunk_spec={"kind": "mlp", "layers": 3, "init": "torch_default"})
    if sinusoidal:
        base["trunk_spec"] = {"kind": "sinusoidal"}
    base.update(overrides)
    return ExperimentConfig(**base)
