# %% [markdown]
# # Configured experiments, sweeps and reports
#
# The harness runs experiments from a JSON config. The same steps are
# available on the command line:
#
#     elmdeeponet run --config configs/antiderivative.json
#     elmdeeponet sweep --config configs/antiderivative.json --p1 100,1000 --p2 50,100
#     elmdeeponet report --in results/antiderivative

# %%
import tempfile
from pathlib import Path

from elmdeeponet import harness

out = Path(tempfile.mkdtemp())
cfg = harness.benchmark_config("antiderivative", trials=2, output_dir=str(out))
print({k: cfg.to_dict()[k] for k in ("problem", "p1", "p2", "rel_tol", "init_scheme", "seed")})

# %% one experiment: record files are written to output_dir
rec = harness.run_experiment(cfg)
print(f"error {rec['relative_error_mean']:.2%} +- {rec['relative_error_std']:.2%}")
print(sorted(p.name for p in out.iterdir()))

# %% a small sensitivity sweep over (p1, p2)
ds = harness.generate_dataset(cfg)
table = harness.run_sweep(cfg, [100, 1000], [50, 100], dataset=ds)
table.to_csv(out / "sweep.csv")
print((out / "sweep.csv").read_text())

# %% comparison table and prediction dumps for plotting
files = harness.emit_report(harness.load_records(out), out)
print((out / "comparison.csv").read_text())
print([f.name for f in files][:4])
