//! Plot scripts written next to the CSVs. They read only those CSVs and
//! need Python with matplotlib.

pub const BIASVAR: &str = r##"#!/usr/bin/env python3
"""Bias and variance of the clipped estimator against the threshold, one
panel per noise model, ordered by decreasing tail index."""
import csv
import os
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "biasvar.csv")) as fh:
    rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))

panels = defaultdict(list)
for r in rows:
    panels[(r["model"], float(r["alpha"]), float(r["a"]))].append(r)
keys = sorted(panels, key=lambda k: (-k[1], k[0], k[2]))

fig, axes = plt.subplots(1, len(keys), figsize=(4 * len(keys), 3.5), squeeze=False)
for ax, key in zip(axes[0], keys):
    data = sorted(panels[key], key=lambda r: float(r["tau"]))
    tau = [float(r["tau"]) for r in data]
    for col, label in (("bias_hat", "bias"), ("var_hat", "variance")):
        y = [float(r[col]) for r in data]
        se = [float(r["stderr_" + col.split("_")[0]]) for r in data]
        ax.plot(tau, y, label=label)
        ax.fill_between(tau, [a - 2 * b for a, b in zip(y, se)], [a + 2 * b for a, b in zip(y, se)], alpha=0.2)
    ax.set_title(f"{key[0]} (a={key[2]:g})")
    ax.set_xlabel("threshold")
    ax.set_yscale("log")
    ax.legend()
fig.tight_layout()
out = os.path.join(here, "biasvar.png")
fig.savefig(out, dpi=120)
print(out, file=sys.stderr)
"##;

pub const SOLVE: &str = r##"#!/usr/bin/env python3
"""Objective and stationarity residual against the iteration count for
every cell of a solve run, one panel per noise model."""
import csv
import os
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))

def read(name):
    with open(os.path.join(here, name)) as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))

summary = [r for r in read("summary.csv") if r["status"] == "ok"]
by_model = defaultdict(list)
for r in summary:
    by_model[r["model"]].append(r)

fig, axes = plt.subplots(2, len(by_model), figsize=(4.5 * len(by_model), 7), squeeze=False)
for col, (model, cells) in enumerate(sorted(by_model.items())):
    for r in cells:
        traj = read("traj_%05d.csv" % int(r["cell"]))
        it = [int(t["iter"]) for t in traj]
        obj = [float(t["obj_z"] or t["obj_x"]) for t in traj]
        label = "tau=%s eta=%s seed=%s" % (r["tau"], r["eta"], r["seed"])
        axes[0][col].plot(it, obj, lw=0.8, label=label)
        res = [(int(t["iter"]), float(t["resid"])) for t in traj if t["resid"]]
        axes[1][col].plot([a for a, _ in res], [b for _, b in res], lw=0.5)
    axes[0][col].set_title(model)
    axes[0][col].set_yscale("log")
    axes[0][col].set_ylabel("objective")
    axes[1][col].set_yscale("log")
    axes[1][col].set_ylabel("stationarity residual")
    axes[1][col].set_xlabel("iteration")
    if len(cells) <= 10:
        axes[0][col].legend(fontsize="x-small")
fig.tight_layout()
out = os.path.join(here, "solve.png")
fig.savefig(out, dpi=120)
print(out, file=sys.stderr)
"##;

pub const SWEEP: &str = r##"#!/usr/bin/env python3
"""Median tuning metric against the step size, one line per threshold and
budget, one panel per noise model."""
import csv
import os
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "tuning.csv")) as fh:
    rows = [r for r in csv.DictReader(line for line in fh if not line.startswith("#")) if r["median"]]

by_model = defaultdict(lambda: defaultdict(list))
for r in rows:
    by_model[r["model"]][(r["tau"], r["iterations"])].append(r)

fig, axes = plt.subplots(1, max(len(by_model), 1), figsize=(4.5 * max(len(by_model), 1), 3.5), squeeze=False)
for ax, (model, lines) in zip(axes[0], sorted(by_model.items())):
    for (tau, k), data in sorted(lines.items()):
        data.sort(key=lambda r: float(r["eta"]))
        ax.plot([float(r["eta"]) for r in data], [float(r["median"]) for r in data], marker="o", label=f"tau={tau} K={k}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("step size")
    ax.set_ylabel(rows[0]["metric"] if rows else "")
    ax.set_title(model)
    ax.legend(fontsize="x-small")
fig.tight_layout()
out = os.path.join(here, "sweep.png")
fig.savefig(out, dpi=120)
print(out, file=sys.stderr)
"##;
