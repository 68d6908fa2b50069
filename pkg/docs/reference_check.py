"""Recompute the report metrics of a run straight from trace.csv, without the package.

usage: python docs/reference_check.py out/trace.csv --window-start 15 [--tol 0.02]
           [--joint-target 6:2:1.0]
"""
import argparse

import numpy as np
import pandas as pd

parser = argparse.ArgumentParser()
parser.add_argument("trace")
parser.add_argument("--window-start", type=float, required=True)
parser.add_argument("--tol", type=float, default=0.02)
parser.add_argument("--joint-target", action="append", default=[], metavar="ARM:JOINT:TARGET",
                    help="arm with a joint-target subtask, 1-based, e.g. 6:2:1.0")
args = parser.parse_args()

df = pd.read_csv(args.trace, float_precision="round_trip")
tail = df[df["t"] >= args.window_start - 1e-9]
if "x0_x" in df.columns:
    signal = df.filter(regex=r"^sigma_inf\d+$").max(axis=1)
    print("max |e|  ", tail.filter(regex=r"^e_norm\d+$").max().round(6).to_dict())
    print("max |ev| ", tail.filter(regex=r"^ev_norm\d+$").max().round(6).to_dict())
else:
    signal = df["disagree_inf"]
    print(f"disagreement {tail['disagree_inf'].max():.6g}  spread {tail['spread'].max():.6g}")
above = (~(signal < args.tol)).to_numpy().nonzero()[0]
if len(above) == 0:
    print(f"observed settle {df['t'].iloc[0]:g}")
elif above[-1] == len(df) - 1:
    print("observed settle never")
else:
    print(f"observed settle {df['t'].iloc[above[-1] + 1]:g}")

print("mean manipulability", tail.filter(regex=r"^manip\d+$").mean().round(6).to_dict())
for spec in args.joint_target:
    arm, joint, target = spec.split(":")
    final = df[f"q{arm}_{joint}"].iloc[-1]
    es = tail.filter(regex=rf"^es{arm}_\d+$").to_numpy()
    print(f"arm {arm}: joint target error {abs(final - float(target)):.6g}  "
          f"max |es| {np.linalg.norm(es, axis=1).max():.6g}")
