#!/usr/bin/env python3
"""Export METABRIC, SUPPORT and GBSG as evsurv CSV files.

The tables are read from wheels available on PyPI, so nothing is fetched
from the original hosting sites:

  pip download --no-deps survival-datasets SurvSet -d wheels/
  python3 tools/export_public_datasets.py wheels/ data/

Output schema: f0,...,f{p-1},duration,event.

METABRIC and SUPPORT are the pycox tables verbatim (one zero duration in
METABRIC is replaced by half the smallest positive duration, since the
reader rejects nonpositive durations). GBSG is rebuilt from the Rotterdam
node-positive patients (1546 rows) plus the 686 GBSG2 patients, with the
same seven covariates; Rotterdam follow-up is converted to months and
administratively censored at the GBSG2 horizon. The Rotterdam source only
carries overall survival, so this GBSG table is an approximation of the
pycox one.
"""
import glob
import io
import os
import sys
import zipfile

import numpy as np
import pandas as pd


def wheel(directory, pattern):
    hits = sorted(glob.glob(os.path.join(directory, pattern)))
    if not hits:
        sys.exit(f"no wheel matching {pattern} in {directory}")
    return zipfile.ZipFile(hits[-1])


def write(df, path):
    feats = [c for c in df.columns if c not in ("duration", "event")]
    out = pd.DataFrame({f"f{i}": df[c].astype(float) for i, c in enumerate(feats)})
    out["duration"] = df["duration"].astype(float)
    out["event"] = df["event"].astype(int)
    out.to_csv(path, index=False, float_format="%.17g")
    print(f"{path}: n={len(out)} p={len(feats)} censoring={1 - out.event.mean():.3f}")


def pycox_tables(directory, outdir):
    z = wheel(directory, "survival_datasets-*.whl")
    for name in ("metabric", "support"):
        df = pd.read_feather(io.BytesIO(z.read(f"survdata/{name}.feather")))
        df = df.astype({"duration": float})
        positive = df.duration[df.duration > 0]
        df.loc[df.duration <= 0, "duration"] = positive.min() / 2
        write(df, os.path.join(outdir, f"{name}.csv"))


def gbsg(directory, outdir):
    z = wheel(directory, "survset-*.whl")
    load = lambda n: pd.read_pickle(io.BytesIO(z.read(f"SurvSet/resources/pickles/{n}.pickle")))
    rott = load("rott2")
    rott = rott[rott.num_nodes > 0]
    g2 = load("GBSG2")
    days_per_month = 365.25 / 12
    horizon = g2.time.max() / days_per_month

    r = pd.DataFrame({
        "hormon": (rott.fac_hormon == "yes").astype(float),
        "grade": rott.fac_grade.astype(float),
        "meno": (rott.fac_meno == "post").astype(float),
        "age": rott.num_age.astype(float),
        "nodes": rott.num_nodes.astype(float),
        "pgr": rott.num_progesterone.astype(float),
        "er": rott.num_estrogen.astype(float),
        "duration": np.minimum(rott.time.astype(float), horizon),
        "event": np.where(rott.time > horizon, 0, rott.event),
    })
    grades = {"I": 1.0, "II": 2.0, "III": 3.0}
    g = pd.DataFrame({
        "hormon": (g2.fac_horTh == "yes").astype(float),
        "grade": g2.fac_tgrade.map(grades).astype(float),
        "meno": (g2.fac_menostat == "Post").astype(float),
        "age": g2.num_age.astype(float),
        "nodes": g2.num_pnodes.astype(float),
        "pgr": g2.num_progrec.astype(float),
        "er": g2.num_estrec.astype(float),
        "duration": g2.time.astype(float) / days_per_month,
        "event": g2.event,
    })
    write(pd.concat([r, g], ignore_index=True), os.path.join(outdir, "gbsg.csv"))


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    wheels, outdir = sys.argv[1], sys.argv[2]
    os.makedirs(outdir, exist_ok=True)
    pycox_tables(wheels, outdir)
    gbsg(wheels, outdir)
