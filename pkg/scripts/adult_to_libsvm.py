#!/usr/bin/env python3
"""Convert the raw UCI Adult census files into 123-feature binary LIBSVM files.

The encoding follows the well-known ``a9a`` layout: the six continuous
attributes are discretised (age, fnlwgt, education-num and hours-per-week into
training-set quintiles; capital-gain and capital-loss into zero / non-zero) and
every categorical attribute is one-hot encoded. Missing values (``?``) simply
activate no feature for that attribute.  Labels: ``>50K`` -> +1, ``<=50K`` -> -1.

Usage::

    python scripts/adult_to_libsvm.py adult.data adult.test data/adult
"""
import argparse
import csv
from pathlib import Path

import numpy as np

COLUMNS = [
    ("age", "quantile"),
    ("workclass", ["Private", "Self-emp-not-inc", "Self-emp-inc", "Federal-gov",
                   "Local-gov", "State-gov", "Without-pay", "Never-worked"]),
    ("fnlwgt", "quantile"),
    ("education", ["Bachelors", "Some-college", "11th", "HS-grad", "Prof-school",
                   "Assoc-acdm", "Assoc-voc", "9th", "7th-8th", "12th", "Masters",
                   "1st-4th", "10th", "Doctorate", "5th-6th", "Preschool"]),
    ("education-num", "quantile"),
    ("marital-status", ["Married-civ-spouse", "Divorced", "Never-married", "Separated",
                        "Widowed", "Married-spouse-absent", "Married-AF-spouse"]),
    ("occupation", ["Tech-support", "Craft-repair", "Other-service", "Sales",
                    "Exec-managerial", "Prof-specialty", "Handlers-cleaners",
                    "Machine-op-inspct", "Adm-clerical", "Farming-fishing",
                    "Transport-moving", "Priv-house-serv", "Protective-serv",
                    "Armed-Forces"]),
    ("relationship", ["Wife", "Own-child", "Husband", "Not-in-family", "Other-relative",
                      "Unmarried"]),
    ("race", ["White", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other", "Black"]),
    ("sex", ["Female", "Male"]),
    ("capital-gain", "nonzero"),
    ("capital-loss", "nonzero"),
    ("hours-per-week", "quantile"),
    ("native-country", ["United-States", "Cambodia", "England", "Puerto-Rico", "Canada",
                        "Germany", "Outlying-US(Guam-USVI-etc)", "India", "Japan",
                        "Greece", "South", "China", "Cuba", "Iran", "Honduras",
                        "Philippines", "Italy", "Poland", "Jamaica", "Vietnam",
                        "Mexico", "Portugal", "Ireland", "France",
                        "Dominican-Republic", "Laos", "Ecuador", "Taiwan", "Haiti",
                        "Columbia", "Hungary", "Guatemala", "Nicaragua", "Scotland",
                        "Thailand", "Yugoslavia", "El-Salvador", "Trinadad&Tobago",
                        "Peru", "Hong", "Holand-Netherlands"]),
]
QUINTILES = [0.2, 0.4, 0.6, 0.8]


def read_rows(path):
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh, skipinitialspace=True):
            if len(rec) != len(COLUMNS) + 1:
                continue  # blank lines and the "|1x3 Cross validator" banner
            rows.append([field.strip() for field in rec])
    return rows


def fit_edges(rows):
    edges = {}
    for col, (name, kind) in enumerate(COLUMNS):
        if kind == "quantile":
            values = np.array([float(r[col]) for r in rows])
            edges[name] = np.quantile(values, QUINTILES)
    return edges


def encode(row, edges):
    feats = []
    offset = 0
    for col, (name, kind) in enumerate(COLUMNS):
        raw = row[col]
        if kind == "quantile":
            feats.append(offset + int(np.searchsorted(edges[name], float(raw), side="right")))
            offset += len(QUINTILES) + 1
        elif kind == "nonzero":
            feats.append(offset + (1 if float(raw) > 0 else 0))
            offset += 2
        else:
            if raw in kind:
                feats.append(offset + kind.index(raw))
            offset += len(kind)
    label = "+1" if row[-1].rstrip(".") == ">50K" else "-1"
    return label + "".join(f" {j + 1}:1" for j in feats)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("train_csv")
    ap.add_argument("test_csv")
    ap.add_argument("out_dir")
    args = ap.parse_args(argv)

    train, test = read_rows(args.train_csv), read_rows(args.test_csv)
    edges = fit_edges(train)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for rows, name in ((train, "adult.train"), (test, "adult.test")):
        with open(out / name, "w") as fh:
            for row in rows:
                fh.write(encode(row, edges) + "\n")
        print(f"{name}: {len(rows)} instances")


if __name__ == "__main__":
    main()
