#!/usr/bin/env python3
"""Convert a Planetoid pickle bundle (ind.<name>.{x,y,tx,ty,allx,ally,graph,test.index})
into the dataset directory layout read by `gpca`.

Usage: planetoid_to_tsv.py RAW_DIR NAME OUT_DIR

Node order follows the usual Planetoid convention: allx rows first, then the
test rows placed at their test.index positions. Test ids missing from the
bundle become featureless, unlabeled nodes. Rows without a one-hot label are
written as unlabeled. The split is the public one: the first len(y) nodes
train, the next 500 validate, and the test.index nodes test.
"""

import argparse
import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def load(raw: Path, name: str, part: str):
    with open(raw / f"ind.{name}.{part}", "rb") as f:
        return pickle.load(f, encoding="latin1")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("raw_dir", type=Path)
    ap.add_argument("name")
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--val", type=int, default=500)
    args = ap.parse_args()

    x, y, tx, ty, allx, ally, graph = (
        load(args.raw_dir, args.name, p) for p in ("x", "y", "tx", "ty", "allx", "ally", "graph")
    )
    test_idx = [int(l) for l in (args.raw_dir / f"ind.{args.name}.test.index").read_text().split()]
    test_sorted = sorted(test_idx)
    lo, hi = test_sorted[0], test_sorted[-1]

    n_test_range = hi - lo + 1
    tx_full = sp.lil_matrix((n_test_range, tx.shape[1]))
    ty_full = np.zeros((n_test_range, ty.shape[1]))
    tx_full[np.array(test_sorted) - lo, :] = tx
    ty_full[np.array(test_sorted) - lo, :] = ty
    missing = n_test_range - len(test_sorted)

    feats = sp.vstack((allx, tx_full)).tolil()
    labels = np.vstack((ally, ty_full))
    # tx/ty rows arrive in test.index order; move them to their node ids.
    feats[test_idx, :] = feats[test_sorted, :]
    labels[test_idx, :] = labels[test_sorted, :]
    feats = feats.tocsr()
    n, d = feats.shape

    edges = set()
    for u, nbrs in graph.items():
        for v in nbrs:
            if u != v and u < n and v < n:
                edges.add((min(u, v), max(u, v)))

    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "edges.tsv", "w") as f:
        f.write(f"# {args.name}: {len(edges)} undirected edges\n")
        for u, v in sorted(edges):
            f.write(f"{u}\t{v}\n")

    coo = feats.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(out / "features.coo", "w") as f:
        f.write(f"{n}\t{d}\n")
        for k in order:
            f.write(f"{coo.row[k]}\t{coo.col[k]}\t{float(coo.data[k])!r}\n")

    has_label = labels.sum(axis=1) > 0
    label_ids = labels.argmax(axis=1)
    with open(out / "labels.tsv", "w") as f:
        for i in range(n):
            if has_label[i]:
                f.write(f"{i}\t{label_ids[i]}\n")

    n_train = y.shape[0]
    test_set = set(test_idx)
    with open(out / "splits.tsv", "w") as f:
        for i in range(n_train):
            f.write(f"{i}\ttrain\n")
        for i in range(n_train, n_train + args.val):
            f.write(f"{i}\tval\n")
        for i in sorted(test_set):
            if has_label[i]:
                f.write(f"{i}\ttest\n")

    unlabeled = int((~has_label).sum())
    print(
        f"{args.name}: n={n} d={d} edges={len(edges)} classes={labels.shape[1]} "
        f"missing_test_rows={missing} unlabeled={unlabeled}",
        file=sys.stderr,
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
