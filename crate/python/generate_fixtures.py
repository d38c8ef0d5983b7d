#!/usr/bin/env python3
"""Generate the checked-in model/data fixtures under fixtures/.

Two desk-scale binary classification tasks with features in [0, 1]:

  diabetes_like       d=8,  614 train / 154 test, GBDT with 20 trees, depth 5
  breast_cancer_like  d=10, 546 train / 500 test, GBDT with  4 trees, depth 6

For each task this script trains a scikit-learn gradient boosted model,
folds the learning rate into the leaf values, and writes:

  <name>.model.json      native model schema
  <name>.model.xgb.json  the same trees as an XGBoost-style JSON dump
  <name>.test.libsvm     test split, labels in {-1, +1}, 1-based indices

Everything is seeded; rerunning the script reproduces the files (up to
scikit-learn version differences, which is why the outputs are checked in).
"""

import json
import os
import sys

import numpy as np
from sklearn.ensemble import GradientBoostingClassifier

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "fixtures")


def synth_dataset(rng, n, d, noise):
    """Features uniform in [0,1]^d; labels from a high-frequency score.

    The oscillating terms force split thresholds throughout the domain, which
    keeps flip distances small the way they are on the real tabular datasets
    this stands in for.
    """
    x = rng.uniform(0.0, 1.0, size=(n, d))
    score = (
        1.4 * np.sin(9.0 * x[:, 0])
        + 1.2 * np.sin(7.0 * x[:, 1] + 2.0 * x[:, 2])
        - 1.0 * np.cos(8.0 * x[:, 3])
        + 0.9 * np.sin(6.0 * x[:, 4]) * x[:, 5]
        - 0.6 * x[:, 5]
    )
    if d > 6:
        score += 1.1 * np.sin(8.0 * x[:, 6]) * (x[:, 0] > 0.5)
    if d > 7:
        score -= 0.8 * np.cos(7.0 * x[:, 7]) * x[:, 1]
    score -= np.median(score)
    y = (score + rng.normal(0.0, noise, size=n) > 0.0).astype(int)
    return x, y


def export_tree(tree_, lr):
    """Arena of native-schema nodes; parents precede children, root id 0."""
    nodes = []

    def rec(i):
        nid = len(nodes)
        if tree_.children_left[i] == -1:
            nodes.append({"id": nid, "leaf": float(tree_.value[i][0][0] * lr)})
        else:
            nodes.append(None)
            left = rec(tree_.children_left[i])
            right = rec(tree_.children_right[i])
            nodes[nid] = {
                "id": nid,
                "feature": int(tree_.feature[i]),
                "threshold": float(tree_.threshold[i]),
                "left": left,
                "right": right,
            }
        return nid

    rec(0)
    return nodes


def to_xgb_dump(nodes, nid=0, depth=0):
    """Native arena -> nested XGBoost dump node."""
    node = nodes[nid]
    if "leaf" in node:
        return {"nodeid": nid, "leaf": node["leaf"]}
    return {
        "nodeid": nid,
        "depth": depth,
        "split": f"f{node['feature']}",
        "split_condition": node["threshold"],
        "yes": node["left"],
        "no": node["right"],
        "missing": node["left"],
        "children": [
            to_xgb_dump(nodes, node["left"], depth + 1),
            to_xgb_dump(nodes, node["right"], depth + 1),
        ],
    }


def margin(trees, x):
    total = 0.0
    for nodes in trees:
        node = nodes[0]
        while "leaf" not in node:
            node = nodes[node["left"]] if x[node["feature"]] <= node["threshold"] else nodes[node["right"]]
        total += node["leaf"]
    return total


def write_libsvm(path, x, y):
    with open(path, "w") as f:
        for xi, yi in zip(x, y):
            label = 1 if yi == 1 else -1
            feats = " ".join(f"{j + 1}:{float(v)!r}" for j, v in enumerate(xi))
            f.write(f"{label} {feats}\n")


def build(name, seed, n_train, n_test, d, noise, n_trees, depth, lr, min_leaf):
    rng = np.random.default_rng(seed)
    x, y = synth_dataset(rng, n_train + n_test, d, noise)
    x_train, y_train = x[:n_train], y[:n_train]
    x_test, y_test = x[n_train:], y[n_train:]

    clf = GradientBoostingClassifier(
        n_estimators=n_trees,
        max_depth=depth,
        learning_rate=lr,
        min_samples_leaf=min_leaf,
        init="zero",
        random_state=seed,
    )
    clf.fit(x_train, y_train)
    acc = clf.score(x_test, y_test)

    trees = [export_tree(est[0].tree_, lr) for est in clf.estimators_]
    model = {
        "dim": d,
        "num_classes": 2,
        "base_margin": 0.0,
        "trees": [{"class": 0, "root": 0, "nodes": nodes} for nodes in trees],
    }

    # The exported trees must reproduce sklearn's decision function exactly.
    raw = clf.decision_function(x_test)
    ours = np.array([margin(trees, xi) for xi in x_test])
    assert np.max(np.abs(raw - ours)) < 1e-9, "export does not match sklearn"

    # The XGBoost dump differs only at exact threshold hits; make sure the
    # test split has none so both files encode the same function on it.
    thresholds = {}
    for nodes in trees:
        for node in nodes:
            if "leaf" not in node:
                thresholds.setdefault(node["feature"], set()).add(node["threshold"])
    for xi in x_test:
        for feat, ts in thresholds.items():
            assert xi[feat] not in ts, "test point sits exactly on a threshold"

    os.makedirs(OUT_DIR, exist_ok=True)
    with open(os.path.join(OUT_DIR, f"{name}.model.json"), "w") as f:
        json.dump(model, f)
        f.write("\n")
    with open(os.path.join(OUT_DIR, f"{name}.model.xgb.json"), "w") as f:
        json.dump([to_xgb_dump(nodes) for nodes in trees], f)
        f.write("\n")
    write_libsvm(os.path.join(OUT_DIR, f"{name}.test.libsvm"), x_test, y_test)

    leaves = sum(sum(1 for node in nodes if "leaf" in node) for nodes in trees)
    print(
        f"{name}: d={d} trees={n_trees} depth<={depth} leaves={leaves} "
        f"test_acc={acc:.3f} pos_rate={y_test.mean():.3f}"
    )


def main():
    build(
        "diabetes_like",
        seed=20190520,
        n_train=614,
        n_test=154,
        d=8,
        noise=0.55,
        n_trees=20,
        depth=5,
        lr=0.3,
        min_leaf=20,
    )
    build(
        "breast_cancer_like",
        seed=20190521,
        n_train=546,
        n_test=500,
        d=10,
        noise=0.35,
        n_trees=4,
        depth=6,
        lr=0.5,
        min_leaf=5,
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
