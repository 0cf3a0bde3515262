"""Exercise the lttk extension end to end: synth, I/O, metrics, reward model, sampling."""

import math
import os
import sys
import tempfile

import lttk


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        sys.exit(1)


def main():
    print("lttk", lttk.__version__)

    data = lttk.synthesize(seed=11, problems=20, samples_per_problem=10, steps=6, tokens=4, dim=8)
    check(len(data) == 200 and data.validate() == [], "synthesize 200 valid trajectories")

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "s.lttk")
        data.write(path)
        back = lttk.TrajectorySet.read(path)
        check(len(back) == len(data) and back[3].steps() == data[3].steps(), "container roundtrip")
        try:
            lttk.TrajectorySet.read(os.path.join(tmp, "missing.lttk"))
            check(False, "missing file raises")
        except OSError:
            check(True, "missing file raises OSError")

    eye = [[1.0 if i == j else 0.0 for j in range(4)] for i in range(4)]
    check(abs(lttk.effective_rank(eye) - 4.0) < 1e-9, "effective rank of identity")
    check(abs(lttk.entropy(eye) - math.log(4)) < 1e-9, "entropy of identity")
    check(abs(lttk.anisotropy([[1.0, 0.0], [2.0, 0.0]]) - 1.0) < 1e-9, "rank-one anisotropy")

    rows = data[0].metrics()
    check(len(rows) == 6 and all(len(r) == 4 for r in rows), "per-step metrics")

    policy = lttk.closed_form_policy([0.0, 1.0], 1.0)
    check(abs(policy[1] - math.e / (1 + math.e)) < 1e-12, "closed-form policy")
    eq = lttk.sampler_equivalence([0.1, 0.5, 0.9], 0.25, 50000, 3)
    check(eq["total_variation"] < 0.01, "sampler matches closed form")
    picks, draws = lttk.lto_sample([0.2, 0.9, 0.4], beta=0.05, required=2, seed=1)
    check(len(picks) == 2 and draws >= 2, "lto_sample")
    check(lttk.majority_vote([3, 1, 3]) == 3, "majority vote")
    check(lttk.weighted_majority_vote([3, 1, 3], [0.1, 0.9, 0.1]) == 1, "weighted vote")
    bound = lttk.verify_performance_bound([0.1, 0.8], [0.15, 0.7], 0.5)
    check(bound["holds"], "reward-error bound holds")
    check(lttk.roc_auc([0.1, 0.9, 0.4], [False, True, True]) == 1.0, "roc auc")

    model = lttk.RewardModel(8, model_dim=16, head_hidden=16, seed=2)
    err, _, _ = model.gradient_check(lttk.TrajectorySet([data[0], data[1]]))
    check(err < 1e-4, "gradient check")
    history = model.train(data, epochs=3, seed=4)
    check(len(history) == 3, "training history")
    report = model.evaluate(data)
    check(report["count"] == 200 and 0.0 <= report["accuracy"] <= 1.0, "evaluate")
    scores = model.score(data)
    check(all(0.0 < s < 1.0 for s in scores), "scores are probabilities")
    sel = lttk.compare_selectors(data, scores, budget=10, seed=5)
    check(sel["problems"] == 20, "compare selectors")

    try:
        lttk.closed_form_policy([0.0], -1.0)
        check(False, "negative beta raises")
    except ValueError:
        check(True, "negative beta raises ValueError")

    print("all smoke checks passed")


if __name__ == "__main__":
    main()
