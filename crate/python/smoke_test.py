"""Smoke test for the dcpl Python module: run with `python python/smoke_test.py`."""

import pathlib
import tempfile

import dcpl

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURE = ROOT / "fixtures" / "synthetic20"


def main():
    net, log, truth = dcpl.synthetic(n_users=20, horizon=40.0, seed=7)
    assert net.n_users == 20 and len(log) > 0
    assert truth.kernel("like")[0][0] == 0.0

    model = dcpl.HawkesModel.fit(log, net, 0.0, 40.0, rank=2)
    assert len(model.base_rates("true_tweet")) == 20

    a = model.simulate(net, 0.0, 5.0, seed=3)
    b = model.simulate(net, 0.0, 5.0, seed=3)
    assert a.events() == b.events()

    boosted = model.simulate(net, 0.0, 5.0, seed=3, plans=[([0.0] * 20, [0.0] * 20)] * 4 + [([5.0] * 20, [0.0] * 20)])
    assert len(boosted) > len(a)

    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        model.save(tmp / "model.json")
        again = dcpl.HawkesModel.load(tmp / "model.json")
        assert again.base_rates("like") == model.base_rates("like")
        log.save(tmp / "events.jsonl")
        net.save(tmp / "network.csv")
        assert len(dcpl.EventLog.load(tmp / "events.jsonl")) == len(log)
        assert sorted(dcpl.Network.load(tmp / "network.csv", 20).edges()) == sorted(net.edges())

        perf = dcpl.performance(log, net, 0.0, 40.0)
        assert perf == perf

        assert dcpl.ari([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
        assert abs(dcpl.nmi([0, 0, 1, 1], [5, 5, 2, 2]) - 1.0) < 1e-12

        rows = [[0.0, 0.0], [0.1, 0.0], [10.0, 10.0], [10.1, 10.0]]
        labels, wcssd = dcpl.kmeans(rows, 2, seed=1)
        assert labels[0] == labels[1] != labels[2] == labels[3] and wcssd < 0.1
        chosen, scores = dcpl.select_num_clusters(rows, [1, 2, 3], seed=1)
        assert len(scores) == 3

        with_p, without_p = dcpl.train_run(FIXTURE / "config.json", "RND", 1, tmp / "run")
        assert (tmp / "run").is_dir()
        print(f"train_run RND: performance {with_p:.3f} with, {without_p:.3f} without")

    try:
        dcpl.ari([0, 1], [0])
    except ValueError:
        pass
    else:
        raise AssertionError("length mismatch must raise")

    print("smoke test passed")


if __name__ == "__main__":
    main()
