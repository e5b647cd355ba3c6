"""Smoke test for the compiled extension: build it with
`maturin develop` (or `pip install --no-build-isolation crates/python`) first."""

import json
import tempfile
from pathlib import Path

import diffnet_py as d


def main():
    net = d.Network.random(seed=5, n_nodes=8, m_dim=2)
    print(net, "edges:", len(net.edges()))

    for rule in ["uniform", "metropolis", "relative_variance"]:
        report = d.analyze(net, a2=rule)
        print(f"{rule:>18}: msd {report['msd_db']:.2f} dB, emse {report['emse_db']:.2f} dB")

    sim = d.simulate(net, a2="relative_variance", runs=10, iterations=500, seed=1)
    tail = sim["msd"][-100:]
    print("simulated msd (last 100 iterations, linear):", sum(tail) / len(tail))

    with tempfile.TemporaryDirectory() as tmp:
        cfg, _ = d.gen_scenario("noisy_exchange_atc", seed=1, out=tmp)
        assert json.loads(Path(cfg).read_text())["runs"] == 50
        assert d.run_cli(["theory", "--config", str(cfg)]) == 0

    try:
        d.analyze(net, a2="adaptive")
    except ValueError as e:
        print("expected error:", e)


if __name__ == "__main__":
    main()
