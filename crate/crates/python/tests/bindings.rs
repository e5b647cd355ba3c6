use std::ffi::CString;
use std::sync::Once;

use pyo3::prelude::*;

static INIT: Once = Once::new();

fn run(code: &str) {
    INIT.call_once(diffnet_py::register);
    Python::attach(|py| {
        let code = CString::new(code).unwrap();
        if let Err(e) = py.run(&code, None, None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn scalar_theory_through_python() {
    run(r#"
import diffnet_py as d
net = d.Network.from_json('{"n_nodes": 1, "m_dim": 1, "nodes": [{"mu": 0.01, "sigma_v2": 1.0, "r_u": [[1.0, 0.0]]}], "weights": {"mode": "stationary", "w0": [[1.0, 0.0]]}}')
r = d.analyze(net)
assert abs(r["msd"] - 0.01 / 1.99) < 1e-12, r
assert r["mean_stable"]
"#);
}

#[test]
fn rules_and_simulation() {
    run(r#"
import diffnet_py as d
net = d.Network.random(3, 6, 2)
assert (net.n_nodes, net.m_dim) == (6, 2)
a = d.combination_matrix(net, "relative_variance")
for k in range(6):
    assert abs(sum(a[l][k] for l in range(6)) - 1.0) < 1e-12
again = d.Network.from_json(net.to_json())
assert again.edges() == net.edges()
out = d.simulate(net, a2="metropolis", runs=3, iterations=50, seed=2)
assert len(out["msd"]) == 50 and out["runs"] == 3
assert out == d.simulate(net, a2="metropolis", runs=3, iterations=50, seed=2)
"#);
}

#[test]
fn errors_map_to_python_exceptions() {
    run(r#"
import diffnet_py as d
net = d.Network.random(1, 4, 1)
try:
    d.combination_matrix(net, "bogus")
    raise AssertionError("expected ValueError")
except ValueError:
    pass
try:
    d.analyze(net, a2="adaptive")
    raise AssertionError("expected ValueError")
except ValueError:
    pass
unstable = d.Network.from_json('{"n_nodes": 1, "m_dim": 1, "nodes": [{"mu": 3.0, "sigma_v2": 1.0, "r_u": [[1.0, 0.0]]}], "weights": {"mode": "stationary", "w0": [[1.0, 0.0]]}}')
assert not d.analyze(unstable)["mean_stable"]
"#);
}
