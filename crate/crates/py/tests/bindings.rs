use std::ffi::CString;

use pyo3::prelude::*;

use twnet::twnet;

fn with_module(code: &str) {
    pyo3::append_to_inittab!(twnet);
    Python::initialize();
    Python::attach(|py| {
        let code = CString::new(code).unwrap();
        if let Err(e) = py.run(&code, None, None) {
            e.print(py);
            panic!("python raised");
        }
    });
}

#[test]
fn python_round_trip() {
    with_module(
        r#"
import twnet
g = twnet.Graph(4, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0)])
assert g.vertex_count == 4
assert twnet.Graph.from_edge_list(g.to_edge_list()).edges == g.edges
assert g.distances(0) == [0.0, 1.0, 3.0, 4.0]
td = twnet.TreeDecomposition.compute(g)
assert td.width == 1
assert twnet.TreeDecomposition.from_pace(td.to_pace(), g).bags == td.bags

p = twnet.Pipeline(g, td, 1.0)
assert p.tau >= 1
assert set(p.net_vertices()) <= set(range(4))
part = p.sample(3)
assert sorted(v for c in part["clusters"] for v in c["members"]) == [0, 1, 2, 3]
assert p.sample(3) == part
assert p.sparse_cover()["guarantees"]["padding_ratio"] == 6.0
assert p.partition_cover()["guarantees"]["padding_ratio"] == 12.0
est = p.padding_estimate([0.01], trials=200)
assert est[0]["trials"] == 200
report = p.verify(trials=300, samples=3)
assert report["passed"], report

assert "grid-3x3" in twnet.fixture_names()
g, td, delta = twnet.fixture("grid-3x3")
assert twnet.Pipeline(g, td, delta).verify(trials=300, samples=3)["passed"]

for bad in [lambda: twnet.Graph(3, [(0, 1, 1.0)]), lambda: twnet.Graph.from_edge_list("p ge 2 1\ne 1 5 1\n"),
            lambda: twnet.Pipeline(g, td, -1.0), lambda: twnet.fixture("nope")]:
    try:
        bad()
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")
"#,
    );
}
