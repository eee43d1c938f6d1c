use pyo3::prelude::*;
use pyo3::py_run;

fn with_module(code: &str) {
    Python::initialize();
    Python::attach(|py| {
        let m = pyo3::wrap_pymodule!(infodyn_py::infodyn_py)(py);
        py_run!(py, m, code);
    });
}

#[test]
fn grid_and_system() {
    with_module(
        r#"
g = m.Grid([20.0], [256])
assert g.shape == [256] and g.dims == 1
assert abs(g.nodes(0)[0] + 10.0 - 20.0 / 512) < 1e-12
s = m.System.line("harmonic", omega=2.0)
assert abs(s.potential([1.0]) - 2.0) < 1e-12
try:
    m.Grid([1.0], [16], boundary="mirror")
    raise AssertionError("accepted an unknown boundary")
except ValueError:
    pass
"#,
    );
}

#[test]
fn wave_function_round_trip() {
    with_module(
        r#"
g = m.Grid([8.0], [256])
psi = m.WaveFunction.analytic(g, "sho-ground")
f = psi.decompose()
assert f.node_count == 0
assert abs(f.total_probability() - 1.0) < 1e-10
assert len(f.grad_ln_omega(0)) == 256
"#,
    );
}

#[test]
fn statistics_helpers() {
    with_module(
        r#"
assert abs(m.ks_band(10000) - 1.3581e-2) < 1e-9
assert abs(m.ks_band(10000, level=0.99) - 1.6276e-2) < 1e-9
xs = m.sample_deviations(-2.0, 1000, 3)
assert all(x <= 0 for x in xs)
assert xs == m.sample_deviations(-2.0, 1000, 3)
assert len(m.bundled_scenarios()) >= 8
"#,
    );
}
