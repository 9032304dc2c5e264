use pyo3::prelude::*;

#[pymodule]
fn vnfplace_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
