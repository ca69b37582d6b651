use pyo3::prelude::*;

#[pymodule]
fn countcurv_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
