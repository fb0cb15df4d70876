//! Python bindings for the layerdoc page synthesizer.

use std::path::PathBuf;
use std::sync::Arc;

use image::RgbImage;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};
use serde::Serialize;

use layerdoc::annotation::{AnnotationDoc, ImageAnnotation, DEFAULT_SIMPLIFY_EPS};
use layerdoc::pipeline::{self, SynthOptions};
use layerdoc::samples::{self, SampleCounts};
use layerdoc::SynthConfig;

create_exception!(layerdoc_py, LayerdocError, PyException, "Raised for any layerdoc failure.");

fn to_py_err(e: layerdoc::Error) -> PyErr {
    match e {
        layerdoc::Error::Io { .. } | layerdoc::Error::Load { .. } => PyOSError::new_err(e.to_string()),
        _ => LayerdocError::new_err(e.to_string()),
    }
}

/// Converts a serializable value into plain Python objects through JSON.
fn to_python<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| LayerdocError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn rgb_image(width: u32, height: u32, data: &[u8]) -> PyResult<RgbImage> {
    RgbImage::from_raw(width, height, data.to_vec()).ok_or_else(|| {
        LayerdocError::new_err(format!(
            "expected {} bytes for a {width}x{height} RGB raster, got {}",
            width as usize * height as usize * 3,
            data.len()
        ))
    })
}

/// 256-bin normalized gray-level histogram.
#[pyclass(frozen, name = "Histogram", module = "layerdoc_py")]
struct PyHistogram(layerdoc::GrayHistogram);

#[pymethods]
impl PyHistogram {
    #[new]
    fn new(bins: Vec<f64>) -> PyResult<Self> {
        let bins: [f64; 256] = bins
            .try_into()
            .map_err(|v: Vec<f64>| LayerdocError::new_err(format!("expected 256 bins, got {}", v.len())))?;
        layerdoc::GrayHistogram::from_bins(bins).map(Self).map_err(to_py_err)
    }

    /// Histogram of an RGB raster given as `width * height * 3` bytes.
    #[staticmethod]
    fn from_rgb(width: u32, height: u32, data: &[u8]) -> PyResult<Self> {
        layerdoc::gray_histogram(&rgb_image(width, height, data)?).map(Self).map_err(to_py_err)
    }

    #[getter]
    fn bins(&self) -> Vec<f64> {
        self.0.bins().to_vec()
    }

    fn similarity(&self, other: &PyHistogram) -> f64 {
        layerdoc::similarity(&self.0, &other.0)
    }
}

#[pyfunction]
fn similarity(a: &PyHistogram, b: &PyHistogram) -> f64 {
    layerdoc::similarity(&a.0, &b.0)
}

/// Synthesis parameters; keyword arguments override the defaults.
#[pyclass(frozen, name = "Config", module = "layerdoc_py")]
struct PyConfig(SynthConfig);

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (**overrides))]
    fn new(py: Python<'_>, overrides: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let config = match overrides {
            None => SynthConfig::default(),
            Some(kwargs) => {
                let text: String = py.import("json")?.call_method1("dumps", (kwargs,))?.extract()?;
                serde_json::from_str(&text).map_err(|e| LayerdocError::new_err(format!("invalid config: {e}")))?
            }
        };
        config.validate().map_err(to_py_err)?;
        Ok(Self(config))
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        SynthConfig::from_toml(text).map(Self).map_err(to_py_err)
    }

    fn to_toml(&self) -> PyResult<String> {
        self.0.to_toml().map_err(to_py_err)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_python(py, &self.0)
    }
}

/// Asset catalog of text blocks, figures and tables.
#[pyclass(frozen, name = "Catalog", module = "layerdoc_py")]
struct PyCatalog(Arc<layerdoc::Catalog>);

#[pymethods]
impl PyCatalog {
    /// Loads a TOML catalog manifest; asset paths are relative to its directory.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        layerdoc::Catalog::load(&path).map(|c| Self(Arc::new(c))).map_err(to_py_err)
    }

    /// Procedurally generated demo catalog.
    #[staticmethod]
    #[pyo3(signature = (seed = 0, text = 12, figures = 12, tables = 6))]
    fn sample(seed: u64, text: usize, figures: usize, tables: usize) -> PyResult<Self> {
        let counts = SampleCounts { text, figures, tables };
        samples::sample_catalog(seed, counts).map(|c| Self(Arc::new(c))).map_err(to_py_err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn ids(&self) -> Vec<String> {
        self.0.assets().iter().map(|a| a.id().to_string()).collect()
    }

    fn count(&self, class_name: &str) -> PyResult<usize> {
        Ok(self.0.count(class_name.parse().map_err(to_py_err)?))
    }

    fn histogram(&self, asset_id: &str) -> PyResult<PyHistogram> {
        self.0
            .get(asset_id)
            .map(|a| PyHistogram(a.gray_hist().clone()))
            .ok_or_else(|| LayerdocError::new_err(format!("unknown asset {asset_id}")))
    }
}

/// Layout plan of one page.
#[pyclass(frozen, name = "PageSpec", module = "layerdoc_py")]
struct PyPageSpec(layerdoc::PageSpec);

#[pymethods]
impl PyPageSpec {
    #[getter]
    fn page_id(&self) -> &str {
        &self.0.page_id
    }

    #[getter]
    fn width(&self) -> u32 {
        self.0.width
    }

    #[getter]
    fn height(&self) -> u32 {
        self.0.height
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    #[getter]
    fn image_count(&self) -> usize {
        self.0.image_count()
    }

    #[getter]
    fn relaxed_count(&self) -> usize {
        self.0.relaxed_count()
    }

    #[getter]
    fn similarity_evaluations(&self) -> u64 {
        self.0.similarity_evaluations
    }

    /// Placements in paint order as dictionaries.
    fn placements<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_python(py, &self.0.placements)
    }
}

#[pyfunction]
#[pyo3(signature = (catalog, page_index, config = None))]
fn plan_page(catalog: &PyCatalog, page_index: u64, config: Option<&PyConfig>) -> PyResult<PyPageSpec> {
    let default = SynthConfig::default();
    let config = config.map_or(&default, |c| &c.0);
    layerdoc::plan_page(&catalog.0, config, page_index)
        .map(PyPageSpec)
        .map_err(to_py_err)
}

/// Per-pixel class codes: 0 background, 1 text, 2 figure, 3 table.
#[pyclass(frozen, name = "Mask", module = "layerdoc_py")]
struct PyMask(layerdoc::ClassMask);

#[pymethods]
impl PyMask {
    #[new]
    fn new(width: u32, height: u32, codes: &[u8]) -> PyResult<Self> {
        layerdoc::ClassMask::from_codes(width, height, codes.to_vec())
            .map(Self)
            .map_err(to_py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        pipeline::read_mask(&path).map(Self).map_err(to_py_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        pipeline::write_mask(&self.0, &path).map_err(to_py_err)
    }

    #[getter]
    fn width(&self) -> u32 {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> u32 {
        self.0.height()
    }

    fn codes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.0.codes())
    }

    fn get(&self, x: u32, y: u32) -> PyResult<&'static str> {
        if x >= self.0.width() || y >= self.0.height() {
            return Err(LayerdocError::new_err(format!("pixel ({x}, {y}) outside the mask")));
        }
        Ok(self.0.get(x, y).name())
    }

    fn class_counts(&self) -> [u64; 4] {
        self.0.class_counts()
    }

    /// Number of 4-connected foreground regions that are not filled rectangles.
    fn non_rectangular_regions(&self) -> usize {
        layerdoc::region_components(&self.0)
            .iter()
            .filter(|r| !r.is_rectangle())
            .count()
    }

    fn __eq__(&self, other: &PyMask) -> bool {
        self.0 == other.0
    }
}

/// Rendered page: RGB raster plus class mask.
#[pyclass(frozen, name = "Page", module = "layerdoc_py")]
struct PyPage {
    raster: RgbImage,
    mask: Py<PyMask>,
}

#[pymethods]
impl PyPage {
    #[getter]
    fn width(&self) -> u32 {
        self.raster.width()
    }

    #[getter]
    fn height(&self) -> u32 {
        self.raster.height()
    }

    /// Raster as `width * height * 3` RGB bytes.
    fn raster<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.raster.as_raw())
    }

    #[getter]
    fn mask(&self, py: Python<'_>) -> Py<PyMask> {
        self.mask.clone_ref(py)
    }

    fn save_raster(&self, path: PathBuf) -> PyResult<()> {
        self.raster
            .save(&path)
            .map_err(|e| PyOSError::new_err(format!("{}: {e}", path.display())))
    }
}

#[pyfunction]
fn render(py: Python<'_>, spec: &PyPageSpec, catalog: &PyCatalog) -> PyResult<PyPage> {
    let page = layerdoc::render(&spec.0, &catalog.0).map_err(to_py_err)?;
    Ok(PyPage {
        raster: page.raster,
        mask: Py::new(py, PyMask(page.mask))?,
    })
}

/// Foreground regions of a mask as polygon dictionaries.
#[pyfunction]
#[pyo3(signature = (mask, simplify_eps = DEFAULT_SIMPLIFY_EPS))]
fn mask_to_polygons<'py>(py: Python<'py>, mask: &PyMask, simplify_eps: f64) -> PyResult<Bound<'py, PyAny>> {
    to_python(py, &layerdoc::mask_to_polygons(&mask.0, simplify_eps).shapes)
}

/// CVAT-for-images annotation document.
#[pyclass(name = "Annotations", module = "layerdoc_py")]
#[derive(Default)]
struct PyAnnotations(AnnotationDoc);

#[pymethods]
impl PyAnnotations {
    #[new]
    fn new() -> Self {
        Self::default()
    }

    #[staticmethod]
    fn from_xml(data: &[u8]) -> PyResult<Self> {
        layerdoc::read_cvat_xml(data)
            .map(|parsed| Self(parsed.doc))
            .map_err(to_py_err)
    }

    fn to_xml<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &layerdoc::write_cvat_xml(&self.0))
    }

    /// Appends a page annotated with the polygons of `mask`; returns its id.
    #[pyo3(signature = (name, mask, simplify_eps = DEFAULT_SIMPLIFY_EPS))]
    fn add_page(&mut self, name: String, mask: &PyMask, simplify_eps: f64) -> PyResult<u32> {
        let id = self.0.images.last().map_or(0, |img| img.id + 1);
        self.0.images.push(ImageAnnotation {
            id,
            name,
            width: mask.0.width(),
            height: mask.0.height(),
            shapes: layerdoc::mask_to_polygons(&mask.0, simplify_eps).shapes,
        });
        Ok(id)
    }

    fn __len__(&self) -> usize {
        self.0.images.len()
    }

    fn names(&self) -> Vec<String> {
        self.0.images.iter().map(|img| img.name.clone()).collect()
    }

    fn rasterize(&self, image_id: u32) -> PyResult<PyMask> {
        layerdoc::rasterize(&self.0, image_id).map(PyMask).map_err(to_py_err)
    }
}

/// 4x4 confusion counts indexed `[truth][prediction]`.
#[pyfunction]
fn confusion(pred: &PyMask, truth: &PyMask) -> PyResult<[[u64; 4]; 4]> {
    layerdoc::confusion(&pred.0, &truth.0).map(|cm| cm.counts).map_err(to_py_err)
}

/// Accuracy and per-class and macro precision, recall and F1.
#[pyfunction]
fn metrics<'py>(py: Python<'py>, pred: &PyMask, truth: &PyMask) -> PyResult<Bound<'py, PyAny>> {
    let m = layerdoc::confusion(&pred.0, &truth.0)
        .and_then(|cm| layerdoc::metrics(&cm))
        .map_err(to_py_err)?;
    to_python(py, &m)
}

/// Generates a dataset directory; returns the manifest and page failures.
#[pyfunction]
#[pyo3(signature = (catalog, out_dir, pages, seed = None, config = None, no_aesthetic = false, workers = None))]
#[allow(clippy::too_many_arguments)]
fn synth<'py>(
    py: Python<'py>,
    catalog: PathBuf,
    out_dir: PathBuf,
    pages: u64,
    seed: Option<u64>,
    config: Option<PathBuf>,
    no_aesthetic: bool,
    workers: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let options = SynthOptions {
        config_path: config,
        catalog_path: catalog,
        out_dir,
        num_pages: pages,
        master_seed: seed,
        no_aesthetic,
        workers,
    };
    let outcome = py.detach(|| pipeline::cmd_synth(&options)).map_err(to_py_err)?;
    let result = PyDict::new(py);
    result.set_item("manifest", to_python(py, &outcome.manifest)?)?;
    result.set_item("failures", to_python(py, &outcome.failures)?)?;
    Ok(result.into_any())
}

/// Scores predicted masks against a mask directory or CVAT XML file.
#[pyfunction]
fn evaluate<'py>(py: Python<'py>, pred_dir: PathBuf, truth: PathBuf, report: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let result = py
        .detach(|| pipeline::cmd_evaluate(&pred_dir, &truth, &report))
        .map_err(to_py_err)?;
    to_python(py, &result)
}

/// Summary statistics of a dataset manifest.
#[pyfunction]
fn inspect(py: Python<'_>, manifest: PathBuf) -> PyResult<Bound<'_, PyAny>> {
    to_python(py, &pipeline::cmd_inspect(&manifest).map_err(to_py_err)?)
}

/// Writes a procedurally generated catalog and returns its manifest path.
#[pyfunction]
#[pyo3(signature = (out_dir, seed = 0, text = 12, figures = 12, tables = 6))]
fn write_sample_catalog(out_dir: PathBuf, seed: u64, text: usize, figures: usize, tables: usize) -> PyResult<PathBuf> {
    let counts = SampleCounts { text, figures, tables };
    samples::write_sample_catalog(&out_dir, seed, counts).map_err(to_py_err)
}

#[pymodule]
fn layerdoc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LayerdocError", m.py().get_type::<LayerdocError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyHistogram>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyCatalog>()?;
    m.add_class::<PyPageSpec>()?;
    m.add_class::<PyMask>()?;
    m.add_class::<PyPage>()?;
    m.add_class::<PyAnnotations>()?;
    m.add_function(wrap_pyfunction!(similarity, m)?)?;
    m.add_function(wrap_pyfunction!(plan_page, m)?)?;
    m.add_function(wrap_pyfunction!(render, m)?)?;
    m.add_function(wrap_pyfunction!(mask_to_polygons, m)?)?;
    m.add_function(wrap_pyfunction!(confusion, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(inspect, m)?)?;
    m.add_function(wrap_pyfunction!(write_sample_catalog, m)?)?;
    Ok(())
}
