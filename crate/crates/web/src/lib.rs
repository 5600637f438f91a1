//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes a JSON object of parameters and returns a JSON string.
//! The same functions are available natively through [`demo`].

use wasm_bindgen::prelude::*;

pub mod demo;

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// Runs disKPCA and both uniform baselines on a generated dataset.
#[wasm_bindgen]
pub fn compare_methods(params: &str) -> Result<String, JsValue> {
    js(demo::compare_methods(params))
}

/// Leverage scores and the sampled representatives for 2-D data.
#[wasm_bindgen]
pub fn leverage_map(params: &str) -> Result<String, JsValue> {
    js(demo::leverage_map(params))
}

/// Relative Gram-matrix error of the kernel sketch at several sizes.
#[wasm_bindgen]
pub fn sketch_accuracy(params: &str) -> Result<String, JsValue> {
    js(demo::sketch_accuracy(params))
}
