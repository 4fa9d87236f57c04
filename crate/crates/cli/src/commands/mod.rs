pub mod clt;
pub mod estimate;
pub mod qa;
pub mod rates;
pub mod simulate;
pub mod variance;

/// Shortest round-trip decimal for CSV cells; empty for missing values.
pub fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
