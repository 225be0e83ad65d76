//! Attack-cost estimates for the built-in presets, both error models, as CSV.
//!
//! cargo run --release --example estimate_table

use sis_wagner::estimator::{dilithium_presets, estimate, shine_preset, to_csv, CostQuery, Variant};

fn main() -> sis_wagner::Result<()> {
    let mut queries = dilithium_presets();
    queries.push(shine_preset());
    let mut reports = Vec::new();
    for q in &queries {
        for variant in [Variant::Quantization, Variant::Rounding] {
            reports.push(estimate(&CostQuery { variant, ..q.clone() })?);
        }
    }
    print!("{}", to_csv(&reports));
    Ok(())
}
