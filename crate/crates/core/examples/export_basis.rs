//! Writes the discrete Chebyshev basis as CSV (one row per basis vector)
//! for cross-checking against external implementations:
//!
//! ```text
//! cargo run -p qdl-core --example export_basis -- 64 > basis64.csv
//! ```

fn main() {
    let dim: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(16);
    let basis = qdl_core::Basis::new(dim).expect("valid dimension");
    let mut out = Vec::new();
    basis.write_csv(&mut out).expect("csv export");
    print!("{}", String::from_utf8(out).unwrap());
}
