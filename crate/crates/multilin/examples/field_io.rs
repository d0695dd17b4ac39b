//! Round-trips a field through the binary field format and prints its CSV form.

use multilin::grid::{sample_real, Grid};
use multilin::io::{decode_field, encode_field, field_csv, Precision};

fn main() -> multilin::Result<()> {
    let g = Grid::new(1, 8, 4.0)?;
    let f = sample_real(g, |x| x[0] * x[0])?;
    for precision in [Precision::Complex64, Precision::Complex128] {
        let bytes = encode_field(&f, precision)?;
        let back = decode_field(&bytes)?;
        let err = f.values().iter().zip(back.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        println!("{precision:?}: {} bytes, max error {err:.3e}", bytes.len());
    }
    print!("{}", field_csv(&f));
    Ok(())
}
