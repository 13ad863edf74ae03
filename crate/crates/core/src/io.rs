//! Shared number formatting and CSV helpers.

use std::io::Write;

use crate::error::Result;

/// 17 significant digits: enough for a lossless `f64` round trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a CSV table with a header row and numeric records.
pub fn write_table<W: Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header)?;
    for row in rows {
        wr.write_record(row.iter().map(|x| fmt_f64(*x)))?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn seventeen_digits_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            let s = fmt_f64(x);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
