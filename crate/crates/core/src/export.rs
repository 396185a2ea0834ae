//! CSV output for plot-ready tables.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// Writes `rows` as CSV with a header taken from the field names.
pub fn write_csv<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        eta: f64,
        count: usize,
    }

    #[test]
    fn header_and_rows() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[Row { eta: 0.5, count: 3 }, Row { eta: 0.25, count: 1 }]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "eta,count\n0.5,3\n0.25,1\n");
    }
}
