//! Line-delimited JSON helpers.

use std::io::{self, BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

pub fn write<T: Serialize>(items: impl IntoIterator<Item = T>, mut out: impl Write) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, &item)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_string<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut buf = Vec::new();
    write(items, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Reads one value per non-blank line; errors carry the 1-based line number.
pub fn read<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>, (usize, String)> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| (i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| (i + 1, e.to_string()))?);
    }
    Ok(out)
}
