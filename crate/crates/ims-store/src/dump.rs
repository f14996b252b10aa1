//! Store dump: one `table|pk|k=v,...` line per row, tables in name order and
//! rows in primary-key order.

use std::fmt;

use bdi_kernel::codec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DumpRow {
    pub table: String,
    pub pk: String,
    pub fields: Vec<(String, String)>,
}

impl DumpRow {
    pub fn new(table: &str, pk: impl ToString, fields: Vec<(&str, String)>) -> Self {
        DumpRow {
            table: table.to_string(),
            pk: pk.to_string(),
            fields: fields
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        }
    }

    pub fn get(&self, field: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k == field)
            .map(|(_, v)| v.as_str())
    }

    pub fn int(&self, field: &str) -> Option<i64> {
        self.get(field)?.parse().ok()
    }

    pub fn to_line(&self) -> String {
        format!(
            "{}|{}|{}",
            self.table,
            codec::escape(&self.pk),
            codec::encode_pairs(self.fields.iter().map(|(k, v)| (k.as_str(), v.as_str())))
        )
    }

    pub fn parse_line(line: &str) -> Option<DumpRow> {
        let mut parts = line.splitn(3, '|');
        let table = parts.next()?.to_string();
        let pk = codec::unescape(parts.next()?)?;
        let fields = codec::decode_pairs(parts.next()?)?;
        Some(DumpRow { table, pk, fields })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StoreDump {
    pub rows: Vec<DumpRow>,
}

impl StoreDump {
    pub fn rows<'a>(&'a self, table: &'a str) -> impl Iterator<Item = &'a DumpRow> + 'a {
        self.rows.iter().filter(move |r| r.table == table)
    }

    pub fn parse(text: &str) -> Option<StoreDump> {
        let rows = text
            .lines()
            .filter(|l| !l.is_empty())
            .map(DumpRow::parse_line)
            .collect::<Option<Vec<_>>>()?;
        Some(StoreDump { rows })
    }

    /// `-` rows only in `expected`, `+` rows only in `self`.
    pub fn diff(&self, expected: &StoreDump) -> String {
        let mut out = String::new();
        for r in &expected.rows {
            if !self.rows.contains(r) {
                out.push_str(&format!("- {}\n", r.to_line()));
            }
        }
        for r in &self.rows {
            if !expected.rows.contains(r) {
                out.push_str(&format!("+ {}\n", r.to_line()));
            }
        }
        out
    }
}

impl fmt::Display for StoreDump {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            writeln!(f, "{}", row.to_line())?;
        }
        Ok(())
    }
}
