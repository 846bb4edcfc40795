use crate::config::RunConfig;

/// A CSV table preceded by `#`-prefixed metadata lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new(cfg: &RunConfig, header: &[&str]) -> Self {
        let metadata = vec![
            ("version".to_string(), format!("bsde-cli {}", env!("CARGO_PKG_VERSION"))),
            ("command".to_string(), cfg.command.clone()),
            ("problem".to_string(), cfg.problem.clone()),
            ("seed".to_string(), cfg.seed.to_string()),
            ("config-sha256".to_string(), cfg.hash()),
        ];
        Self {
            metadata,
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// UTF-8 bytes with `\n` line endings.
    pub fn to_csv(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for (key, value) in &self.metadata {
            out.extend_from_slice(format!("# {key}: {value}\n").as_bytes());
        }
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        writer.write_record(&self.header).expect("writing to memory");
        for row in &self.rows {
            writer.write_record(row).expect("writing to memory");
        }
        writer.into_inner().expect("writing to memory")
    }

    /// Index of a header column.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Shortest decimal that round-trips, switching to exponent notation for
/// very small or large magnitudes. Independent of locale.
pub fn float(v: f64) -> String {
    format!("{v:?}")
}

pub fn optional(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), float)
}
