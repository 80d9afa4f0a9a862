use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use qikmpp::data::{load_csv, load_raw};
use qikmpp::DataSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    /// Little-endian f64, row-major; needs `--dims`.
    Raw,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Input file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Columns per row for raw input.
    #[arg(long)]
    pub dims: Option<usize>,
    /// CSV field delimiter.
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
}

impl InputArgs {
    pub fn load(&self) -> Result<DataSet> {
        load(&self.input, self.format, self.dims, self.delimiter)
    }

    pub fn id(&self) -> String {
        self.input
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.input.display().to_string())
    }
}

pub fn load(path: &Path, format: Format, dims: Option<usize>, delimiter: char) -> Result<DataSet> {
    match format {
        Format::Csv => {
            if !delimiter.is_ascii() {
                return Err(crate::usage("delimiter must be a single ASCII character"));
            }
            Ok(load_csv(path, delimiter as u8)?)
        }
        Format::Raw => {
            let d = dims.ok_or_else(|| crate::usage("--dims is required for raw input"))?;
            if d == 0 {
                return Err(crate::usage("--dims must be >= 1"));
            }
            let bytes = std::fs::metadata(path)
                .with_context(|| format!("reading {}", path.display()))?
                .len() as usize;
            let row = 8 * d;
            if !bytes.is_multiple_of(row) {
                anyhow::bail!("{} has {bytes} bytes, not a multiple of {row}", path.display());
            }
            Ok(load_raw(path, bytes / row, d)?)
        }
    }
}
