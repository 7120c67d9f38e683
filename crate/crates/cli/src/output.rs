//! Field dumps and file helpers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use ddm_core::analysis::fmt_f64;
use ddm_core::DiscreteField;

/// CSV with one row per cell center, x fastest.
pub fn field_csv(field: &DiscreteField) -> String {
    let g = field.grid();
    let mut s = String::with_capacity(g.len() * 48);
    s.push_str(if g.dim() == 1 { "x,value\n" } else { "x,y,value\n" });
    for (k, p) in g.centers().enumerate() {
        let v = fmt_f64(field.values()[k]);
        let _ = if g.dim() == 1 {
            writeln!(s, "{},{v}", fmt_f64(p[0]))
        } else {
            writeln!(s, "{},{},{v}", fmt_f64(p[0]), fmt_f64(p[1]))
        };
    }
    s
}

/// Grid metadata written beside a field dump.
pub fn field_metadata(field: &DiscreteField, file: &str) -> serde_json::Value {
    let g = field.grid();
    serde_json::json!({
        "file": file,
        "columns": if g.dim() == 1 { vec!["x", "value"] } else { vec!["x", "y", "value"] },
        "layout": "cell centers, row-major, x fastest",
        "dim": g.dim(),
        "cells": g.cells_per_axis(),
        "lo": &g.lo()[..g.dim()],
        "hi": &g.hi()[..g.dim()],
        "h": (0..g.dim()).map(|a| g.h(a)).collect::<Vec<_>>(),
    })
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(OutDir {
            root: root.to_path_buf(),
        })
    }

    pub fn write(&self, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    pub fn write_json(&self, name: &str, value: &serde_json::Value) -> anyhow::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    /// Writes `<stem>.csv` and its `<stem>.json` sidecar, merging `extra` into the metadata.
    pub fn write_field(&self, stem: &str, field: &DiscreteField, extra: serde_json::Value) -> anyhow::Result<()> {
        let csv = format!("{stem}.csv");
        let mut meta = field_metadata(field, &csv);
        if let (Some(m), serde_json::Value::Object(e)) = (meta.as_object_mut(), extra) {
            m.extend(e);
        }
        self.write(&csv, &field_csv(field))?;
        self.write_json(&format!("{stem}.json"), &meta)?;
        Ok(())
    }
}
