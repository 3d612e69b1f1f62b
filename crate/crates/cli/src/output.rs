use std::fs;
use std::path::Path;

use exboot_core::lab::ExperimentReport;
use exboot_core::VERSION;
use serde::Serialize;

use crate::failure::Failure;

/// `(key, value)` header pairs naming the tool version and the resolved configuration.
pub fn provenance(config: &impl Serialize) -> Vec<(String, String)> {
    vec![
        ("tool_version".into(), VERSION.into()),
        ("config".into(), serde_json::to_string(config).expect("configurations serialize to JSON")),
    ]
}

/// Provenance as `# key = value` comment lines for CSV outputs.
pub fn comment_header(config: &impl Serialize) -> String {
    provenance(config).into_iter().map(|(k, v)| format!("# {k} = {v}\n")).collect()
}

pub fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<(), Failure> {
    fs::create_dir_all(path).map_err(|e| Failure::io(path, e))
}

/// File-name-safe version of a statistic name.
pub fn slug(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        if c.is_ascii_alphanumeric() || c == '.' {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_end_matches('_').to_string()
}

/// `<kind>.json` plus one `<kind>_<statistic>.csv` per statistic.
pub fn write_report(dir: &Path, kind: &str, report: &ExperimentReport) -> Result<(), Failure> {
    create_dir(dir)?;
    write(&dir.join(format!("{kind}.json")), &(report.to_json() + "\n"))?;
    let header = comment_header(&report.config);
    for (stat, table) in report.csv_tables() {
        write(&dir.join(format!("{kind}_{}.csv", slug(&stat))), &format!("{header}{table}"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(slug("coverage_t_type"), "coverage_t_type");
        assert_eq!(slug("fifth_moment[jackknife(ratio=0.5)]"), "fifth_moment_jackknife_ratio_0.5");
        assert_eq!(slug("norm_lower_margin[r=2.5]"), "norm_lower_margin_r_2.5");
    }
}
