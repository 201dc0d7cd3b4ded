//! Serialization: run configs, result DTOs, CSV tables.
//!
//! Everything written to disk is a pure function of config and seed, so
//! repeated runs produce byte-identical files.  Configs are strict: unknown
//! fields are rejected rather than silently ignored.

use std::fs;
use std::path::Path;


use psd_core::measure::PartitionCertificate;
use psd_core::proximity::{WMethod, WReport};
use psd_core::state::State;
use psd_core::tree::SpatialTree;
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------- configs

/// Top-level run configuration, dispatched on `kind`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioConfig {
    Gaussian(GaussianConfig),
    Scattering(ScatteringConfig),
    CustomTree(CustomTreeConfig),
    Verify(VerifyConfig),
}

impl ScenarioConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioConfig::Gaussian(_) => "gaussian",
            ScenarioConfig::Scattering(_) => "scattering",
            ScenarioConfig::CustomTree(_) => "custom-tree",
            ScenarioConfig::Verify(_) => "verify",
        }
    }
}

/// Symmetric two-packet superposition watched until it splits.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GaussianConfig {
    /// packet momentum `±p0`
    pub momentum: f64,
    /// momentum spread `σp`; position spread is `ħ/σp`
    pub momentum_spread: f64,
    pub mass: f64,
    pub grid_n: usize,
    /// box length in units of the position spread
    pub box_sigmas: f64,
    pub t_max: f64,
    /// number of sample times on `[0, t_max]`
    pub samples: usize,
    /// overlap decay level declaring the split effective
    pub branch_threshold: f64,
}

impl Default for GaussianConfig {
    fn default() -> Self {
        Self {
            momentum: 4.0,
            momentum_spread: 1.0,
            mass: 1.0,
            grid_n: 4096,
            box_sigmas: 256.0,
            t_max: 10.0,
            samples: 51,
            branch_threshold: 1e-3,
        }
    }
}

/// Free flight on a periodic box.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FreeLaneConfig {
    pub momentum: f64,
    pub momentum_spread: f64,
    pub mass: f64,
    pub grid_n: usize,
    pub length: f64,
    pub t_max: f64,
    pub samples: usize,
}

impl Default for FreeLaneConfig {
    fn default() -> Self {
        Self {
            momentum: 3.0,
            momentum_spread: 1.0,
            mass: 1.0,
            grid_n: 1024,
            length: 128.0,
            t_max: 8.0,
            samples: 33,
        }
    }
}

/// Attractive `sech²` well with one bound state.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct WellLaneConfig {
    pub grid_n: usize,
    pub length: f64,
    pub mass: f64,
    pub well_width: f64,
    /// packets start at `∓offset` moving inward with `±momentum`
    pub packet_offset: f64,
    pub packet_momentum: f64,
    pub packet_spread: f64,
    /// bound-state admixture coefficient
    pub bound_amplitude: f64,
    pub t_max: f64,
    pub samples: usize,
}

impl Default for WellLaneConfig {
    fn default() -> Self {
        Self {
            grid_n: 512,
            length: 80.0,
            mass: 1.0,
            well_width: 1.0,
            packet_offset: 12.0,
            packet_momentum: 3.0,
            packet_spread: 0.4,
            bound_amplitude: 0.4,
            t_max: 10.0,
            samples: 21,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ScatteringConfig {
    pub free: FreeLaneConfig,
    pub well: WellLaneConfig,
}

impl Default for ScatteringConfig {
    fn default() -> Self {
        Self { free: FreeLaneConfig::default(), well: WellLaneConfig::default() }
    }
}

/// One Gaussian packet in a custom superposition.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub center: f64,
    pub momentum: f64,
    /// momentum spread
    pub spread: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_amplitude() -> f64 {
    1.0
}

/// User-specified packet superposition turned into a branching history.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CustomTreeConfig {
    pub packets: Vec<PacketSpec>,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "default_tree_grid_n")]
    pub grid_n: usize,
    #[serde(default = "default_tree_length")]
    pub length: f64,
    #[serde(default = "default_tree_t_max")]
    pub t_max: f64,
    #[serde(default = "default_tree_samples")]
    pub samples: usize,
    #[serde(default = "default_branch_threshold")]
    pub branch_threshold: f64,
}

fn one() -> f64 {
    1.0
}
fn default_tree_grid_n() -> usize {
    2048
}
fn default_tree_length() -> f64 {
    256.0
}
fn default_tree_t_max() -> f64 {
    12.0
}
fn default_tree_samples() -> usize {
    25
}
fn default_branch_threshold() -> f64 {
    1e-3
}

/// Randomized self-check suite sizes.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub seed: u64,
    pub split_trials: usize,
    pub tree_trials: usize,
    pub partition_trials: usize,
    pub fail_fast: bool,
    /// deliberately breaks one check to prove failures are detected
    pub inject_fault: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            split_trials: 1000,
            tree_trials: 500,
            partition_trials: 200,
            fail_fast: false,
            inject_fault: false,
        }
    }
}

pub fn parse_config(text: &str) -> anyhow::Result<ScenarioConfig> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_config(path: &Path) -> anyhow::Result<ScenarioConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| anyhow::anyhow!("parsing {}: {e}", path.display()))
}

// ------------------------------------------------------------------- DTOs

/// Run-length encoding of a cell labeling: `(label, run)` pairs.
pub fn rle(labels: &[u8]) -> Vec<(u8, usize)> {
    let mut out: Vec<(u8, usize)> = Vec::new();
    for &l in labels {
        match out.last_mut() {
            Some((prev, run)) if *prev == l => *run += 1,
            _ => out.push((l, 1)),
        }
    }
    out
}

pub fn unrle(runs: &[(u8, usize)]) -> Vec<u8> {
    runs.iter().flat_map(|&(l, run)| core::iter::repeat_n(l, run)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WReportDto {
    pub value: f64,
    pub method: String,
    pub certified: bool,
    pub sampled: bool,
    pub achieving_time: Option<f64>,
    /// witness labeling, run-length encoded
    pub witness: Vec<(u8, usize)>,
}

impl WReportDto {
    pub fn from_report(r: &WReport) -> Self {
        let method = match r.method {
            WMethod::ExactTwo => "exact-two",
            WMethod::BruteForce => "brute-force",
            WMethod::Heuristic => "heuristic",
        };
        Self {
            value: r.value,
            method: method.to_string(),
            certified: r.certified,
            sampled: r.sampled,
            achieving_time: r.achieving_time,
            witness: rle(&r.witness),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ElementDto {
    pub id: usize,
    /// element index in the previous stage; `None` at the first stage
    pub parent_id: Option<usize>,
    pub norm2: f64,
    /// Born weight relative to the evolved root
    pub prob: f64,
    /// position mean where the backend defines one
    pub centroid: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StageDto {
    pub time: f64,
    pub elements: Vec<ElementDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TreeDto {
    pub root_norm2: f64,
    pub stages: Vec<StageDto>,
}

impl TreeDto {
    pub fn from_tree<S: State>(
        tree: &SpatialTree<S>,
        centroid: impl Fn(&S) -> Option<f64>,
    ) -> Self {
        let root_norm2 = tree.root().norm2();
        let stages = tree
            .stages()
            .iter()
            .enumerate()
            .map(|(si, stage)| StageDto {
                time: stage.time,
                elements: stage
                    .decomposition
                    .elements()
                    .iter()
                    .enumerate()
                    .map(|(i, e)| ElementDto {
                        id: i,
                        parent_id: (si > 0).then(|| stage.lineage.fine_to_coarse[i]),
                        norm2: e.norm2(),
                        prob: e.norm2() / root_norm2,
                        centroid: centroid(e),
                    })
                    .collect(),
            })
            .collect();
        Self { root_norm2, stages }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CertificateDto {
    pub n: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub stage_residuals: Vec<f64>,
    pub stage_bounds: Vec<f64>,
    pub max_subset_residual: f64,
}

impl CertificateDto {
    pub fn from_certificate(c: &PartitionCertificate) -> Self {
        Self {
            n: c.n,
            delta: c.delta,
            epsilon: c.epsilon,
            stage_residuals: c.stage_residuals.clone(),
            stage_bounds: c.stage_bounds.clone(),
            max_subset_residual: c.max_subset_residual,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Passed,
    Failed,
    Skipped,
}

/// One named verification result.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl CheckOutcome {
    pub fn pass(name: &str, detail: String) -> Self {
        Self { name: name.to_string(), status: CheckStatus::Passed, detail }
    }

    pub fn fail(name: &str, detail: String) -> Self {
        Self { name: name.to_string(), status: CheckStatus::Failed, detail }
    }

    pub fn skip(name: &str, detail: String) -> Self {
        Self { name: name.to_string(), status: CheckStatus::Skipped, detail }
    }

    pub fn of(name: &str, passed: bool, detail: String) -> Self {
        if passed { Self::pass(name, detail) } else { Self::fail(name, detail) }
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Failed
    }
}

/// Everything a scenario run reports, serialized as `report.json`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunReport {
    pub scenario: String,
    pub warnings: Vec<String>,
    pub checks: Vec<CheckOutcome>,
    /// scenario-specific numbers; keys are sorted for stable output
    pub summary: serde_json::Value,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed())
    }
}

// -------------------------------------------------------------------- IO

/// Pretty JSON plus trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    fs::write(path, to_json_bytes(value)?)
        .map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))
}

/// Small numeric CSV with optional `#` comment lines before the header.
///
/// Values print in Rust's shortest round-trip form, so tables are exact and
/// byte-stable.
pub struct CsvTable {
    header: Vec<String>,
    comments: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            header: columns.iter().map(|c| c.to_string()).collect(),
            comments: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, line: &str) {
        self.comments.push(line.to_string());
    }

    pub fn row(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.header.len());
        self.rows.push(values.to_vec());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        fs::write(path, self.render())
            .map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))
    }
}

/// Position mean of a grid state, `None` for negligible mass.
pub fn grid_centroid(psi: &crate::grid::GridWavefunction) -> Option<f64> {
    let n2 = psi.norm2();
    if n2 < 1e-12 {
        return None;
    }
    let dx = psi.spec.dx();
    let mut acc = 0.0;
    for (j, v) in psi.values.iter().enumerate() {
        acc += psi.spec.x(j) * v.norm_sqr() * dx;
    }
    Some(acc / n2)
}

/// Snapshot CSV `x,re,im,density` for one grid state.
pub fn snapshot_table(psi: &crate::grid::GridWavefunction) -> CsvTable {
    let mut t = CsvTable::new(&["x", "re", "im", "density"]);
    for (j, v) in psi.values.iter().enumerate() {
        t.row(&[psi.spec.x(j), v.re, v.im, v.norm_sqr()]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use psd_core::proximity::WReport;

    #[test]
    fn default_configs_roundtrip_through_json() {
        for cfg in [
            ScenarioConfig::Gaussian(GaussianConfig::default()),
            ScenarioConfig::Scattering(ScatteringConfig::default()),
            ScenarioConfig::Verify(VerifyConfig::default()),
            ScenarioConfig::CustomTree(CustomTreeConfig {
                packets: vec![PacketSpec {
                    center: 0.0,
                    momentum: 2.0,
                    spread: 1.0,
                    amplitude: 1.0,
                }],
                mass: 1.0,
                grid_n: 2048,
                length: 256.0,
                t_max: 12.0,
                samples: 25,
                branch_threshold: 1e-3,
            }),
        ] {
            let text = String::from_utf8(to_json_bytes(&cfg).unwrap()).unwrap();
            let back = parse_config(&text).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn strict_configs_reject_unknown_fields() {
        let bad = r#"{"kind": "gaussian", "momentum": 2.0, "momntum_spread": 1.0}"#;
        assert!(parse_config(bad).is_err());
        let bad_kind = r#"{"kind": "gausian"}"#;
        assert!(parse_config(bad_kind).is_err());
        let ok = r#"{"kind": "gaussian", "momentum": 2.0}"#;
        let cfg = parse_config(ok).unwrap();
        match cfg {
            ScenarioConfig::Gaussian(g) => {
                assert_eq!(g.momentum, 2.0);
                assert_eq!(g.momentum_spread, 1.0);
            }
            _ => panic!("wrong variant"),
        }
    }

    #[test]
    fn rle_roundtrips() {
        let labels = vec![0u8, 0, 0, 1, 1, 2, 0, 0];
        let runs = rle(&labels);
        assert_eq!(runs, vec![(0, 3), (1, 2), (2, 1), (0, 2)]);
        assert_eq!(unrle(&runs), labels);
        assert!(rle(&[]).is_empty());
    }

    #[test]
    fn report_dto_keeps_value_and_witness() {
        let r = WReport {
            value: 0.25,
            method: WMethod::BruteForce,
            certified: true,
            witness: vec![0, 0, 1, 1],
            achieving_time: Some(2.0),
            sampled: true,
        };
        let dto = WReportDto::from_report(&r);
        assert_eq!(dto.method, "brute-force");
        assert_eq!(unrle(&dto.witness), r.witness);
        let text = serde_json::to_string(&dto).unwrap();
        let back: WReportDto = serde_json::from_str(&text).unwrap();
        assert_eq!(back, dto);
    }

    #[test]
    fn csv_rendering_is_exact_and_stable() {
        let mut t = CsvTable::new(&["t", "w"]);
        t.comment("warning: example");
        t.row(&[0.1, 0.123456789012345678]);
        t.row(&[0.2, 1.0 / 3.0]);
        let text = t.render();
        assert!(text.starts_with("# warning: example\nt,w\n"));
        for (i, line) in text.lines().skip(2).enumerate() {
            let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            assert_eq!(cells[0], [0.1, 0.2][i]);
        }
        assert_eq!(text, t.render());
    }

    #[test]
    fn json_output_is_byte_stable() {
        let report = RunReport {
            scenario: "gaussian".to_string(),
            warnings: vec![],
            checks: vec![CheckOutcome::pass("norm", "1.0".to_string())],
            summary: serde_json::json!({"b": 2.0, "a": 1.0}),
        };
        let one = to_json_bytes(&report).unwrap();
        let two = to_json_bytes(&report).unwrap();
        assert_eq!(one, two);
        // map keys come out sorted regardless of insertion order
        let text = String::from_utf8(one).unwrap();
        let a = text.find("\"a\"").unwrap();
        let b = text.find("\"b\"").unwrap();
        assert!(a < b);
    }
}
