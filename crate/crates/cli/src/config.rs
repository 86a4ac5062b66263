//! TOML experiment configurations. Every table rejects unknown keys.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use vecfekete::polyspace::{make_mesh, Mesh, MeshKind, ScalarField, ScalarWeight, WeightVector};
use vecfekete::vandermonde::FeketeOptions;
use vecfekete::indexing::SpaceDims;

use crate::report::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    Interval,
    Circle,
    Square,
    Disk,
    Cube,
    File,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetConfig {
    pub kind: SetKind,
    /// Nodes per direction; defaults to a degree-dependent rule.
    pub density: Option<usize>,
    /// Mesh CSV for `kind = "file"`.
    pub path: Option<PathBuf>,
}

impl SetConfig {
    pub fn mesh(&self, r: usize, n: usize) -> Result<Mesh, CliError> {
        let mesh = match self.kind {
            SetKind::File => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| CliError::config("set.path", "required when kind = \"file\""))?;
                let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
                Mesh::read_csv(file).map_err(|e| CliError::config("set.path", e.to_string()))?
            }
            kind => {
                let kind = match kind {
                    SetKind::Interval => MeshKind::Interval,
                    SetKind::Circle => MeshKind::Circle,
                    SetKind::Square => MeshKind::Square,
                    SetKind::Disk => MeshKind::Disk,
                    _ => MeshKind::Cube,
                };
                let density = self
                    .density
                    .unwrap_or_else(|| vecfekete::asymptotics::density_for(kind, r));
                make_mesh(kind, density).map_err(|e| CliError::config("set.density", e.to_string()))?
            }
        };
        if mesh.dim() != n {
            return Err(CliError::config(
                "set.kind",
                format!("mesh has dimension {}, configuration asks for n = {n}", mesh.dim()),
            ));
        }
        Ok(mesh)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimsConfig {
    pub n: usize,
    pub r: usize,
    pub s: usize,
}

impl DimsConfig {
    pub fn dims(&self) -> Result<SpaceDims, CliError> {
        SpaceDims::new(self.n, self.r, self.s).map_err(|e| CliError::config("dims", e.to_string()))
    }
}

/// Unit weights when the list is empty; otherwise exactly `s` entries.
pub fn weight_vector(weight: &[ScalarWeight], s: usize) -> Result<WeightVector, CliError> {
    if weight.is_empty() {
        return Ok(WeightVector::unit(s));
    }
    if weight.len() != s {
        return Err(CliError::config(
            "weight",
            format!("{} weight components given, s = {s}", weight.len()),
        ));
    }
    Ok(WeightVector::new(weight.to_vec()))
}

/// Where the discrete vector measure comes from.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureConfig {
    /// Per-component Fekete points on disjoint subsets, mass `1/N` each.
    Fekete,
    /// Empirical measure of the frame Fekete configuration.
    FeketeEmpirical,
    /// Every mesh point in every frame direction, total mass 1.
    MeshCounting,
    File { path: PathBuf },
    /// `atoms` random mesh points (default `N + 2`) with random directions.
    Random { atoms: Option<usize> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeketeCmd {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub set: SetConfig,
    #[serde(default)]
    pub weight: Vec<ScalarWeight>,
    pub dims: DimsConfig,
    #[serde(default)]
    pub search: FeketeOptions,
    /// Compare with exhaustive search (small meshes only).
    #[serde(default)]
    pub brute_force: bool,
    #[serde(default)]
    pub tolerances: FeketeTolerances,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeketeTolerances {
    pub greedy_ratio: f64,
}

impl Default for FeketeTolerances {
    fn default() -> Self {
        FeketeTolerances { greedy_ratio: 0.98 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiameterCmd {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub set: SetConfig,
    #[serde(default)]
    pub weight: Vec<ScalarWeight>,
    pub n: usize,
    pub s: usize,
    pub r_values: Vec<usize>,
    #[serde(default)]
    pub search: FeketeOptions,
    /// Also compare with the mean of the component scalar diameters.
    #[serde(default)]
    pub product_formula: bool,
    /// Expected limit, e.g. the capacity of the set.
    pub reference: Option<f64>,
    #[serde(default)]
    pub tolerances: DiameterTolerances,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiameterTolerances {
    pub product_gap: f64,
    pub limit_rel: f64,
}

impl Default for DiameterTolerances {
    fn default() -> Self {
        DiameterTolerances {
            product_gap: 1e-12,
            limit_rel: 0.02,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GramCmd {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub set: SetConfig,
    #[serde(default)]
    pub weight: Vec<ScalarWeight>,
    pub dims: DimsConfig,
    pub measure: MeasureConfig,
    /// Tuple-sum check of `Z = N! det G` when within budget.
    #[serde(default = "yes")]
    pub oracle: bool,
    #[serde(default)]
    pub tolerances: GramTolerances,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GramTolerances {
    pub free_energy_rel: f64,
}

impl Default for GramTolerances {
    fn default() -> Self {
        GramTolerances { free_energy_rel: 1e-10 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyCmd {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub set: SetConfig,
    #[serde(default)]
    pub weight: Vec<ScalarWeight>,
    pub dims: DimsConfig,
    pub measure: MeasureConfig,
    /// One field per component; random quadratics from the seed when absent.
    #[serde(default)]
    pub direction: Vec<ScalarField>,
    #[serde(default = "default_t_values")]
    pub t_values: Vec<f64>,
    #[serde(default)]
    pub tolerances: EnergyTolerances,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyTolerances {
    pub trace_rel: f64,
    pub fd_rel: f64,
    /// Upper bound on `f''` when set.
    pub concavity: Option<f64>,
}

impl Default for EnergyTolerances {
    fn default() -> Self {
        EnergyTolerances {
            trace_rel: 1e-8,
            fd_rel: 1e-5,
            concavity: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BergmanCmd {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub set: SetConfig,
    #[serde(default)]
    pub weight: Vec<ScalarWeight>,
    pub dims: DimsConfig,
    pub measure: MeasureConfig,
    /// Test field components; random quadratics from the seed when absent.
    #[serde(default)]
    pub omega: Vec<ScalarField>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormConfig {
    pub n: usize,
    pub k: usize,
    pub r: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    pub sweeps: usize,
    pub initial_step: f64,
    pub length: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            sweeps: 40,
            initial_step: 0.1,
            length: 0.3,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormsCmd {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub set: Option<SetConfig>,
    pub form: FormConfig,
    /// Segment ascent for 1-forms.
    pub segment: Option<SegmentConfig>,
    #[serde(default)]
    pub tolerances: FormsTolerances,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormsTolerances {
    pub reproduction: f64,
}

impl Default for FormsTolerances {
    fn default() -> Self {
        FormsTolerances { reproduction: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleConfig {
    Quick,
    #[default]
    Full,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestCmd {
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub scale: ScaleConfig,
}

fn yes() -> bool {
    true
}

fn default_t_values() -> Vec<f64> {
    (0..11).map(|k| -1.0 + 0.2 * k as f64).collect()
}

/// Parses `text`; errors name the offending key as a dotted path.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    toml::from_str(text).map_err(|e| {
        let field = offending_field(text, e.message(), e.span());
        CliError::config(&field, e.message().trim().to_string())
    })
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text)
}

fn backticked(msg: &str) -> Option<&str> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(&msg[start..start + len])
}

fn header_name(line: &str) -> Option<&str> {
    let t = line.trim();
    if t.starts_with('[') {
        Some(t.trim_start_matches('[').split(']').next().unwrap_or("").trim())
    } else {
        None
    }
}

/// Dotted key path for a deserialization error: the enclosing table from
/// the span, then the key named in the message or found at the span.
fn offending_field(text: &str, msg: &str, span: Option<std::ops::Range<usize>>) -> String {
    let named = if msg.contains("unknown field") || msg.contains("missing field") {
        backticked(msg)
    } else {
        None
    };
    let Some(span) = span else {
        return named.unwrap_or("config").to_string();
    };
    let start = span.start.min(text.len());
    let line_start = text[..start].rfind('\n').map_or(0, |i| i + 1);
    let line_end = text[start..].find('\n').map_or(text.len(), |i| start + i);
    let line = &text[line_start..line_end];
    let (table, key) = match header_name(line) {
        Some(h) => (Some(h), None),
        None => (
            text[..line_start].lines().rev().find_map(header_name),
            line.split_once('=').map(|(k, _)| k.trim().trim_matches('"')),
        ),
    };
    let leaf = named.or(key);
    match (table, leaf) {
        (Some(t), Some(l)) if !t.is_empty() => format!("{t}.{l}"),
        (_, Some(l)) => l.to_string(),
        (Some(t), None) => t.to_string(),
        (None, None) => "config".to_string(),
    }
}
