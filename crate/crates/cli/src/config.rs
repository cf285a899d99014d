use euler_campanato::suites::{Settings, Tolerances};
use serde::Deserialize;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Experiment file. Every key is optional; omitted keys keep the preset's value.
///
/// ```toml
/// preset = "quick"
/// seed = 11
///
/// [grid]
/// campanato_m = 64
/// potential_m = [32, 64]
/// probes_per_axis = 3
/// j_range = [-1, 2]
///
/// [tolerances]
/// energy = 1e-4
///
/// [output]
/// dir = "reports"
/// ```
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Option<Preset>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub sequences: SequenceSection,
    #[serde(default)]
    pub corpus: CorpusSection,
    #[serde(default)]
    pub euler: EulerSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Acceptance,
    Quick,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub campanato_m: Option<usize>,
    pub potential_m: Option<(usize, usize)>,
    pub probes_per_axis: Option<usize>,
    pub j_range: Option<(i32, i32)>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSection {
    pub count: Option<usize>,
    pub length: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub size: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EulerSection {
    pub m: Option<usize>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

macro_rules! tolerance_section {
    ($($name:ident),* $(,)?) => {
        #[derive(Debug, Default, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct ToleranceSection {
            $(pub $name: Option<f64>,)*
        }

        impl ToleranceSection {
            fn apply(&self, t: &mut Tolerances) {
                $(if let Some(v) = self.$name { t.$name = v; })*
            }
        }
    };
}

tolerance_section!(
    mean_polynomial,
    vanishing_moments,
    comparability,
    stationary,
    invariant_drift,
    blowup_scaling,
    ex1_residual,
    pair_residual,
    poisson_residual,
    projection,
    curl,
    refinement,
    steady,
    energy,
    riccati_order,
    galilean,
    euler_blowup,
    log_slope,
    linear_integral,
);

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn settings(&self) -> Settings {
        let mut s = match self.preset {
            Some(Preset::Quick) => Settings::quick(),
            _ => Settings::default(),
        };
        if let Some(v) = self.seed {
            s.seed = v;
        }
        let g = &self.grid;
        s.campanato_m = g.campanato_m.unwrap_or(s.campanato_m);
        s.potential_m = g.potential_m.unwrap_or(s.potential_m);
        s.probes_per_axis = g.probes_per_axis.unwrap_or(s.probes_per_axis);
        if g.j_range.is_some() {
            s.j_range = g.j_range;
        }
        s.sequences = self.sequences.count.unwrap_or(s.sequences);
        s.sequence_len = self.sequences.length.unwrap_or(s.sequence_len);
        s.corpus = self.corpus.size.unwrap_or(s.corpus);
        s.euler_m = self.euler.m.unwrap_or(s.euler_m);
        s.euler_dt = self.euler.dt.unwrap_or(s.euler_dt);
        s.euler_horizon = self.euler.horizon.unwrap_or(s.euler_horizon);
        self.tolerances.apply(&mut s.tol);
        s
    }
}
