//! Run configuration: a TOML file checked against a fixed schema before it
//! is turned into engine options. Every problem is reported, not just the
//! first one.

use std::path::Path;

use bhsc::flow::IntegratorOptions;
use bhsc::model::{CoherentState, LatticeConfig};
use bhsc::quantum::{KrylovOptions, QuantumOptions};
use bhsc::saddle::{NewtonOptions, SaddleSearch, SeedOptions, SweepOptions};
use bhsc::twa::DiagonalMode;
use bhsc::Complex;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Float,
    Count,
    Bool,
    Text,
    /// Array of two-number arrays.
    Pairs,
    TextList,
}

impl Kind {
    fn describe(self) -> &'static str {
        match self {
            Kind::Float => "a number",
            Kind::Count => "a non-negative integer",
            Kind::Bool => "a boolean",
            Kind::Text => "a string",
            Kind::Pairs => "an array of [x, y] number pairs",
            Kind::TextList => "an array of strings",
        }
    }

    fn accepts(self, v: &Value) -> bool {
        let number = |v: &Value| matches!(v, Value::Float(_) | Value::Integer(_));
        match self {
            Kind::Float => number(v),
            Kind::Count => matches!(v, Value::Integer(i) if *i >= 0),
            Kind::Bool => v.is_bool(),
            Kind::Text => v.is_str(),
            Kind::Pairs => v.as_array().is_some_and(|a| {
                a.iter()
                    .all(|p| p.as_array().is_some_and(|p| p.len() == 2 && p.iter().all(number)))
            }),
            Kind::TextList => v.as_array().is_some_and(|a| a.iter().all(Value::is_str)),
        }
    }
}

type Section = (&'static str, &'static [(&'static str, Kind, bool)]);

const SCHEMA: &[Section] = &[
    (
        "model",
        &[
            ("n_sites", Kind::Count, true),
            ("J", Kind::Float, true),
            ("U", Kind::Float, true),
            ("density_wave", Kind::Float, false),
            ("amplitudes", Kind::Pairs, false),
        ],
    ),
    (
        "integrator",
        &[
            ("rtol", Kind::Float, false),
            ("atol", Kind::Float, false),
            ("max_step", Kind::Float, false),
            ("escape_bound", Kind::Float, false),
            ("max_steps", Kind::Count, false),
        ],
    ),
    (
        "quantum",
        &[
            ("eps_trunc", Kind::Float, false),
            ("krylov_dim", Kind::Count, false),
            ("krylov_tol", Kind::Float, false),
            ("sector_cap", Kind::Count, false),
            ("dense_cap", Kind::Count, false),
        ],
    ),
    (
        "time",
        &[
            ("start", Kind::Float, false),
            ("stop", Kind::Float, true),
            ("step", Kind::Float, true),
        ],
    ),
    (
        "twa",
        &[
            ("samples", Kind::Count, false),
            ("seed", Kind::Count, false),
            ("rtol", Kind::Float, false),
            ("atol", Kind::Float, false),
        ],
    ),
    (
        "saddles",
        &[
            ("seeding_samples", Kind::Count, false),
            ("seed", Kind::Count, false),
            ("reseed_every", Kind::Count, false),
            ("max_seeds", Kind::Count, false),
            ("score_floor", Kind::Float, false),
            ("bandwidth", Kind::Float, false),
            ("max_seed_distance", Kind::Float, false),
            ("newton_tol", Kind::Float, false),
            ("newton_max_iter", Kind::Count, false),
            ("coarse_tol", Kind::Float, false),
            ("coarse_rtol", Kind::Float, false),
            ("coarse_atol", Kind::Float, false),
            ("max_subdivisions", Kind::Count, false),
            ("dedup_tol", Kind::Float, false),
            ("match_tol", Kind::Float, false),
            ("growth_bound", Kind::Float, false),
            ("max_families", Kind::Count, false),
            ("keep_discarded", Kind::Bool, false),
            ("rtol", Kind::Float, false),
            ("atol", Kind::Float, false),
        ],
    ),
    ("semiclassical", &[("diagonal_mode", Kind::Text, false)]),
    (
        "spectrum",
        &[
            ("sigma", Kind::Float, false),
            ("e_min", Kind::Float, false),
            ("e_max", Kind::Float, false),
            ("e_step", Kind::Float, false),
            ("e0", Kind::Float, false),
            ("normalize", Kind::Bool, false),
            ("peak_floor", Kind::Float, false),
        ],
    ),
    (
        "compare",
        &[("engines", Kind::TextList, false), ("ranges", Kind::Pairs, false)],
    ),
];

fn schema_errors(table: &Table) -> Vec<String> {
    let mut errors = Vec::new();
    for (name, value) in table {
        if !SCHEMA.iter().any(|(s, _)| s == name) {
            errors.push(format!("[{name}]: unknown section"));
        } else if !value.is_table() {
            errors.push(format!("[{name}]: expected a table"));
        }
    }
    for (section, keys) in SCHEMA {
        let body = table.get(*section).and_then(Value::as_table);
        if let Some(body) = body {
            for key in body.keys() {
                if !keys.iter().any(|(k, _, _)| k == key) {
                    errors.push(format!("[{section}].{key}: unknown key"));
                }
            }
        }
        for (key, kind, required) in keys.iter() {
            match body.and_then(|b| b.get(*key)) {
                None if *required => errors.push(format!("[{section}].{key}: missing")),
                None => {}
                Some(v) if !kind.accepts(v) => errors.push(format!("[{section}].{key}: expected {}", kind.describe())),
                Some(_) => {}
            }
        }
    }
    errors
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n_sites: usize,
    #[serde(rename = "J")]
    pub hopping: f64,
    #[serde(rename = "U")]
    pub interaction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_wave: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: Option<f64>,
    pub escape_bound: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let d = IntegratorOptions::<f64>::default();
        Self {
            rtol: d.rtol,
            atol: d.atol,
            max_step: None,
            escape_bound: None,
            max_steps: d.max_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantumSection {
    pub eps_trunc: f64,
    pub krylov_dim: usize,
    pub krylov_tol: f64,
    pub sector_cap: usize,
    pub dense_cap: usize,
}

impl Default for QuantumSection {
    fn default() -> Self {
        let d = QuantumOptions::default();
        Self {
            eps_trunc: d.eps_trunc,
            krylov_dim: d.krylov.dim,
            krylov_tol: d.krylov.tol,
            sector_cap: d.sector_cap,
            dense_cap: d.dense_cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default)]
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwaSection {
    pub samples: usize,
    pub seed: u64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for TwaSection {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 1,
            rtol: 1e-8,
            atol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaddleSection {
    pub seeding_samples: usize,
    pub seed: u64,
    pub reseed_every: usize,
    pub max_seeds: usize,
    pub score_floor: f64,
    pub bandwidth: f64,
    pub max_seed_distance: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub coarse_tol: f64,
    pub coarse_rtol: f64,
    pub coarse_atol: f64,
    pub max_subdivisions: usize,
    pub dedup_tol: f64,
    pub match_tol: f64,
    pub growth_bound: f64,
    pub max_families: usize,
    pub keep_discarded: bool,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for SaddleSection {
    fn default() -> Self {
        let sweep = SweepOptions::<f64>::default();
        let newton = NewtonOptions::<f64>::default();
        Self {
            seeding_samples: sweep.seeding_samples,
            seed: sweep.rng_seed,
            reseed_every: sweep.reseed_every,
            max_seeds: sweep.seeds.max_seeds,
            score_floor: sweep.seeds.score_floor,
            bandwidth: sweep.seeds.bandwidth,
            max_seed_distance: sweep.seeds.max_seed_distance,
            newton_tol: newton.tol,
            newton_max_iter: newton.max_iter,
            coarse_tol: 1e-7,
            coarse_rtol: 1e-9,
            coarse_atol: 1e-10,
            max_subdivisions: 3,
            dedup_tol: sweep.dedup_tol,
            match_tol: sweep.match_tol,
            growth_bound: sweep.growth_bound,
            max_families: sweep.max_families,
            keep_discarded: sweep.keep_discarded,
            rtol: 1e-12,
            atol: 1e-13,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SemiclassicalSection {
    pub diagonal_mode: DiagonalMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub sigma: f64,
    pub e_min: f64,
    pub e_max: f64,
    pub e_step: f64,
    pub e0: f64,
    pub normalize: bool,
    pub peak_floor: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            sigma: 40.0,
            e_min: -10.0,
            e_max: 10.0,
            e_step: 0.01,
            e0: 0.0,
            normalize: true,
            peak_floor: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Quantum,
    Twa,
    Semiclassical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub engines: Vec<Engine>,
    /// Closed `tau` intervals for the deviation metrics; empty means the
    /// whole grid.
    pub ranges: Vec<[f64; 2]>,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            engines: vec![Engine::Quantum, Engine::Twa, Engine::Semiclassical],
            ranges: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub quantum: QuantumSection,
    pub time: TimeSection,
    #[serde(default)]
    pub twa: TwaSection,
    #[serde(default)]
    pub saddles: SaddleSection,
    #[serde(default)]
    pub semiclassical: SemiclassicalSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub compare: CompareSection,
}

/// Range and consistency checks, each naming the offending key.
pub fn validate(c: &Config) -> Vec<String> {
    let mut e = Vec::new();
    let mut positive = |ok: bool, key: &str, what: &str| {
        if !ok {
            e.push(format!("{key}: {what}"));
        }
    };
    let m = &c.model;
    positive(m.n_sites >= 2, "[model].n_sites", "must be at least 2");
    positive(m.hopping.is_finite(), "[model].J", "must be finite");
    positive(m.interaction.is_finite(), "[model].U", "must be finite");
    match (&m.density_wave, &m.amplitudes) {
        (Some(n), None) => {
            positive(*n > 0.0 && n.is_finite(), "[model].density_wave", "must be a positive occupation");
            positive(m.n_sites.is_multiple_of(2), "[model].density_wave", "needs an even n_sites");
        }
        (None, Some(a)) => positive(a.len() == m.n_sites, "[model].amplitudes", "needs one [re, im] pair per site"),
        _ => positive(false, "[model].density_wave", "exactly one of density_wave or amplitudes is required"),
    }
    let i = &c.integrator;
    positive(i.rtol > 0.0, "[integrator].rtol", "must be positive");
    positive(i.atol > 0.0, "[integrator].atol", "must be positive");
    positive(i.max_step.is_none_or(|h| h > 0.0), "[integrator].max_step", "must be positive");
    positive(i.escape_bound.is_none_or(|b| b > 0.0), "[integrator].escape_bound", "must be positive");
    let q = &c.quantum;
    positive(q.eps_trunc > 0.0 && q.eps_trunc < 1.0, "[quantum].eps_trunc", "must lie in (0, 1)");
    positive(q.krylov_dim >= 2, "[quantum].krylov_dim", "must be at least 2");
    positive(q.krylov_tol > 0.0, "[quantum].krylov_tol", "must be positive");
    let t = &c.time;
    positive(t.start >= 0.0, "[time].start", "must be non-negative");
    positive(t.step > 0.0, "[time].step", "must be positive");
    positive(t.stop >= t.start && t.stop.is_finite(), "[time].stop", "must be finite and not below start");
    positive(c.twa.samples > 0, "[twa].samples", "must be positive");
    positive(c.twa.rtol > 0.0, "[twa].rtol", "must be positive");
    positive(c.twa.atol > 0.0, "[twa].atol", "must be positive");
    let s = &c.saddles;
    positive(s.newton_tol > 0.0, "[saddles].newton_tol", "must be positive");
    positive(s.coarse_tol >= s.newton_tol, "[saddles].coarse_tol", "must not be below newton_tol");
    positive(s.max_seed_distance > 0.0, "[saddles].max_seed_distance", "must be positive");
    positive(s.bandwidth > 0.0, "[saddles].bandwidth", "must be positive");
    positive(s.growth_bound > 0.0, "[saddles].growth_bound", "must be positive");
    positive(s.dedup_tol > 0.0, "[saddles].dedup_tol", "must be positive");
    positive(s.max_families > 0, "[saddles].max_families", "must be positive");
    positive(s.rtol > 0.0, "[saddles].rtol", "must be positive");
    positive(s.atol > 0.0, "[saddles].atol", "must be positive");
    positive(s.coarse_rtol > 0.0, "[saddles].coarse_rtol", "must be positive");
    positive(s.coarse_atol > 0.0, "[saddles].coarse_atol", "must be positive");
    let sp = &c.spectrum;
    positive(sp.sigma > 0.0, "[spectrum].sigma", "must be positive");
    positive(sp.e_step > 0.0, "[spectrum].e_step", "must be positive");
    positive(sp.e_max >= sp.e_min, "[spectrum].e_max", "must not be below e_min");
    positive(!c.compare.engines.is_empty(), "[compare].engines", "must name at least one engine");
    positive(c.compare.ranges.iter().all(|r| r[1] >= r[0]), "[compare].ranges", "each range needs start <= end");
    e
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<Config, CliError> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Validation(vec![format!("not valid TOML: {}", e.message())]))?;
    let errors = schema_errors(&table);
    if !errors.is_empty() {
        return Err(CliError::Validation(errors));
    }
    let config: Config = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Validation(vec![e.message().to_string()]))?;
    let errors = validate(&config);
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(CliError::Validation(errors))
    }
}

pub fn load_config(path: &Path) -> Result<(Config, String), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok((parse_config(&text)?, text))
}

impl Config {
    /// A placeholder model carrying only spectrum settings, for transforms
    /// of an existing series.
    pub fn spectrum_only(spectrum: SpectrumSection) -> Self {
        Self {
            model: ModelSection {
                n_sites: 2,
                hopping: 0.0,
                interaction: 0.0,
                density_wave: Some(1.0),
                amplitudes: None,
            },
            integrator: IntegratorSection::default(),
            quantum: QuantumSection::default(),
            time: TimeSection {
                start: 0.0,
                stop: 0.0,
                step: 1.0,
            },
            twa: TwaSection::default(),
            saddles: SaddleSection::default(),
            semiclassical: SemiclassicalSection::default(),
            spectrum,
            compare: CompareSection::default(),
        }
    }

    pub fn lattice(&self) -> Result<LatticeConfig<f64>, CliError> {
        LatticeConfig::new(self.model.n_sites, self.model.hopping, self.model.interaction)
            .map_err(|e| CliError::Validation(vec![format!("[model]: {e}")]))
    }

    pub fn state(&self) -> Result<CoherentState<f64>, CliError> {
        let state = match (&self.model.density_wave, &self.model.amplitudes) {
            (Some(n), _) => CoherentState::density_wave(self.model.n_sites, *n),
            (None, Some(a)) => CoherentState::new(a.iter().map(|p| Complex::new(p[0], p[1])).collect()),
            (None, None) => unreachable!("validated"),
        };
        state.map_err(|e| CliError::Validation(vec![format!("[model]: {e}")]))
    }

    pub fn integrator(&self, state: &CoherentState<f64>) -> IntegratorOptions<f64> {
        let base = IntegratorOptions::for_state(state);
        IntegratorOptions {
            rtol: self.integrator.rtol,
            atol: self.integrator.atol,
            max_step: self.integrator.max_step.unwrap_or(base.max_step),
            escape_bound: self.integrator.escape_bound.unwrap_or(base.escape_bound),
            max_steps: self.integrator.max_steps,
        }
    }

    pub fn quantum_options(&self) -> QuantumOptions {
        QuantumOptions {
            eps_trunc: self.quantum.eps_trunc,
            krylov: KrylovOptions {
                dim: self.quantum.krylov_dim,
                tol: self.quantum.krylov_tol,
                ..KrylovOptions::default()
            },
            sector_cap: self.quantum.sector_cap,
            dense_cap: self.quantum.dense_cap,
        }
    }

    pub fn twa_integrator(&self, state: &CoherentState<f64>) -> IntegratorOptions<f64> {
        IntegratorOptions {
            rtol: self.twa.rtol,
            atol: self.twa.atol,
            ..self.integrator(state)
        }
    }

    pub fn sweep_options(&self, state: &CoherentState<f64>) -> SweepOptions<f64> {
        let s = &self.saddles;
        SweepOptions {
            seeds: SeedOptions {
                score_floor: s.score_floor,
                bandwidth: s.bandwidth,
                max_seeds: s.max_seeds,
                max_seed_distance: s.max_seed_distance,
            },
            seeding_samples: s.seeding_samples,
            rng_seed: s.seed,
            reseed_every: s.reseed_every,
            dedup_tol: s.dedup_tol,
            match_tol: s.match_tol,
            growth_bound: s.growth_bound,
            keep_discarded: s.keep_discarded,
            max_families: s.max_families,
            ensemble_integrator: self.twa_integrator(state),
        }
    }

    pub fn saddle_search(&self, state: &CoherentState<f64>) -> Result<SaddleSearch<f64>, CliError> {
        let lattice = self.lattice()?;
        let mut search = SaddleSearch::new(state, &lattice).map_err(|e| CliError::Validation(vec![format!("[model]: {e}")]))?;
        let s = &self.saddles;
        let base = self.integrator(state);
        search.integrator = IntegratorOptions {
            rtol: s.rtol,
            atol: s.atol,
            ..base
        };
        search.coarse_integrator = IntegratorOptions {
            rtol: s.coarse_rtol,
            atol: s.coarse_atol,
            ..base
        };
        search.newton = NewtonOptions {
            tol: s.newton_tol,
            max_iter: s.newton_max_iter,
            ..NewtonOptions::default()
        };
        search.coarse_tol = s.coarse_tol;
        search.max_subdivisions = s.max_subdivisions;
        Ok(search)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(section: &str, key: &str, kind: Kind) -> Option<String> {
        let v: String = match (section, key, kind) {
            ("model", "amplitudes", _) => return None,
            ("model", "n_sites", _) => "4".into(),
            ("model", "density_wave", _) => "2.0".into(),
            ("time", "stop", _) => "1.0".into(),
            ("time", "step", _) => "0.1".into(),
            ("quantum", "eps_trunc", _) => "1e-6".into(),
            ("semiclassical", "diagonal_mode", _) => "\"real_part\"".into(),
            ("compare", "engines", _) => "[\"quantum\", \"twa\"]".into(),
            (_, _, Kind::Float) => "0.5".into(),
            (_, "krylov_dim", _) | (_, "max_seeds", _) | (_, "max_families", _) => "12".into(),
            (_, _, Kind::Count) => "3".into(),
            (_, _, Kind::Bool) => "true".into(),
            (_, _, Kind::Pairs) => "[[0.0, 1.0]]".into(),
            (_, _, Kind::Text) | (_, _, Kind::TextList) => unreachable!("{section}.{key}"),
        };
        Some(format!("{key} = {v}"))
    }

    #[test]
    fn every_schema_key_reaches_the_typed_config() {
        let mut text = String::new();
        for (section, keys) in SCHEMA {
            text.push_str(&format!("[{section}]\n"));
            for (key, kind, _) in keys.iter() {
                if let Some(line) = sample(section, key, *kind) {
                    text.push_str(&line);
                    text.push('\n');
                }
            }
        }
        let c = parse_config(&text).unwrap();
        assert_eq!(c.semiclassical.diagonal_mode, DiagonalMode::RealPart);
        assert_eq!(c.saddles.max_seeds, 12);
        assert_eq!(c.compare.ranges, vec![[0.0, 1.0]]);
        assert_eq!(c.integrator.max_step, Some(0.5));
    }

    #[test]
    fn both_state_forms_are_rejected() {
        let text = "[model]\nn_sites = 2\nJ = 1\nU = 1\ndensity_wave = 1\namplitudes = [[1, 0], [0, 0]]\n[time]\nstop = 1\nstep = 0.1\n";
        let Err(CliError::Validation(e)) = parse_config(text) else { panic!() };
        assert_eq!(e.len(), 1);
        assert!(e[0].starts_with("[model].density_wave"));
    }

    #[test]
    fn explicit_amplitudes_build_the_state() {
        let text = "[model]\nn_sites = 2\nJ = 1\nU = 1\namplitudes = [[1, 0.5], [0, 0]]\n[time]\nstop = 1\nstep = 0.1\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.state().unwrap().amplitudes()[0], Complex::new(1.0, 0.5));
    }
}
