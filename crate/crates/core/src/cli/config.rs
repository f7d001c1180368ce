use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::{CMatrix, Mat3, MultiIndex, PairCoupling, Schedule, Slot, SpinOps, SystemSpec, Vec3, C64};
use crate::error::{Error, Result};
use crate::phase::{EstimatorOptions, SamplingScheme};
use crate::reference::{bloch_from_density, BlochTensor, DensityMatrix};
use crate::sde::RunConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub n_qubits: usize,
    #[serde(default)]
    pub fields: Vec<FieldEntry>,
    #[serde(default)]
    pub pairs: Vec<PairEntry>,
    pub initial: InitialState,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub observables: Vec<ObservableName>,
    #[serde(default)]
    pub estimator: EstimatorOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldEntry {
    pub qubit: usize,
    pub schedule: Vec<FieldPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldPoint {
    pub t: f64,
    #[serde(rename = "B")]
    pub b: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairEntry {
    pub a: usize,
    pub b: usize,
    pub schedule: Vec<CouplingPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingPoint {
    pub t: f64,
    #[serde(rename = "J")]
    pub j: [[f64; 3]; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProductSpin {
    #[serde(rename = "up")]
    Up,
    #[serde(rename = "down")]
    Down,
    #[serde(rename = "+x")]
    PlusX,
    #[serde(rename = "-x")]
    MinusX,
    #[serde(rename = "+y")]
    PlusY,
    #[serde(rename = "-y")]
    MinusY,
}

impl ProductSpin {
    pub fn bloch_vector(self) -> Vec3 {
        match self {
            ProductSpin::Up => Vec3::new(0.0, 0.0, 0.5),
            ProductSpin::Down => Vec3::new(0.0, 0.0, -0.5),
            ProductSpin::PlusX => Vec3::new(0.5, 0.0, 0.0),
            ProductSpin::MinusX => Vec3::new(-0.5, 0.0, 0.0),
            ProductSpin::PlusY => Vec3::new(0.0, 0.5, 0.0),
            ProductSpin::MinusY => Vec3::new(0.0, -0.5, 0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// One named spin state per qubit.
    Product(Vec<ProductSpin>),
    /// Singlet on the given pair of a two-qubit system.
    Singlet([usize; 2]),
    /// Sparse correlators by index name; unspecified entries are zero.
    Bloch(BTreeMap<String, f64>),
    /// JSON file holding `re` and optional `im` matrices, relative to the
    /// config file.
    DensityFile(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub count: usize,
    #[serde(rename = "M")]
    pub m: f64,
    pub seed: u64,
    #[serde(default)]
    pub sampling: SamplingScheme,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            count: 100_000,
            m: 1.0,
            seed: 0,
            sampling: SamplingScheme::Independent,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Steps between output rows.
    #[serde(default = "one")]
    pub output_every: u64,
    /// Steps between resamplings.
    #[serde(default)]
    pub reset_every: Option<u64>,
}

fn one() -> u64 {
    1
}

/// Either a dotted name ("z.0") or one slot per qubit (["z", "0"]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableName {
    Dotted(String),
    Slots(Vec<String>),
}

impl ObservableName {
    pub fn to_index(&self, n: usize) -> std::result::Result<MultiIndex, String> {
        let text = match self {
            ObservableName::Dotted(s) => s.clone(),
            ObservableName::Slots(v) => v.join("."),
        };
        let mi: MultiIndex = text.parse().map_err(|e: Error| e.to_string())?;
        if mi.n_qubits() != n {
            return Err(format!("'{text}' names {} qubits, system has {n}", mi.n_qubits()));
        }
        Ok(mi)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityFile {
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Option<Vec<Vec<f64>>>,
}

/// Everything a run needs, validated.
#[derive(Clone, Debug, PartialEq)]
pub struct Parsed {
    pub config: Config,
    pub spec: SystemSpec,
    pub initial: BlochTensor,
    pub run: RunConfig,
    pub observables: Vec<MultiIndex>,
}

fn err(path: impl Into<String>, msg: impl std::fmt::Display) -> Error {
    Error::Config {
        path: path.into(),
        msg: msg.to_string(),
    }
}

/// Parses and validates a JSON config. `base` resolves relative file paths.
pub fn parse_config(text: &str, base: Option<&Path>) -> Result<Parsed> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: Config = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        err(if path.is_empty() { "$".into() } else { path }, e.inner())
    })?;
    build(config, base)
}

pub fn emit_config(config: &Config) -> String {
    serde_json::to_string_pretty(config).expect("config is serializable")
}

pub fn build(config: Config, base: Option<&Path>) -> Result<Parsed> {
    let n = config.n_qubits;
    if n == 0 {
        return Err(err("n_qubits", "must be positive"));
    }
    let mut fields: Vec<Option<Schedule<Vec3>>> = vec![None; n];
    for (i, f) in config.fields.iter().enumerate() {
        let path = format!("fields[{i}]");
        if f.qubit >= n {
            return Err(err(format!("{path}.qubit"), format!("qubit {} out of range", f.qubit)));
        }
        if fields[f.qubit].is_some() {
            return Err(err(format!("{path}.qubit"), format!("duplicate field for qubit {}", f.qubit)));
        }
        let segs = f.schedule.iter().map(|p| (p.t, Vec3(p.b))).collect();
        fields[f.qubit] = Some(Schedule::new(segs).map_err(|e| err(format!("{path}.schedule"), e))?);
    }
    let fields = fields
        .into_iter()
        .map(|f| f.unwrap_or_else(|| Schedule::constant(Vec3::zero())))
        .collect();
    let mut pairs = Vec::with_capacity(config.pairs.len());
    let mut seen = std::collections::HashSet::new();
    for (i, p) in config.pairs.iter().enumerate() {
        let path = format!("pairs[{i}]");
        if !seen.insert((p.a.min(p.b), p.a.max(p.b))) {
            return Err(err(&path, format!("duplicate pair ({}, {})", p.a, p.b)));
        }
        let segs = p.schedule.iter().map(|s| (s.t, Mat3(s.j))).collect();
        let coupling = Schedule::new(segs).map_err(|e| err(format!("{path}.schedule"), e))?;
        pairs.push(PairCoupling { a: p.a, b: p.b, coupling });
    }
    let spec = SystemSpec::new(n, fields, pairs).map_err(|e| err("pairs", e))?;

    let initial = initial_state(&config.initial, n, base)?;

    let observables = config
        .observables
        .iter()
        .enumerate()
        .map(|(i, o)| o.to_index(n).map_err(|m| err(format!("observables[{i}]"), m)))
        .collect::<Result<Vec<_>>>()?;

    let ic = &config.integrator;
    let run = RunConfig {
        dt: ic.dt,
        t_final: ic.t_final,
        output_every: ic.output_every,
        reset_every: ic.reset_every,
        diagnostics_every: None,
        count: config.ensemble.count,
        radius: config.ensemble.m,
        seed: config.ensemble.seed,
        sampling: config.ensemble.sampling,
        observables: observables.clone(),
        estimator: config.estimator,
        workers: None,
    };
    run.validate().map_err(|e| err("integrator", e))?;
    run.sample_options(0)
        .validate(n)
        .map_err(|e| err("ensemble", e))?;
    let observables = if observables.is_empty() {
        MultiIndex::all(n).skip(1).collect()
    } else {
        observables
    };
    Ok(Parsed {
        config,
        spec,
        initial,
        run,
        observables,
    })
}

fn initial_state(init: &InitialState, n: usize, base: Option<&Path>) -> Result<BlochTensor> {
    match init {
        InitialState::Product(spins) => {
            if spins.len() != n {
                return Err(err("initial.product", format!("{} spins given for {n} qubits", spins.len())));
            }
            let v: Vec<Vec3> = spins.iter().map(|s| s.bloch_vector()).collect();
            Ok(BlochTensor::product(&v))
        }
        InitialState::Singlet([a, b]) => {
            if n != 2 || a == b || *a > 1 || *b > 1 {
                return Err(err("initial.singlet", "singlet needs a two-qubit system and the pair [0, 1]"));
            }
            let mut t = BlochTensor::maximally_mixed(2);
            for axis in crate::algebra::Axis::ALL {
                let mi = MultiIndex::new(vec![Slot::Spin(axis); 2]);
                t.set(&mi, -0.25);
            }
            Ok(t)
        }
        InitialState::Bloch(map) => {
            let mut t = BlochTensor::zeros(n);
            for (k, v) in map {
                let path = format!("initial.bloch.{k}");
                let mi: MultiIndex = k.parse().map_err(|e| err(&path, e))?;
                if mi.n_qubits() != n {
                    return Err(err(&path, format!("index names {} qubits, system has {n}", mi.n_qubits())));
                }
                if !v.is_finite() {
                    return Err(err(&path, "non-finite value"));
                }
                t.set(&mi, *v);
            }
            if !map.keys().any(|k| k.parse::<MultiIndex>().map(|m| m.weight() == 0).unwrap_or(false)) {
                t.coeffs_mut()[0] = 1.0;
            }
            t.check_normalized().map_err(|e| err("initial.bloch", e))?;
            Ok(t)
        }
        InitialState::DensityFile(file) => {
            let path = match base {
                Some(dir) => dir.join(file),
                None => Path::new(file).to_path_buf(),
            };
            let text = std::fs::read_to_string(&path)
                .map_err(|e| err("initial.density_file", format!("{}: {e}", path.display())))?;
            let df: DensityFile =
                serde_json::from_str(&text).map_err(|e| err("initial.density_file", format!("{}: {e}", path.display())))?;
            let dim = 1usize << n;
            let im = df.im.unwrap_or_else(|| vec![vec![0.0; dim]; dim]);
            if df.re.len() != dim || im.len() != dim || df.re.iter().chain(&im).any(|r| r.len() != dim) {
                return Err(err("initial.density_file", format!("matrix must be {dim}x{dim}")));
            }
            let m = CMatrix::from_fn(dim, dim, |i, j| C64::new(df.re[i][j], im[i][j]));
            let rho = DensityMatrix::new(m).map_err(|e| err("initial.density_file", e))?;
            let ops = SpinOps::new(n).map_err(|e| err("initial.density_file", e))?;
            bloch_from_density(&rho, &ops).map_err(|e| err("initial.density_file", e))
        }
    }
}
