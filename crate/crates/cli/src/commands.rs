// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Subcommand implementations.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use spinorbit::fock::C64;
use spinorbit::measurement::read_counts_csv;
use spinorbit::scenarios::{
    self, paper_2009, run_scenario, uniform_scan, NoiseParams, QPlateModel, QubitInput, RunConfig,
    ScenarioKind, ScenarioOptions, ScenarioResult,
};
use spinorbit::tomography::{
    concurrence, mle_state_tomo, process_tomo, pure_state_fidelity, stokes_reconstruct,
    LikelihoodModel, MetricsDoc, MleOutcome, PolEncoding, TomoSettings,
};
use spinorbit::{
    Circuit, CircuitSpec, CoincidencePattern, CountRecord, DensityMatrix, Error, PhotonicState,
    Result,
};

use crate::output::{self, csv_bytes, gnuplot, read_text, stem, write};
use crate::{constants, Format, GlobalArgs};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    #[value(name = "paper-2009")]
    Paper2009,
}

/// Options shared by `scenario` and `scan`.
#[derive(Args, Debug, Clone)]
pub struct RunOpts {
    /// Input state: H V D A L R, +2 -2 d+ d- dL dR, or `re,im;re,im`.
    #[arg(long)]
    pub input: Option<String>,

    /// Noise-free optics (the default when no preset is given).
    #[arg(long, conflicts_with = "preset")]
    pub ideal: bool,

    /// Calibrated noise preset.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,

    /// Noise override `key=value`; repeatable. Keys: depolarizing_p (p),
    /// oam_dephasing (q), distinguishability_eps (eps), eta, transmittance, delta.
    #[arg(long = "noise", value_name = "KEY=VALUE")]
    pub noise: Vec<String>,

    /// Treat the unconverted q-plate fraction as an incoherent mixture.
    #[arg(long)]
    pub incoherent_qplate: bool,

    /// First delay of a scan, ps.
    #[arg(long, allow_hyphen_values = true)]
    pub tmin: Option<f64>,

    /// Last delay of a scan, ps.
    #[arg(long, allow_hyphen_values = true)]
    pub tmax: Option<f64>,

    /// Number of delays in a scan.
    #[arg(long)]
    pub steps: Option<usize>,

    /// Erasure analysis basis: pm2, d_plus_minus, d_RL.
    #[arg(long)]
    pub basis: Option<String>,
}

#[derive(Args, Debug)]
pub struct ScenarioArgs {
    /// One of: entanglement, transferrer-pi-l, transferrer-l-pi,
    /// double-transfer, hom-scan, coalescence, erasure.
    pub name: String,

    #[command(flatten)]
    pub opts: RunOpts,
}

#[derive(Args, Debug)]
pub struct CircuitArgs {
    /// Circuit JSON file.
    pub circuit: PathBuf,
    /// Input state JSON file.
    pub state: PathBuf,
    /// Coincidence pattern to evaluate, e.g. `D_A=kA,D_B=kB`; repeatable.
    #[arg(long)]
    pub measure: Vec<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TomoMode {
    State1,
    State2,
    Process,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodingArg {
    Linear,
    Circular,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum LikelihoodArg {
    Multinomial,
    Poisson,
}

#[derive(Args, Debug)]
pub struct TomoArgs {
    /// Counts CSV (`setting,pattern,counts,shots,seed`).
    pub counts: PathBuf,

    #[arg(long, value_enum)]
    pub mode: TomoMode,

    /// Target for the fidelity: phi+, phi-, psi+, psi- for two qubits, a
    /// cardinal state for one. Two-qubit runs default to phi+.
    #[arg(long)]
    pub target: Option<String>,

    /// Polarization encoding; defaults to circular for two qubits and linear
    /// for one.
    #[arg(long, value_enum)]
    pub pol_encoding: Option<EncodingArg>,

    #[arg(long, value_enum, default_value_t = LikelihoodArg::Multinomial)]
    pub likelihood: LikelihoodArg,

    /// Random restarts besides the linear-inversion start.
    #[arg(long)]
    pub restarts: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    /// Scenario to sweep.
    pub name: String,

    /// Noise key to vary (see `--noise`).
    #[arg(long)]
    pub param: String,

    #[arg(long, allow_hyphen_values = true)]
    pub from: f64,

    #[arg(long, allow_hyphen_values = true)]
    pub to: f64,

    /// Number of values.
    #[arg(long, default_value_t = 11)]
    pub points: usize,

    #[command(flatten)]
    pub opts: RunOpts,
}

#[derive(Args, Debug)]
pub struct CircuitsArgs {
    /// Directory for the files; defaults to `--out`.
    #[arg(long)]
    pub dir: Option<PathBuf>,
}

fn parse_noise(opts: &RunOpts, kind: ScenarioKind) -> Result<NoiseParams> {
    let mut noise = match opts.preset {
        Some(Preset::Paper2009) => paper_2009(kind)?,
        None => NoiseParams::ideal(),
    };
    if opts.incoherent_qplate {
        noise.qplate_model = QPlateModel::Incoherent;
    }
    for kv in &opts.noise {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Configuration(format!("--noise `{kv}`: expected key=value")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Configuration(format!("--noise `{kv}`: `{v}` is not a number")))?;
        noise.set(k.trim(), v)?;
    }
    Ok(noise)
}

fn config(global: &GlobalArgs, noise: NoiseParams) -> Result<RunConfig> {
    Ok(RunConfig {
        noise,
        apparatus: constants::load(global)?,
        shots: global.shots,
        seed: global.seed,
    })
}

fn scenario_options(opts: &RunOpts) -> Result<ScenarioOptions> {
    let delays_ps = if opts.tmin.is_some() || opts.tmax.is_some() || opts.steps.is_some() {
        let (lo, hi) = (opts.tmin.unwrap_or(-1.5), opts.tmax.unwrap_or(1.5));
        Some(uniform_scan(lo, hi, opts.steps.unwrap_or(61)))
    } else {
        None
    };
    Ok(ScenarioOptions {
        input: opts.input.clone(),
        delays_ps,
        basis: opts.basis.as_deref().map(str::parse).transpose()?,
    })
}

fn run(kind: ScenarioKind, opts: &RunOpts, config: &RunConfig) -> Result<ScenarioResult> {
    run_scenario(kind, &scenario_options(opts)?, config)
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn scenario(global: &GlobalArgs, args: &ScenarioArgs) -> Result<()> {
    let kind: ScenarioKind = args.name.parse()?;
    let config = config(global, parse_noise(&args.opts, kind)?)?;
    let result = run(kind, &args.opts, &config)?;
    let name = kind.name();
    let out = &global.out;
    write(
        out,
        &format!("{name}.result.json"),
        result.to_json()?.as_bytes(),
    )?;
    if result.scan.is_some() {
        let mut buf = Vec::new();
        result.write_scan_csv(&mut buf)?;
        let csv_name = format!("{name}.scan.csv");
        write(out, &csv_name, &buf)?;
        let ylabel = if kind == ScenarioKind::HomScan {
            "conditional [D_A,D_B] probability"
        } else {
            "absolute [D_A,D_A'] probability"
        };
        let script = gnuplot(&csv_name, "t_d (ps)", ylabel, &[(2, name)]);
        write(out, &format!("{name}.gp"), script.as_bytes())?;
    }
    if let Some(counts) = &result.counts {
        let mut buf = Vec::new();
        spinorbit::measurement::write_counts_csv(&mut buf, counts)?;
        write(out, &format!("{name}.counts.csv"), &buf)?;
    }
    if global.format == Format::Csv {
        let rows = result
            .probabilities
            .iter()
            .map(|p| vec![p.setting.clone(), p.outcome.clone(), fmt_f64(p.probability)]);
        write(
            out,
            &format!("{name}.probabilities.csv"),
            &csv_bytes(&["setting", "outcome", "probability"], rows)?,
        )?;
        let rows = result
            .metrics
            .iter()
            .map(|(k, v)| vec![k.clone(), fmt_f64(*v)]);
        write(
            out,
            &format!("{name}.metrics.csv"),
            &csv_bytes(&["metric", "value"], rows)?,
        )?;
    }
    println!("{}", result.summary());
    Ok(())
}

pub fn scan(global: &GlobalArgs, args: &ScanArgs) -> Result<()> {
    let kind: ScenarioKind = args.name.parse()?;
    let base = parse_noise(&args.opts, kind)?;
    if args.points == 0 {
        return Err(Error::Configuration("--points must be at least 1".into()));
    }
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::with_capacity(args.points);
    for value in uniform_scan(args.from, args.to, args.points) {
        let mut noise = base;
        noise.set(&args.param, value)?;
        let result = run(kind, &args.opts, &config(global, noise)?)?;
        let names = header.get_or_insert_with(|| result.metrics.keys().cloned().collect());
        let mut row = vec![fmt_f64(value)];
        for n in names.iter() {
            row.push(
                result
                    .metrics
                    .get(n)
                    .map(|v| fmt_f64(*v))
                    .unwrap_or_default(),
            );
        }
        rows.push(row);
    }
    let names = header.unwrap_or_default();
    let mut cols: Vec<&str> = vec![args.param.as_str()];
    cols.extend(names.iter().map(String::as_str));
    let csv_name = format!("{}.{}.sweep.csv", kind.name(), args.param);
    let path = write(&global.out, &csv_name, &csv_bytes(&cols, rows)?)?;
    let plot_cols: Vec<(usize, &str)> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (i + 2, n.as_str()))
        .collect();
    write(
        &global.out,
        &format!("{}.{}.gp", kind.name(), args.param),
        gnuplot(&csv_name, &args.param, "metric", &plot_cols).as_bytes(),
    )?;
    println!(
        "{}: {} values of {} -> {}",
        kind.name(),
        args.points,
        args.param,
        path.display()
    );
    Ok(())
}

pub fn circuit(global: &GlobalArgs, args: &CircuitArgs) -> Result<()> {
    let spec = CircuitSpec::from_json(&read_text(&args.circuit)?)?;
    let circuit: Circuit = spec.build()?;
    let state = PhotonicState::from_json(&read_text(&args.state)?)?;
    let patterns = args
        .measure
        .iter()
        .map(|m| m.parse::<CoincidencePattern>())
        .collect::<Result<Vec<_>>>()?;
    let out_state = circuit.apply(&state)?;
    let name = stem(&args.circuit);
    write(
        &global.out,
        &format!("{name}.state.json"),
        out_state.to_json()?.as_bytes(),
    )?;
    println!(
        "success_probability={:.12}",
        out_state.success_probability()
    );
    let mut rows = Vec::new();
    for p in &patterns {
        let cond = spinorbit::measurement::outcome_probability(&out_state, p, false);
        let abs = spinorbit::measurement::outcome_probability(&out_state, p, true);
        println!("P{}={cond:.12} absolute={abs:.12}", p.label());
        rows.push(vec![p.to_string(), fmt_f64(cond), fmt_f64(abs)]);
    }
    if global.format == Format::Csv && !rows.is_empty() {
        write(
            &global.out,
            &format!("{name}.measure.csv"),
            &csv_bytes(&["pattern", "probability", "absolute"], rows)?,
        )?;
    }
    Ok(())
}

fn bell(name: &str) -> Result<[C64; 4]> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (z, p, m) = (C64::new(0.0, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0));
    Ok(match name {
        "phi+" => [p, z, z, p],
        "phi-" => [p, z, z, m],
        "psi+" => [z, p, p, z],
        "psi-" => [z, p, m, z],
        other => {
            return Err(Error::Configuration(format!(
                "unknown two-qubit target `{other}`; expected phi+, phi-, psi+ or psi-"
            )))
        }
    })
}

fn settings(args: &TomoArgs, global: &GlobalArgs, two: bool) -> TomoSettings {
    let mut s = if two {
        TomoSettings::two_qubit()
    } else {
        TomoSettings::single_qubit()
    };
    match args.pol_encoding {
        Some(EncodingArg::Linear) => s.pol_encoding = PolEncoding::Linear,
        Some(EncodingArg::Circular) => s.pol_encoding = PolEncoding::Circular,
        None => {}
    }
    s.likelihood = match args.likelihood {
        LikelihoodArg::Multinomial => LikelihoodModel::Multinomial,
        LikelihoodArg::Poisson => LikelihoodModel::Poisson,
    };
    if let Some(r) = args.restarts {
        s.restarts = r;
    }
    s.seed = global.seed;
    s
}

fn write_matrix(global: &GlobalArgs, name: &str, json: String, metrics: &MetricsDoc) -> Result<()> {
    write(&global.out, name, json.as_bytes())?;
    let stem = name.rsplit_once('.').map_or(name, |(s, _)| s);
    let stem = stem.rsplit_once('.').map_or(stem, |(s, _)| s);
    write(
        &global.out,
        &format!("{stem}.metrics.json"),
        serde_json::to_string_pretty(metrics)?.as_bytes(),
    )?;
    Ok(())
}

fn report_mle(mle: &MleOutcome) {
    println!(
        "converged: {} (iterations {}, starts {}, log-likelihood {:.9})",
        mle.converged, mle.iterations, mle.starts, mle.log_likelihood
    );
}

pub fn tomo(global: &GlobalArgs, args: &TomoArgs) -> Result<()> {
    let records = read_counts_csv(output::open(&args.counts)?)?;
    let name = stem(&args.counts);
    match args.mode {
        TomoMode::State1 | TomoMode::State2 => {
            let two = args.mode == TomoMode::State2;
            let mle = match mle_state_tomo(&records, &settings(args, global, two)) {
                Ok(m) => m,
                Err(Error::NonConvergence { best, .. }) => *best,
                Err(e) => return Err(e),
            };
            report_mle(&mle);
            let mut metrics = MetricsDoc {
                converged: mle.converged,
                ..MetricsDoc::default()
            };
            if two {
                metrics.concurrence = Some(concurrence(&mle.rho)?);
                let target = bell(args.target.as_deref().unwrap_or("phi+"))?;
                metrics.fidelity = Some(pure_state_fidelity(&mle.rho, &target)?);
            } else if let Some(t) = &args.target {
                let q: QubitInput = t.parse()?;
                metrics.fidelity = Some(pure_state_fidelity(&mle.rho, &q.amplitudes)?);
            }
            print_metrics(&metrics);
            write_matrix(
                global,
                &format!("{name}.rho.json"),
                mle.rho.to_json()?,
                &metrics,
            )
        }
        TomoMode::Process => {
            let mut groups: BTreeMap<String, Vec<CountRecord>> = BTreeMap::new();
            for r in records {
                let (input, setting) = r
                    .setting
                    .strip_prefix("in=")
                    .and_then(|s| s.split_once(':'))
                    .ok_or_else(|| {
                        Error::Data(format!(
                            "process counts need settings of the form `in=<state>:<basis>`, got `{}`",
                            r.setting
                        ))
                    })?;
                let rec = CountRecord {
                    setting: setting.to_owned(),
                    ..r.clone()
                };
                groups.entry(input.to_owned()).or_default().push(rec);
            }
            let mut inputs = Vec::new();
            let mut outputs = Vec::new();
            for (label, recs) in &groups {
                let q: QubitInput = label.parse()?;
                inputs.push(DensityMatrix::pure(&q.amplitudes)?);
                outputs.push(stokes_reconstruct(recs)?.rho);
            }
            let process = process_tomo(&inputs, &outputs)?;
            let metrics = MetricsDoc {
                chi_ii: Some(process.chi.chi_ii()),
                converged: true,
                ..MetricsDoc::default()
            };
            let labels: BTreeSet<&str> = groups.keys().map(String::as_str).collect();
            println!(
                "inputs: {}; projection distance {:.3e}",
                labels.into_iter().collect::<Vec<_>>().join(","),
                process.projection_distance
            );
            print_metrics(&metrics);
            let json = serde_json::to_string_pretty(&process.chi.to_doc())?;
            write_matrix(global, &format!("{name}.chi.json"), json, &metrics)
        }
    }
}

fn print_metrics(m: &MetricsDoc) {
    let mut parts = Vec::new();
    for (k, v) in [
        ("concurrence", m.concurrence),
        ("fidelity", m.fidelity),
        ("chi_II", m.chi_ii),
    ] {
        if let Some(v) = v {
            parts.push(format!("{k}={v:.6}"));
        }
    }
    println!("{}", parts.join(" "));
}

pub fn circuits(global: &GlobalArgs, args: &CircuitsArgs) -> Result<()> {
    let dir = args.dir.clone().unwrap_or_else(|| global.out.clone());
    let config = config(global, NoiseParams::ideal())?;
    let mut written = Vec::new();
    for (name, spec) in scenarios::scenario_circuits(&config)? {
        let json = spec.to_json()?;
        if name == "hom-scan" {
            written.push(write(&dir, "fig1.json", json.as_bytes())?);
        }
        written.push(write(&dir, &format!("{name}.json"), json.as_bytes())?);
    }
    let biphoton = scenarios::biphoton_input(config.apparatus.n_max)?;
    written.push(write(
        &dir,
        "biphoton.json",
        biphoton.to_json()?.as_bytes(),
    )?);
    let photon = PhotonicState::from_modes(
        config.apparatus.n_max,
        &[spinorbit::ModeKey::new("a", spinorbit::Pol::H, 0, 0)],
    )?;
    written.push(write(&dir, "photon_H.json", photon.to_json()?.as_bytes())?);
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}
