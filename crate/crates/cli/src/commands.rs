use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use noiseband::cleanrisk::{clean_with, flat_value_rules, risk_bias_backtest, BacktestConfig, CleanOptions};
use noiseband::format::{fmt_csv, to_json_string};
use noiseband::panel::{log_returns, read_wide_csv, write_wide_csv, ReturnPanel};
use noiseband::pipeline::{
    analyze_spectrum, analyze_structure, build_report, eigenvalue_histogram, stage, AnalysisConfig, InStage,
    Provenance, SpectralAnalysis, StageError,
};
use noiseband::series::{
    read_eigenvalues_csv, write_eigenvalues_csv, write_histogram_csv, write_matrix_csv,
    write_participation_csv, write_relative_ipr_csv,
};
use noiseband::simulate::{simulate_panel, SimConfig};
use noiseband::spectral::{
    eigendecompose, fit_mp, grmt_participation_baseline, participation_series, relative_ipr_series, MpFit,
    ParticipationPoint, RelativeIprPoint,
};
use noiseband::structure::{
    estimate_block_model, expand_block_model, read_partition_csv, write_partition_csv, BlockModel,
    BlockModelSpec, GroupPartition, Threshold,
};
use noiseband::{Error, Result as CoreResult};

use crate::output::{CliError, Output};
use crate::{Cli, Command, GroupArgs, PanelInput};

type Result<T> = std::result::Result<T, CliError>;

/// Upper edge of the eigenvalue histogram in units of the fitted λ+.
const HISTOGRAM_SPAN: f64 = 2.0;

pub fn run(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Analyze { panel, groups, bins } => analyze(cli, panel, groups, *bins),
        Command::FitMp {
            input,
            prices,
            eigenvalues,
            n_signal,
        } => fit(input.as_deref(), *prices, eigenvalues.as_deref(), *n_signal),
        Command::Ipr { panel, partition } => ipr(panel, partition.as_deref()),
        Command::Groups { panel, groups } => groups_cmd(panel, groups),
        Command::Model {
            input,
            prices,
            partition,
            reference,
            groups,
        } => model(input.as_deref(), *prices, partition.as_deref(), *reference, groups),
        Command::Clean {
            panel,
            k,
            flat_value,
            renormalize,
        } => clean(panel, *k, flat_value.name(), *renormalize),
        Command::Simulate {
            model,
            mode,
            nu,
            t,
            out,
        } => simulate(cli.seed, model, mode.name(), *nu, *t, out),
        Command::Backtest {
            model,
            t_in,
            t_out,
            trials,
            k_signal,
            flat_value,
            sampler,
            nu,
            renormalize,
        } => {
            let m = read_model(model)?;
            let mut cfg = BacktestConfig::for_model(&m);
            cfg.seed = cli.seed;
            cfg.trials = *trials;
            cfg.t_in = t_in.unwrap_or(cfg.t_in);
            cfg.t_out = t_out.unwrap_or(cfg.t_out);
            cfg.k_signal = k_signal.unwrap_or(cfg.k_signal);
            cfg.flat_value = flat_value.name().into();
            cfg.sampler = sampler.name().into();
            cfg.nu = *nu;
            cfg.renormalize = *renormalize;
            backtest(&m, &cfg)
        }
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    to_json_string(value).map_err(|e| {
        CliError::Stage(StageError {
            stage: "output",
            source: Error::Json(e),
        })
    })
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> CoreResult<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf).in_stage("output")?;
    Ok(buf)
}

fn csv_string(f: impl FnOnce(&mut Vec<u8>) -> CoreResult<()>) -> Result<String> {
    String::from_utf8(csv_bytes(f)?).map_err(|e| CliError::Usage(e.to_string()))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn load_panel(path: &Path, prices: bool) -> Result<(ReturnPanel, Vec<u8>)> {
    let bytes = read_bytes(path)?;
    let table = read_wide_csv(bytes.as_slice()).in_stage(stage::INGEST)?;
    let panel = if prices {
        log_returns(&table)
    } else {
        ReturnPanel::from_table(table)
    }
    .in_stage(stage::INGEST)?;
    Ok((panel, bytes))
}

fn read_model(path: &Path) -> Result<BlockModel> {
    let bytes = read_bytes(path)?;
    let spec: BlockModelSpec = serde_json::from_slice(&bytes)
        .map_err(Error::Json)
        .in_stage(stage::INGEST)?;
    Ok(BlockModel::try_from(spec).in_stage(stage::INGEST)?)
}

fn read_partition(path: &Path, assets: &[String]) -> Result<GroupPartition> {
    let bytes = read_bytes(path)?;
    Ok(read_partition_csv(bytes.as_slice(), assets).in_stage(stage::INGEST)?)
}

fn analysis_config(g: &GroupArgs) -> AnalysisConfig {
    AnalysisConfig {
        k_factors: g.k_factors,
        threshold_mult: g.threshold,
        n_signal: g.n_signal,
        split: !g.no_split,
        ..AnalysisConfig::default()
    }
}

fn mp_fit_csv(fit: &MpFit) -> String {
    format!(
        "sigma_eff,q_eff,lambda_minus,lambda_plus,n_signal,objective\n{},{},{},{},{},{}\n",
        fmt_csv(fit.sigma_eff),
        fmt_csv(fit.q_eff),
        fmt_csv(fit.lambda_minus),
        fmt_csv(fit.lambda_plus),
        fit.n_signal,
        fmt_csv(fit.objective)
    )
}

fn block_model_csv(m: &BlockModel) -> String {
    let mut s = String::from("group,degeneracy,rho\n");
    for g in m.groups() {
        s.push_str(&format!("{},{},{}\n", g.name, g.degeneracy, fmt_csv(g.rho)));
    }
    s
}

fn spectral_files(out: &mut Output, s: &SpectralAnalysis, bins: usize) -> Result<()> {
    let values = s.eigen.values();
    out.file("eigenvalues.csv", csv_bytes(|w| write_eigenvalues_csv(w, values))?);
    let hist = eigenvalue_histogram(values, &s.mp_fit, bins.max(1), HISTOGRAM_SPAN * s.mp_fit.lambda_plus);
    out.file("eigen_histogram.csv", csv_bytes(|w| write_histogram_csv(w, &hist))?);
    out.file("mp_fit.json", json(&s.mp_fit)?.into_bytes());
    out.file("participation.csv", csv_bytes(|w| write_participation_csv(w, &s.participation))?);
    Ok(())
}

fn analyze(cli: &Cli, input: &PanelInput, g: &GroupArgs, bins: usize) -> Result<Output> {
    let (panel, bytes) = load_panel(&input.input, input.prices)?;
    let cfg = analysis_config(g);
    let s = analyze_spectrum(&panel, &cfg)?;
    let mut out = Output::default();
    spectral_files(&mut out, &s, bins)?;
    let structure = match analyze_structure(&s, &cfg) {
        Ok(x) => x,
        Err(e) => {
            out.failure = Some(e.into());
            return Ok(out);
        }
    };
    let assets = s.correlation.assets();
    out.file(
        "partition.csv",
        csv_bytes(|w| write_partition_csv(w, &structure.partition, assets))?,
    );
    out.file(
        "relative_ipr.csv",
        csv_bytes(|w| write_relative_ipr_csv(w, &structure.relative_ipr))?,
    );
    out.file("block_model.json", json(&structure.block_model)?.into_bytes());
    let provenance = Provenance {
        input_sha256: sha256_hex(&bytes),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seeds: vec![cli.seed],
        first_timestamp: panel.timestamps().first().cloned().unwrap_or_default(),
        last_timestamp: panel.timestamps().last().cloned().unwrap_or_default(),
        n_assets: panel.n_assets(),
        n_steps: panel.n_steps(),
    };
    let report = json(&build_report(&s, &structure, &cfg, provenance))?;
    out.file("report.json", report.clone().into_bytes());
    out.json = Some(report);
    out.csv = Some(block_model_csv(&structure.block_model));
    Ok(out)
}

fn fit(input: Option<&Path>, prices: bool, eigenvalues: Option<&Path>, n_signal: Option<usize>) -> Result<Output> {
    let values = match (input, eigenvalues) {
        (_, Some(path)) => read_eigenvalues_csv(read_bytes(path)?.as_slice()).in_stage(stage::INGEST)?,
        (Some(path), None) => {
            let (panel, _) = load_panel(path, prices)?;
            let c = noiseband::panel::empirical_correlation(&panel).in_stage(stage::CORRELATION)?;
            eigendecompose(&c).in_stage(stage::EIGEN)?.values().to_vec()
        }
        (None, None) => return Err(CliError::Usage("either --input or --eigenvalues is required".into())),
    };
    let fit = fit_mp(&values, n_signal).in_stage(stage::MP_FIT)?;
    let mut out = Output::default();
    out.file("eigenvalues.csv", csv_bytes(|w| write_eigenvalues_csv(w, &values))?);
    let text = json(&fit)?;
    out.file("mp_fit.json", text.clone().into_bytes());
    out.json = Some(text);
    out.csv = Some(mp_fit_csv(&fit));
    Ok(out)
}

#[derive(Serialize)]
struct IprOutput<'a> {
    grmt_baseline: f64,
    participation: &'a [ParticipationPoint],
    #[serde(skip_serializing_if = "Option::is_none")]
    relative_ipr: Option<&'a [RelativeIprPoint]>,
}

fn ipr(input: &PanelInput, partition: Option<&Path>) -> Result<Output> {
    let (panel, _) = load_panel(&input.input, input.prices)?;
    let c = noiseband::panel::empirical_correlation(&panel).in_stage(stage::CORRELATION)?;
    let es = eigendecompose(&c).in_stage(stage::EIGEN)?;
    let participation = participation_series(&es).in_stage(stage::IPR)?;
    let relative = match partition {
        Some(path) => {
            let p = read_partition(path, c.assets())?;
            Some(relative_ipr_series(&es, &p).in_stage(stage::IPR)?)
        }
        None => None,
    };
    let mut out = Output::default();
    out.file("participation.csv", csv_bytes(|w| write_participation_csv(w, &participation))?);
    if let Some(r) = &relative {
        out.file("relative_ipr.csv", csv_bytes(|w| write_relative_ipr_csv(w, r))?);
    }
    out.json = Some(json(&IprOutput {
        grmt_baseline: grmt_participation_baseline(es.dim()),
        participation: &participation,
        relative_ipr: relative.as_deref(),
    })?);
    out.csv = Some(csv_string(|w| write_participation_csv(w, &participation))?);
    Ok(out)
}

#[derive(Serialize)]
struct GroupOut {
    name: String,
    degeneracy: usize,
    assets: Vec<String>,
}

#[derive(Serialize)]
struct GroupsOutput {
    n_signal: usize,
    groups: Vec<GroupOut>,
    thresholds: Vec<Threshold>,
    overlap: usize,
    g1_fallback: bool,
}

fn groups_cmd(input: &PanelInput, g: &GroupArgs) -> Result<Output> {
    let (panel, _) = load_panel(&input.input, input.prices)?;
    let cfg = analysis_config(g);
    let s = analyze_spectrum(&panel, &cfg)?;
    let structure = analyze_structure(&s, &cfg)?;
    let assets = s.correlation.assets();
    let p = &structure.partition;
    let report = GroupsOutput {
        n_signal: s.mp_fit.n_signal,
        groups: p
            .groups()
            .iter()
            .map(|grp| GroupOut {
                name: grp.name.clone(),
                degeneracy: grp.degeneracy(),
                assets: grp.members.iter().map(|&i| assets[i].clone()).collect(),
            })
            .collect(),
        thresholds: p.thresholds().to_vec(),
        overlap: structure.overlap,
        g1_fallback: structure.g1_fallback,
    };
    let mut out = Output::default();
    let partition_csv = csv_string(|w| write_partition_csv(w, p, assets))?;
    out.file("partition.csv", partition_csv.clone().into_bytes());
    let text = json(&report)?;
    out.file("groups.json", text.clone().into_bytes());
    out.json = Some(text);
    out.csv = Some(partition_csv);
    Ok(out)
}

fn model(
    input: Option<&Path>,
    prices: bool,
    partition: Option<&Path>,
    reference: bool,
    g: &GroupArgs,
) -> Result<Output> {
    let m = match (reference, input) {
        (true, _) => BlockModel::four_group_reference(),
        (false, Some(path)) => {
            let (panel, _) = load_panel(path, prices)?;
            match partition {
                Some(pp) => {
                    let c = noiseband::panel::empirical_correlation(&panel).in_stage(stage::CORRELATION)?;
                    let p = read_partition(pp, c.assets())?;
                    estimate_block_model(&c, &p).in_stage(stage::BLOCK_MODEL)?
                }
                None => {
                    let cfg = analysis_config(g);
                    let s = analyze_spectrum(&panel, &cfg)?;
                    analyze_structure(&s, &cfg)?.block_model
                }
            }
        }
        (false, None) => return Err(CliError::Usage("either --input or --reference is required".into())),
    };
    let mut out = Output::default();
    let text = json(&m)?;
    out.file("block_model.json", text.clone().into_bytes());
    out.json = Some(text);
    out.csv = Some(block_model_csv(&m));
    Ok(out)
}

#[derive(Serialize)]
struct CleanOutput<'a> {
    k: usize,
    rule: &'a str,
    renormalize: bool,
    flat_value: f64,
    trace: f64,
    eigenvalues: Vec<f64>,
}

fn clean(input: &PanelInput, k: Option<usize>, rule_name: &str, renormalize: bool) -> Result<Output> {
    let (panel, _) = load_panel(&input.input, input.prices)?;
    let c = noiseband::panel::empirical_correlation(&panel).in_stage(stage::CORRELATION)?;
    let es = eigendecompose(&c).in_stage(stage::EIGEN)?;
    let k = match k {
        Some(k) => k,
        None => fit_mp(es.values(), None).in_stage(stage::MP_FIT)?.n_signal,
    };
    let rules = flat_value_rules();
    let rule = rules.get(rule_name).in_stage(stage::CLEAN)?;
    let cleaned = clean_with(&es, k, rule, CleanOptions { renormalize }).in_stage(stage::CLEAN)?;
    let matrix = csv_string(|w| write_matrix_csv(w, c.assets(), cleaned.entries()))?;
    let text = json(&CleanOutput {
        k,
        rule: rule.name(),
        renormalize,
        flat_value: cleaned.flat_value(),
        trace: cleaned.entries().trace(),
        eigenvalues: cleaned.cleaned_values(),
    })?;
    let mut out = Output::default();
    out.file("cleaned_correlation.csv", matrix.clone().into_bytes());
    out.file("clean.json", text.clone().into_bytes());
    out.json = Some(text);
    out.csv = Some(matrix);
    Ok(out)
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    config: &'a SimConfig,
    n_assets: usize,
    panel_sha256: String,
}

fn simulate(seed: u64, model_path: &Path, mode: &str, nu: f64, t: usize, out_path: &Path) -> Result<Output> {
    let m = read_model(model_path)?;
    let cfg = SimConfig::new(t, nu, seed, mode).in_stage(stage::SIMULATE)?;
    let panel = simulate_panel(&expand_block_model(&m), &cfg).in_stage(stage::SIMULATE)?;
    let bytes = csv_bytes(|w| write_wide_csv(w, &panel.into_table()))?;
    fs::write(out_path, &bytes).map_err(|source| CliError::Io {
        path: out_path.to_path_buf(),
        source,
    })?;
    Ok(Output {
        json: Some(json(&SimulateOutput {
            config: &cfg,
            n_assets: m.n_assets(),
            panel_sha256: sha256_hex(&bytes),
        })?),
        ..Output::default()
    })
}

fn backtest(m: &BlockModel, cfg: &BacktestConfig) -> Result<Output> {
    let report = risk_bias_backtest(m, cfg).in_stage(stage::BACKTEST)?;
    let mut csv = String::from("subband,size,delta_r,stderr\n");
    for s in &report.subbands {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            s.name,
            s.size,
            fmt_csv(report.delta_r[&s.name]),
            fmt_csv(report.stderr[&s.name])
        ));
    }
    let n_noise = m.n_assets() - m.groups().len();
    csv.push_str(&format!(
        "all,{n_noise},{},{}\n",
        fmt_csv(report.delta_r_all),
        fmt_csv(report.stderr_all)
    ));
    let text = json(&report)?;
    let mut out = Output::default();
    out.file("backtest.json", text.clone().into_bytes());
    out.json = Some(text);
    out.csv = Some(csv);
    Ok(out)
}
