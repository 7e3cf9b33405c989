//! Scenario execution: build the transport problem, run every target, and
//! write one CSV per target plus a JSON manifest.
//!
//! Reproducibility contract: with a fixed seed the CSV bytes are identical
//! for any worker count. All Monte Carlo goes through the batch-ordered
//! runner, floats are printed with a fixed format, and rows are emitted in a
//! fixed order. Only the manifest carries run-dependent timing.

use cbs_core::diffusion::{cone_closed_form, cone_quadrature, diffusion_params};
use cbs_core::estimators::{
    estimate_backscatter_peak, estimate_sigma_analog, estimate_sigma_nee, factor_two_check,
};
use cbs_core::rng::{batch_count, splitmix64, BATCH_SIZE};
use cbs_core::{RunStats, ShellKernel, SourceSpec, Transport, Vec3};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::{ValidatedScenario, ValidatedTarget};
use crate::CliError;

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub paths: u64,
    pub workers: usize,
    pub batch_size: u64,
    pub n_batches: u64,
    pub elapsed_seconds: f64,
    pub warnings: Vec<String>,
    pub targets: Vec<TargetRecord>,
}

#[derive(Debug, Serialize)]
pub struct TargetRecord {
    pub index: usize,
    pub kind: String,
    pub file: String,
    /// Master seed of this target's random streams.
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<StatsRecord>,
}

#[derive(Debug, Serialize)]
pub struct StatsRecord {
    pub n_paths: u64,
    pub escaped: u64,
    pub truncated: u64,
    pub collisions: u64,
}

impl From<RunStats> for StatsRecord {
    fn from(s: RunStats) -> Self {
        StatsRecord {
            n_paths: s.n_paths,
            escaped: s.escaped,
            truncated: s.truncated,
            collisions: s.collisions,
        }
    }
}

/// Fixed float serialization: 17 significant digits, scientific.
fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let mut f = std::fs::File::create(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Per-target stream seed, derived so targets never share streams.
fn target_seed(master: u64, index: usize) -> u64 {
    let mut state = master ^ (index as u64 + 1);
    splitmix64(&mut state)
}

pub fn run_scenario(
    scenario: &ValidatedScenario,
    config_text: &str,
    out_dir: &Path,
) -> Result<(Manifest, Vec<PathBuf>), CliError> {
    let started = std::time::Instant::now();
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;

    let kern = ShellKernel::new(&scenario.medium, scenario.energy)?;
    let source = SourceSpec::new(&kern, scenario.k, scenario.plane_margin, scenario.window_margin)?;
    let mut transport = Transport::new(&kern, &source);
    if let Some(cap) = scenario.collision_cap {
        transport.collision_cap = cap;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(scenario.workers)
        .build()
        .map_err(|e| CliError::Validation(format!("cannot build worker pool: {e}")))?;

    let mut records = Vec::new();
    let mut files = Vec::new();
    for (index, target) in scenario.targets.iter().enumerate() {
        let seed = target_seed(scenario.seed, index);
        let (kind, csv, stats) = pool.install(|| -> Result<_, CliError> {
            run_target(scenario, &transport, target, seed)
        })?;
        let file = format!("{index:02}_{kind}.csv");
        let path = out_dir.join(&file);
        write_file(&path, &csv)?;
        files.push(path);
        records.push(TargetRecord {
            index,
            kind: kind.to_string(),
            file,
            seed,
            stats: stats.map(StatsRecord::from),
        });
    }

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: format!("{:x}", Sha256::digest(config_text.as_bytes())),
        seed: scenario.seed,
        paths: scenario.paths,
        workers: scenario.workers,
        batch_size: BATCH_SIZE,
        n_batches: batch_count(scenario.paths),
        elapsed_seconds: started.elapsed().as_secs_f64(),
        warnings: scenario.warnings.clone(),
        targets: records,
    };
    let manifest_path = out_dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Io(format!("cannot serialize manifest: {e}")))?;
    write_file(&manifest_path, &json)?;
    files.push(manifest_path);
    Ok((manifest, files))
}

fn run_target(
    scenario: &ValidatedScenario,
    transport: &Transport,
    target: &ValidatedTarget,
    seed: u64,
) -> Result<(&'static str, String, Option<RunStats>), CliError> {
    let n = scenario.paths;
    match target {
        ValidatedTarget::SigmaHistogram { bands, sectors } => {
            let (sig, stats) = estimate_sigma_analog(transport, *bands, *sectors, n, seed);
            let mut csv = String::from("band,sector,mu_center,phi_center,value,stderr,count\n");
            for band in 0..*bands {
                for sector in 0..*sectors {
                    let bin = band * sectors + sector;
                    let mu = -1.0 + 2.0 * (band as f64 + 0.5) / *bands as f64;
                    let phi = 2.0 * std::f64::consts::PI * (sector as f64 + 0.5) / *sectors as f64;
                    let (v, e) = sig.value(bin);
                    csv.push_str(&format!(
                        "{band},{sector},{},{},{},{},{}\n",
                        fmt_f(mu),
                        fmt_f(phi),
                        fmt_f(v),
                        fmt_f(e),
                        sig.hist.bins[bin].count
                    ));
                }
            }
            Ok(("sigma_histogram", csv, Some(stats)))
        }
        ValidatedTarget::SigmaNee { directions } => {
            let (nee, stats) = estimate_sigma_nee(transport, directions, n, seed)?;
            let mut csv = String::from(
                "kx,ky,kz,total,total_stderr,single,single_stderr,multiple,multiple_stderr\n",
            );
            for (i, d) in directions.iter().enumerate() {
                let (t, te) = nee.value(i);
                let (s, se) = nee.single_collision(i);
                let (m, me) = nee.multiple_collision(i);
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    fmt_f(d.x),
                    fmt_f(d.y),
                    fmt_f(d.z),
                    fmt_f(t),
                    fmt_f(te),
                    fmt_f(s),
                    fmt_f(se),
                    fmt_f(m),
                    fmt_f(me)
                ));
            }
            Ok(("sigma_nee", csv, Some(stats)))
        }
        ValidatedTarget::Peak { kappas } => {
            let (profile, stats) = estimate_backscatter_peak(transport, kappas, n, seed)?;
            let csv = peak_csv(&profile);
            Ok(("peak", csv, Some(stats)))
        }
        ValidatedTarget::FactorTwo => {
            let (profile, stats) = estimate_backscatter_peak(transport, &[Vec3::ZERO], n, seed)?;
            let ft = factor_two_check(&profile)?;
            let csv = format!(
                "back_total,twice_background,stderr,enhancement_at_zero\n{},{},{},{}\n",
                fmt_f(ft.back_total),
                fmt_f(ft.twice_background),
                fmt_f(ft.stderr),
                fmt_f(ft.enhancement_at_zero)
            );
            Ok(("factor_two", csv, Some(stats)))
        }
        ValidatedTarget::DiffusionCompare { kappa_ell } => {
            let params = diffusion_params(&scenario.medium, scenario.k)?;
            let ell = params.mean_free_path;
            let mut csv = String::from("ell_kappa,kappa,closed_form,quadrature,rel_diff\n");
            for &x in kappa_ell {
                let kappa = x / ell;
                let closed = cone_closed_form(&params, kappa);
                let quad = cone_quadrature(&params, kappa)?;
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt_f(x),
                    fmt_f(kappa),
                    fmt_f(closed),
                    fmt_f(quad),
                    fmt_f((quad - closed) / closed)
                ));
            }
            Ok(("diffusion_compare", csv, None))
        }
    }
}

fn peak_csv(profile: &cbs_core::PeakProfile) -> String {
    let mut csv = String::from(
        "kappa_x,kappa_y,kappa_z,coherent_re,coherent_im,coherent_stderr,\
         incoherent,incoherent_stderr,single_scatter,single_scatter_stderr,enhancement\n",
    );
    for (i, kappa) in profile.kappas.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_f(kappa.x),
            fmt_f(kappa.y),
            fmt_f(kappa.z),
            fmt_f(profile.coherent[i].re),
            fmt_f(profile.coherent[i].im),
            fmt_f(profile.coherent_stderr[i]),
            fmt_f(profile.incoherent),
            fmt_f(profile.incoherent_stderr),
            fmt_f(profile.single_scatter),
            fmt_f(profile.single_scatter_stderr),
            fmt_f(profile.enhancement(i))
        ));
    }
    csv
}
