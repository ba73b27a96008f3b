use majorana_core::analysis::{self, common_part_compare, zero_mode_distribution, ChainSpectrum};
use majorana_core::bethe::{self, BetheRoot};
use majorana_core::io::{matrix_to_text, pair, pairs, EigenSystemJson, MatrixJson};
use majorana_core::model::{build_majorana_ring, build_ssh, build_ssh_on_locus, ModelParams};
use majorana_core::spectral::{
    classify_modes, detect_coalescence, eig, eig_split, pseudo_hermiticity_check, ModeCensus, ModeClass, Precision,
};
use majorana_core::verify::{self, VerifyConfig};
use serde::Serialize;

use crate::args::{Command, Format, ModelKind, RunConfig};
use crate::output::{config_comment, csv_with_config, json_with_config};
use crate::svg::{stem_panels, Panel};
use crate::CliError;

/// Rendered artifact plus whether the run counts as a success.
pub struct Artifact {
    pub body: String,
    pub passed: bool,
}

impl Artifact {
    fn ok(body: String) -> Self {
        Self { body, passed: true }
    }
}

pub fn run(cfg: &RunConfig) -> Result<Artifact, CliError> {
    match cfg.command {
        Command::Spectrum => spectrum(cfg),
        Command::ZeroMode => zero_mode(cfg),
        Command::Bethe => bethe_roots(cfg),
        Command::Census => census(cfg),
        Command::Sweep => sweep(cfg),
        Command::Verify => verify(cfg),
        Command::Plot => plot(cfg),
    }
}

fn unsupported(cfg: &RunConfig) -> CliError {
    CliError::Usage(format!(
        "format {:?} is not available for {:?}",
        cfg.format, cfg.command
    ))
}

fn class_name(c: ModeClass) -> &'static str {
    match c {
        ModeClass::RealScattering => "real_scattering",
        ModeClass::ZeroCoalescing => "zero_coalescing",
        ModeClass::ImaginaryEvanescent => "imaginary_evanescent",
    }
}

#[derive(Serialize)]
struct CensusJson {
    #[serde(rename = "n_I")]
    n_imaginary: usize,
    #[serde(rename = "n_EP")]
    n_ep: usize,
    #[serde(rename = "n_S")]
    n_scattering: usize,
    consistent: bool,
    edge_modes: usize,
}

impl From<ModeCensus> for CensusJson {
    fn from(c: ModeCensus) -> Self {
        Self {
            n_imaginary: c.n_imaginary,
            n_ep: c.n_ep,
            n_scattering: c.n_scattering,
            consistent: c.is_consistent(),
            edge_modes: c.edge_modes(),
        }
    }
}

/// Chain spectrum for the configured model. `gamma auto` on the SSH chain
/// uses the extended-precision coupling.
fn chain_spectrum(cfg: &RunConfig) -> Result<(majorana_core::matrix::ComplexMatrix, ChainSpectrum), CliError> {
    let tol = cfg.tolerances;
    let (h, es) = match (cfg.model, cfg.gamma_is_auto()) {
        (ModelKind::Ssh, true) => {
            let chain = build_ssh_on_locus(cfg.n_sites, cfg.mu).map_err(CliError::usage)?;
            let es = eig_split(&chain.matrix, &chain.tail, tol.residual, Precision::Auto)?;
            (chain.matrix, es)
        }
        (ModelKind::Ssh, false) => {
            let h = build_ssh(cfg.n_sites, cfg.mu, cfg.gamma).map_err(CliError::usage)?;
            let es = eig(&h, tol.residual)?;
            (h, es)
        }
        (ModelKind::Ring, _) => {
            let params =
                ModelParams::new(cfg.n_sites, cfg.t, cfg.delta, cfg.mu, cfg.gamma).map_err(CliError::usage)?;
            let h = build_majorana_ring(&params);
            let es = eig(&h, tol.residual)?;
            (h, es)
        }
    };
    let (modes, census) = classify_modes(&es, &tol).map_err(|e| CliError::Classification(e.to_string()))?;
    Ok((
        h,
        ChainSpectrum {
            n_sites: cfg.n_sites,
            mu: cfg.mu,
            gamma: cfg.gamma,
            eigensystem: es,
            modes,
            census,
        },
    ))
}

fn spectrum(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let (h, chain) = chain_spectrum(cfg)?;
    let es = &chain.eigensystem;
    let scale = es.max_modulus().max(1.0);
    let pseudo = pseudo_hermiticity_check(&es.eigenvalues, cfg.tolerances.class * scale);
    let clusters = detect_coalescence(es, cfg.tolerances.ep);
    match cfg.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Mode {
                eigenvalue: [f64; 2],
                class: &'static str,
                biorth_norm: [f64; 2],
            }
            #[derive(Serialize)]
            struct Body {
                matrix: MatrixJson,
                eigensystem: EigenSystemJson,
                modes: Vec<Mode>,
                census: CensusJson,
                pseudo_hermiticity: bool,
                ep_clusters: usize,
            }
            let body = Body {
                matrix: MatrixJson::from(&h),
                eigensystem: EigenSystemJson::new(es, cfg.vectors),
                modes: chain
                    .modes
                    .iter()
                    .map(|m| Mode {
                        eigenvalue: pair(m.eigenvalue),
                        class: class_name(m.mode_class),
                        biorth_norm: pair(m.biorth_norm),
                    })
                    .collect(),
                census: chain.census.into(),
                pseudo_hermiticity: pseudo.holds,
                ep_clusters: clusters.len(),
            };
            Ok(Artifact::ok(json_with_config(cfg, &body)?))
        }
        Format::Csv => {
            let rows = chain.modes.iter().enumerate().map(|(i, m)| {
                vec![
                    i.to_string(),
                    m.eigenvalue.re.to_string(),
                    m.eigenvalue.im.to_string(),
                    class_name(m.mode_class).to_string(),
                    es.residuals[i].to_string(),
                    m.biorth_norm.re.to_string(),
                    m.biorth_norm.im.to_string(),
                ]
            });
            Ok(Artifact::ok(csv_with_config(
                cfg,
                &["index", "re", "im", "class", "residual", "biorth_re", "biorth_im"],
                rows,
            )?))
        }
        Format::Text => {
            let mut s = config_comment(cfg);
            s.push_str("matrix:\n");
            s.push_str(&matrix_to_text(&h));
            s.push_str("eigenvalues:\n");
            for (i, m) in chain.modes.iter().enumerate() {
                s.push_str(&format!(
                    "{i:>4}  {:>24.16e} {:>24.16e}  {:<20}  residual {:.2e}  |<w|v>| {:.2e}\n",
                    m.eigenvalue.re,
                    m.eigenvalue.im,
                    class_name(m.mode_class),
                    es.residuals[i],
                    m.biorth_norm.norm()
                ));
            }
            let (ni, nep, ns) = chain.census.as_tuple();
            s.push_str(&format!(
                "census: n_I={ni} n_EP={nep} n_S={ns}\npseudo_hermiticity: {}\n",
                pseudo.holds
            ));
            Ok(Artifact::ok(s))
        }
        Format::Svg => Err(unsupported(cfg)),
    }
}

fn require_locus(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.gamma_is_auto() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "{:?} is defined on the exceptional-point locus; use --gamma auto",
            cfg.command
        )))
    }
}

fn zero_mode(cfg: &RunConfig) -> Result<Artifact, CliError> {
    require_locus(cfg)?;
    let zm = bethe::zero_mode(cfg.n_sites, cfg.mu, cfg.side_value).map_err(CliError::usage)?;
    let h = build_ssh(cfg.n_sites, cfg.mu, cfg.gamma).map_err(CliError::usage)?;
    let applied = match cfg.side_value {
        bethe::Side::Right => h.mul_vec(&zm.amplitudes),
        bethe::Side::Left => h.adjoint().mul_vec(&zm.amplitudes),
    };
    let residual = applied.iter().map(|z| z.norm()).fold(0.0, f64::max);
    match cfg.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Body {
                omega: f64,
                amplitudes: Vec<[f64; 2]>,
                distribution: Vec<f64>,
                residual: f64,
            }
            let body = Body {
                omega: zm.omega,
                amplitudes: pairs(&zm.amplitudes),
                distribution: zm.amplitudes.iter().map(|z| z.norm()).collect(),
                residual,
            };
            Ok(Artifact::ok(json_with_config(cfg, &body)?))
        }
        Format::Csv => {
            let rows = zm.amplitudes.iter().enumerate().map(|(i, z)| {
                vec![(i + 1).to_string(), z.re.to_string(), z.im.to_string(), z.norm().to_string()]
            });
            Ok(Artifact::ok(csv_with_config(cfg, &["j", "re", "im", "P_j"], rows)?))
        }
        Format::Text => {
            let mut s = config_comment(cfg);
            s.push_str(&format!("omega: {}\nresidual: {residual:.3e}\n", zm.omega));
            for (i, z) in zm.amplitudes.iter().enumerate() {
                s.push_str(&format!("{:>4}  {}  P={}\n", i + 1, majorana_core::io::format_complex(*z), z.norm()));
            }
            Ok(Artifact::ok(s))
        }
        Format::Svg => Err(unsupported(cfg)),
    }
}

#[derive(Serialize)]
struct RootJson {
    k: [f64; 2],
    branch: &'static str,
    epsilon: [f64; 2],
    residual: f64,
    sector: &'static str,
}

impl From<&BetheRoot> for RootJson {
    fn from(r: &BetheRoot) -> Self {
        Self {
            k: pair(r.k),
            branch: match r.branch {
                bethe::Branch::Plus => "+",
                bethe::Branch::Minus => "-",
            },
            epsilon: pair(r.epsilon),
            residual: r.residual,
            sector: match r.sector {
                bethe::Sector::RealAxis => "real",
                bethe::Sector::ImaginaryAxis => "imaginary",
                bethe::Sector::ShiftedImaginaryAxis => "pi+imaginary",
            },
        }
    }
}

fn bethe_roots(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let tol = cfg.tolerances.root;
    let real = bethe::solve_real_k(cfg.mu, cfg.gamma, cfg.n_sites, tol)?;
    let zero = bethe::zero_mode_roots(cfg.mu, cfg.gamma, cfg.n_sites)?;
    let evanescent = bethe::solve_evanescent(cfg.mu, cfg.gamma, cfg.n_sites, tol)?;
    let spectrum = if real.on_ep_locus {
        Some(bethe::bethe_spectrum(cfg.mu, cfg.gamma, cfg.n_sites, tol)?)
    } else {
        None
    };
    let mut all: Vec<&BetheRoot> = real.roots.iter().collect();
    all.extend(zero.iter());
    all.extend(evanescent.iter().filter(|r| r.epsilon.norm() > 0.0));
    match cfg.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Body {
                on_ep_locus: bool,
                grid_points: usize,
                real_roots: Vec<RootJson>,
                zero_mode_roots: Vec<RootJson>,
                evanescent_roots: Vec<RootJson>,
                #[serde(skip_serializing_if = "Option::is_none")]
                spectrum: Option<Vec<[f64; 2]>>,
            }
            let body = Body {
                on_ep_locus: real.on_ep_locus,
                grid_points: real.grid_points,
                real_roots: real.roots.iter().map(RootJson::from).collect(),
                zero_mode_roots: zero.iter().map(RootJson::from).collect(),
                evanescent_roots: evanescent.iter().map(RootJson::from).collect(),
                spectrum: spectrum.as_deref().map(pairs),
            };
            Ok(Artifact::ok(json_with_config(cfg, &body)?))
        }
        Format::Csv => {
            let rows = all.iter().map(|r| {
                let j = RootJson::from(*r);
                vec![
                    j.k[0].to_string(),
                    j.k[1].to_string(),
                    j.branch.to_string(),
                    j.epsilon[0].to_string(),
                    j.epsilon[1].to_string(),
                    j.residual.to_string(),
                    j.sector.to_string(),
                ]
            });
            Ok(Artifact::ok(csv_with_config(
                cfg,
                &["k_re", "k_im", "branch", "eps_re", "eps_im", "residual", "sector"],
                rows,
            )?))
        }
        Format::Text => {
            let mut s = config_comment(cfg);
            s.push_str(&format!("on_ep_locus: {}\n", real.on_ep_locus));
            for r in &all {
                s.push_str(&format!(
                    "k = {:<44} eps = {:<44} residual {:.2e}\n",
                    majorana_core::io::format_complex(r.k),
                    majorana_core::io::format_complex(r.epsilon),
                    r.residual
                ));
            }
            Ok(Artifact::ok(s))
        }
        Format::Svg => Err(unsupported(cfg)),
    }
}

fn census(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let (_, chain) = chain_spectrum(cfg)?;
    let c = chain.census;
    match cfg.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Body {
                gamma: f64,
                census: CensusJson,
            }
            Ok(Artifact::ok(json_with_config(
                cfg,
                &Body {
                    gamma: cfg.gamma,
                    census: c.into(),
                },
            )?))
        }
        Format::Csv => Ok(Artifact::ok(csv_with_config(
            cfg,
            &["N", "mu", "gamma", "n_I", "n_EP", "n_S"],
            [vec![
                cfg.n_sites.to_string(),
                cfg.mu.to_string(),
                cfg.gamma.to_string(),
                c.n_imaginary.to_string(),
                c.n_ep.to_string(),
                c.n_scattering.to_string(),
            ]],
        )?)),
        Format::Text => Ok(Artifact::ok(format!(
            "{}n_I={} n_EP={} n_S={} consistent={}\n",
            config_comment(cfg),
            c.n_imaginary,
            c.n_ep,
            c.n_scattering,
            c.is_consistent()
        ))),
        Format::Svg => Err(unsupported(cfg)),
    }
}

fn sweep(cfg: &RunConfig) -> Result<Artifact, CliError> {
    require_locus(cfg)?;
    let result = analysis::census_sweep(&cfg.n_grid, &cfg.mu_grid, &cfg.tolerances, cfg.threads).map_err(|e| match e {
        analysis::AnalysisError::AtPoint { ref source, .. } if matches!(**source, analysis::AnalysisError::Domain(_)) => {
            CliError::Usage(e.to_string())
        }
        other => CliError::Classification(other.to_string()),
    })?;
    match cfg.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Point {
                #[serde(rename = "N")]
                n_sites: usize,
                mu: f64,
                gamma: f64,
                census: CensusJson,
            }
            #[derive(Serialize)]
            struct Body {
                points: Vec<Point>,
                phase_boundary_holds: bool,
            }
            let body = Body {
                points: result
                    .points
                    .iter()
                    .map(|p| Point {
                        n_sites: p.n_sites,
                        mu: p.mu,
                        gamma: p.gamma,
                        census: p.census.into(),
                    })
                    .collect(),
                phase_boundary_holds: result.phase_boundary_holds(),
            };
            Ok(Artifact::ok(json_with_config(cfg, &body)?))
        }
        Format::Csv => {
            let rows = result.points.iter().map(|p| {
                vec![
                    p.n_sites.to_string(),
                    p.mu.to_string(),
                    p.gamma.to_string(),
                    p.census.n_imaginary.to_string(),
                    p.census.n_ep.to_string(),
                    p.census.n_scattering.to_string(),
                    p.edge_modes.to_string(),
                ]
            });
            Ok(Artifact::ok(csv_with_config(
                cfg,
                &["N", "mu", "gamma", "n_I", "n_EP", "n_S", "edge_modes"],
                rows,
            )?))
        }
        Format::Text => {
            let mut s = config_comment(cfg);
            for p in &result.points {
                let (a, b, c) = p.census.as_tuple();
                s.push_str(&format!(
                    "N={:<3} mu={:<5} n_I={a} n_EP={b} n_S={c:<3} edge_modes={}\n",
                    p.n_sites, p.mu, p.edge_modes
                ));
            }
            s.push_str(&format!("phase_boundary_holds: {}\n", result.phase_boundary_holds()));
            Ok(Artifact::ok(s))
        }
        Format::Svg => Err(unsupported(cfg)),
    }
}

fn verify(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let ids = match cfg.only.as_deref() {
        None => verify::CRITERIA.iter().map(|c| c.0).collect(),
        Some(f) => verify::select(f).ok_or_else(|| CliError::Usage(format!("unknown verification filter `{f}`")))?,
    };
    let report = verify::run(
        &ids,
        &VerifyConfig {
            tolerances: cfg.tolerances,
            threads: cfg.threads,
        },
    );
    let body = match cfg.format {
        Format::Json => json_with_config(cfg, &report)?,
        Format::Text => {
            let mut s = String::new();
            for c in &report.criteria {
                s.push_str(&format!(
                    "{} {:>2} {}: {} (expected {})\n",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.id,
                    c.name,
                    c.observed,
                    c.expected
                ));
            }
            s.push_str(&format!(
                "{} of {} criteria passed\n",
                report.criteria.iter().filter(|c| c.passed).count(),
                report.criteria.len()
            ));
            s
        }
        _ => return Err(unsupported(cfg)),
    };
    Ok(Artifact {
        body,
        passed: report.all_passed,
    })
}

fn plot(cfg: &RunConfig) -> Result<Artifact, CliError> {
    require_locus(cfg)?;
    let profiles = cfg
        .n_grid
        .iter()
        .map(|&n| zero_mode_distribution(n, cfg.mu).map_err(CliError::usage))
        .collect::<Result<Vec<_>, _>>()?;
    match cfg.format {
        Format::Svg => {
            let panels: Vec<Panel> = profiles
                .iter()
                .map(|p| Panel {
                    title: format!("N = {}, mu = {}", p.n_sites, p.mu),
                    values: p.values.clone(),
                })
                .collect();
            Ok(Artifact::ok(stem_panels(&panels, &config_comment(cfg))))
        }
        Format::Csv if profiles.len() == 1 => {
            let rows = profiles[0]
                .values
                .iter()
                .enumerate()
                .map(|(i, p)| vec![(i + 1).to_string(), p.to_string()]);
            Ok(Artifact::ok(csv_with_config(cfg, &["j", "P"], rows)?))
        }
        Format::Csv => {
            let rows = profiles.iter().flat_map(|prof| {
                prof.values
                    .iter()
                    .enumerate()
                    .map(move |(i, p)| vec![prof.n_sites.to_string(), (i + 1).to_string(), p.to_string()])
            });
            Ok(Artifact::ok(csv_with_config(cfg, &["N", "j", "P"], rows)?))
        }
        Format::Json => {
            let mut sizes = cfg.n_grid.clone();
            sizes.sort_unstable();
            let comparisons = if cfg.mu > 1.0 {
                sizes
                    .windows(2)
                    .map(|w| common_part_compare(w[0], w[1], cfg.mu).map_err(CliError::usage))
                    .collect::<Result<Vec<_>, _>>()?
            } else {
                Vec::new()
            };
            #[derive(Serialize)]
            struct Body {
                profiles: Vec<analysis::DistributionProfile>,
                common_part: Vec<analysis::CommonPartReport>,
            }
            Ok(Artifact::ok(json_with_config(
                cfg,
                &Body {
                    profiles,
                    common_part: comparisons,
                },
            )?))
        }
        Format::Text => Err(unsupported(cfg)),
    }
}
