//! Task runners and artifact writers.

use crate::config::ExperimentConfig;
use crate::svg;
use nls_core::ansatz::{
    default_window, make_ring_configuration, AnsatzField, AnsatzMode, PeakConfiguration,
};
use nls_core::diagnostics;
use nls_core::field_solver::{
    self, energy_full, newton_solve, sample_potentials, DiscreteFieldPair, BOX_MARGIN,
};
use nls_core::grid::Grid3D;
use nls_core::ground_state::{decay_constant, radial_integrals, solve_ground_state};
use nls_core::reduced_energy::{
    effective_tail_amplitude, maximize_reduced, maximize_reduced_2d, reduced_energy_seg,
    reduced_energy_sync, seg_constants, sync_constants,
};
use nls_core::spectral::{assemble_linearized, lowest_eigs, nondegeneracy_margin, Subspace};
use nls_core::{Error, Result};
use std::path::Path;
use std::sync::Arc;

/// Collects produced files and writes the manifest.
struct Artifacts<'a> {
    out: &'a Path,
    files: Vec<String>,
    config_hash: String,
}

impl<'a> Artifacts<'a> {
    fn new(out: &'a Path, config_text: &str) -> Artifacts<'a> {
        Artifacts {
            out,
            files: Vec::new(),
            config_hash: format!("{:016x}", fnv1a(config_text.as_bytes())),
        }
    }

    fn write(&mut self, name: &str, content: &[u8]) -> Result<()> {
        std::fs::write(self.out.join(name), content).map_err(|e| Error::ConfigError {
            field: format!("--out/{name}"),
            message: e.to_string(),
        })?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).expect("serialize");
        self.write(name, text.as_bytes())
    }

    fn finish(mut self) -> Result<()> {
        self.files.sort();
        let manifest = serde_json::json!({
            "config_hash": self.config_hash,
            "version": env!("CARGO_PKG_VERSION"),
            "files": self.files,
        });
        let text = serde_json::to_string_pretty(&manifest).expect("serialize");
        std::fs::write(self.out.join("manifest.json"), text).map_err(|e| Error::ConfigError {
            field: "--out/manifest.json".into(),
            message: e.to_string(),
        })
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn task_err(e: Error) -> Error {
    e
}

pub fn run(task: &str, cfg: &ExperimentConfig, config_text: &str, out: &Path, threads: usize) -> Result<()> {
    let mut artifacts = Artifacts::new(out, config_text);
    match task {
        "ground-state" => ground_state_task(cfg, &mut artifacts)?,
        "reduced-scan" => reduced_scan_task(cfg, &mut artifacts, threads)?,
        "solve" => {
            let (sol, report) = solve_task(cfg)?;
            write_solution(cfg, &sol, &report, &mut artifacts)?;
        }
        "spectrum" => {
            let (sol, report) = solve_task(cfg)?;
            write_solution(cfg, &sol, &report, &mut artifacts)?;
            spectrum_task(cfg, &sol, &mut artifacts)?;
        }
        "pohozaev" => {
            let (sol, report) = solve_task(cfg)?;
            write_solution(cfg, &sol, &report, &mut artifacts)?;
            pohozaev_task(cfg, &sol, &mut artifacts)?;
        }
        "decay" => {
            let (sol, report) = solve_task(cfg)?;
            write_solution(cfg, &sol, &report, &mut artifacts)?;
            decay_task(cfg, &sol, &mut artifacts)?;
        }
        "full-pipeline" => {
            let (sol, report) = solve_task(cfg)?;
            write_solution(cfg, &sol, &report, &mut artifacts)?;
            spectrum_task(cfg, &sol, &mut artifacts)?;
            pohozaev_task(cfg, &sol, &mut artifacts)?;
            decay_task(cfg, &sol, &mut artifacts)?;
        }
        "asymptotics" => asymptotics_task(cfg, out, &mut artifacts)?,
        other => {
            return Err(Error::ConfigError {
                field: "task".into(),
                message: format!("unknown task `{other}`"),
            })
        }
    }
    artifacts.finish()
}

fn ground_state_task(cfg: &ExperimentConfig, artifacts: &mut Artifacts) -> Result<()> {
    let mu = cfg.amplitudes.mu1;
    let gs = solve_ground_state(mu, 1e-10).map_err(task_err)?;
    let ri = radial_integrals(&gs)?;
    let fit = decay_constant(&gs)?;
    let mut csv = Vec::new();
    gs.write_csv(&mut csv).expect("csv");
    artifacts.write("ground_state.csv", &csv)?;
    artifacts.write_json(
        "ground_state.json",
        &serde_json::json!({
            "mu": mu,
            "w0": gs.center_value,
            "residual": gs.residual_norm,
            "I2": ri.i2,
            "I4": ri.i4,
            "IG": ri.ig,
            "rate": fit.rate,
            "prefactor": fit.prefactor,
        }),
    )
}

#[derive(serde::Serialize, serde::Deserialize, Clone)]
pub struct MaximizerRecord {
    pub k: usize,
    pub r_star: f64,
    pub value: f64,
    pub interior: bool,
    pub ratio_to_klnk: f64,
    #[serde(default)]
    pub rho_star: Option<f64>,
}

fn reduced_scan_task(cfg: &ExperimentConfig, artifacts: &mut Artifacts, threads: usize) -> Result<()> {
    let gs = solve_ground_state(1.0, 1e-10)?;
    let amps = cfg.amplitudes()?;
    let p = cfg.build_potential(&cfg.potentials.p)?;
    let q = cfg.build_potential(&cfg.potentials.q)?;
    let m = p.m.min(q.m).max(2.5);
    let eps = cfg.ansatz.epsilon;
    let mode = cfg.exponent_mode()?;
    let kind = cfg.interaction_kind()?;
    let cross = cfg.cross_kind()?;
    let samples = cfg.scan.samples.max(200);
    let k_values = cfg.scan.k_values.clone();
    if cfg.ansatz_mode() == AnsatzMode::Synchronized {
        let consts = sync_constants(&amps, &gs)?;
        let a_eff = effective_tail_amplitude(&p, &q, &amps, eps, m);
        let scan_one = |k: &usize| -> Result<(Vec<(f64, f64)>, MaximizerRecord)> {
            let k = *k;
            let w = default_window(k, m, cfg.ansatz.delta)?;
            let f = |r: f64| reduced_energy_sync(k, r, &consts, m, a_eff, mode, kind);
            let mut curve = Vec::with_capacity(samples);
            for i in 0..samples {
                let r = w.lo + (w.hi - w.lo) * i as f64 / (samples - 1) as f64;
                curve.push((r, f(r)));
            }
            let record = match maximize_reduced(&w, samples, f) {
                Ok(mx) => MaximizerRecord {
                    k,
                    r_star: mx.location,
                    value: mx.value,
                    interior: true,
                    ratio_to_klnk: mx.location / (k as f64 * (k as f64).ln()),
                    rho_star: None,
                },
                Err(Error::BoundaryMaximizer { at, .. }) => MaximizerRecord {
                    k,
                    r_star: at,
                    value: f(at),
                    interior: false,
                    ratio_to_klnk: at / (k as f64 * (k as f64).ln()),
                    rho_star: None,
                },
                Err(e) => return Err(e),
            };
            Ok((curve, record))
        };
        let results = parallel_map(&k_values, threads, scan_one)?;
        let mut csv = String::from("k,r,F\n");
        let mut records = Vec::new();
        let mut plots = Vec::new();
        for (k, (curve, record)) in k_values.iter().zip(&results) {
            for (r, f) in curve {
                csv.push_str(&format!("{k},{r},{f}\n"));
            }
            records.push(record.clone());
            // normalized overlay: (r/k ln k, F - k A0)
            let base = *k as f64 * consts.a0;
            let kl = *k as f64 * (*k as f64).ln();
            plots.push((
                format!("k={k}"),
                curve.iter().map(|(r, f)| (r / kl, f - base)).collect::<Vec<_>>(),
            ));
        }
        artifacts.write("curves.csv", csv.as_bytes())?;
        artifacts.write_json("maximizers.json", &records)?;
        let series: Vec<svg::Series> = plots
            .iter()
            .map(|(l, pts)| svg::Series { label: l, points: pts })
            .collect();
        artifacts.write(
            "curves.svg",
            svg::line_plot("reduced energy F(r) - kA0 vs r/(k ln k)", &series).as_bytes(),
        )?;
    } else {
        let consts = seg_constants(&amps, &gs)?;
        let a1_em = cfg.potentials.p.a / eps.powf(m);
        let a2_em = cfg.potentials.q.a / eps.powf(m);
        let mut csv = String::from("k,r,rho,F\n");
        let mut records = Vec::new();
        for &k in &k_values {
            let w = default_window(k, m, cfg.ansatz.delta)?;
            let f = |r: f64, rho: f64| {
                reduced_energy_seg(k, r, rho, &consts, m, a1_em, a2_em, cross)
            };
            let n2 = 64usize;
            for i in 0..n2 {
                let r = w.lo + (w.hi - w.lo) * i as f64 / (n2 - 1) as f64;
                for j in 0..n2 {
                    let rho = w.lo + (w.hi - w.lo) * j as f64 / (n2 - 1) as f64;
                    csv.push_str(&format!("{k},{r},{rho},{}\n", f(r, rho)));
                }
            }
            let record = match maximize_reduced_2d(&w, 200, f) {
                Ok((mr, mrho)) => MaximizerRecord {
                    k,
                    r_star: mr.location,
                    value: mr.value,
                    interior: true,
                    ratio_to_klnk: mr.location / (k as f64 * (k as f64).ln()),
                    rho_star: Some(mrho.location),
                },
                Err(Error::BoundaryMaximizer { at, .. }) => MaximizerRecord {
                    k,
                    r_star: at,
                    value: 0.0,
                    interior: false,
                    ratio_to_klnk: at / (k as f64 * (k as f64).ln()),
                    rho_star: None,
                },
                Err(e) => return Err(e),
            };
            records.push(record);
        }
        artifacts.write("curves.csv", csv.as_bytes())?;
        artifacts.write_json("maximizers.json", &records)?;
    }
    Ok(())
}

/// Deterministic parallel map over a slice: each item writes its own slot,
/// so the thread count never changes the output.
fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    threads: usize,
    f: impl Fn(&T) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let mut slots: Vec<Option<Result<R>>> = (0..items.len()).map(|_| None).collect();
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|scope| {
        for (items_chunk, slots_chunk) in items.chunks(chunk).zip(slots.chunks_mut(chunk)) {
            scope.spawn(|| {
                for (item, slot) in items_chunk.iter().zip(slots_chunk.iter_mut()) {
                    *slot = Some(f(item));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.expect("slot filled")).collect()
}

/// Build the configured ansatz (with an inner pre-solve when requested) and
/// run the damped Newton solve.
fn solve_task(cfg: &ExperimentConfig) -> Result<(DiscreteFieldPair, serde_json::Value)> {
    let amps = cfg.amplitudes()?;
    let p = cfg.build_potential(&cfg.potentials.p)?;
    let q = cfg.build_potential(&cfg.potentials.q)?;
    let m = p.m.min(q.m).max(2.5);
    let eps = cfg.ansatz.epsilon;
    let gs = Arc::new(solve_ground_state(1.0, 1e-10)?);
    let k = cfg.ansatz.k;
    let field = if k >= 2 {
        let r = if cfg.ansatz.r > 0.0 {
            cfg.ansatz.r
        } else {
            default_window(k, m, cfg.ansatz.delta)?.midpoint()
        };
        let mut config = make_ring_configuration(k, r, eps, cfg.ansatz_mode(), cfg.ansatz.rho)?;
        if cfg.ansatz.inner == "two-spike" {
            let a = field_solver::equilibrium_inner_half_offset(&gs, &amps, &p, &q, eps);
            config.inner_centers = vec![[0.0, 0.0, a], [0.0, 0.0, -a]];
        }
        match cfg.ansatz_mode() {
            AnsatzMode::Synchronized => AnsatzField::synchronized(config, amps, gs.clone()),
            AnsatzMode::Segregated => {
                let gs1 = Arc::new(solve_ground_state(amps.mu1, 1e-10)?);
                let gs2 = Arc::new(solve_ground_state(amps.mu2, 1e-10)?);
                AnsatzField::segregated(config, amps, gs1, gs2)
            }
        }
    } else {
        let mut config = nls_core::ansatz::single_peak_configuration(eps);
        if cfg.ansatz.inner == "two-spike" {
            let a = field_solver::equilibrium_inner_half_offset(&gs, &amps, &p, &q, eps);
            config.inner_centers = vec![[0.0, 0.0, a], [0.0, 0.0, -a]];
            config.ring_count = 0;
        }
        AnsatzField::synchronized(config, amps, gs.clone())
    };
    // if an inner cluster is configured together with a ring, pre-solve it
    let field = if cfg.ansatz.inner == "two-spike" && k >= 2 {
        let inner_cfg = PeakConfiguration {
            inner_centers: field.configuration.inner_centers.clone(),
            ring_count: 0,
            ring_radius: 0.0,
            second_ring_radius: None,
            epsilon: eps,
            mode: AnsatzMode::Synchronized,
        };
        let inner_field = AnsatzField::synchronized(inner_cfg.clone(), amps, gs.clone());
        let half = inner_cfg.outer_radius() + BOX_MARGIN;
        let n = (2.0 * half / cfg.solver.resolution).round() as usize + 1;
        let grid = Arc::new(Grid3D::even_symmetric(half, n, 1)?);
        let (inner_sol, _) = newton_solve(&inner_field, &p, &q, grid, cfg.solver.tol)?;
        let mut outer = field.clone();
        outer.configuration.inner_centers = inner_cfg.inner_centers;
        outer.with_inner(Arc::new(inner_sol))
    } else {
        field
    };

    let half = if cfg.solver.half_width > 0.0 {
        cfg.solver.half_width
    } else {
        field.configuration.outer_radius() + BOX_MARGIN
    };
    let n = (2.0 * half / cfg.solver.resolution).round() as usize + 1;
    let (s2, s3) = cfg.grid_sym();
    let grid = Arc::new(Grid3D::with_symmetry(half, n, s2, s3, k.max(1))?);
    let (sol, report) = newton_solve(&field, &p, &q, grid.clone(), cfg.solver.tol)?;
    let coeff = sample_potentials(&grid, &p, &q, eps, amps);
    let energy = energy_full(&sol, &coeff).ok();
    let report = serde_json::json!({
        "iterations": report.iterations,
        "residual_history": report.residual_history,
        "residual_norm": sol.residual_norm,
        "positive": sol.positive,
        "energy": energy,
        "grid": { "n": grid.n, "h": grid.h, "half_width": grid.half_width },
    });
    Ok((sol, report))
}

fn write_solution(
    _cfg: &ExperimentConfig,
    sol: &DiscreteFieldPair,
    report: &serde_json::Value,
    artifacts: &mut Artifacts,
) -> Result<()> {
    let mut bin = Vec::new();
    sol.write_binary(&mut bin).expect("binary");
    artifacts.write("field.bin", &bin)?;
    let mut csv = Vec::new();
    sol.write_midplane_csv(&mut csv).expect("csv");
    artifacts.write("midplane.csv", &csv)?;
    artifacts.write_json("solve.json", report)
}

fn spectrum_task(
    cfg: &ExperimentConfig,
    sol: &DiscreteFieldPair,
    artifacts: &mut Artifacts,
) -> Result<()> {
    let amps = cfg.amplitudes()?;
    let p = cfg.build_potential(&cfg.potentials.p)?;
    let q = cfg.build_potential(&cfg.potentials.q)?;
    let subspace = cfg.subspace()?;
    match subspace {
        Subspace::EvenX2X3AndRotation(_) => {
            let margin =
                nondegeneracy_margin(sol, &p, &q, &amps, subspace, cfg.spectrum.count.min(10))?;
            artifacts.write_json("margin.json", &margin)
        }
        _ => {
            let op = assemble_linearized(sol, &p, &q, &amps)?;
            let (report, _) = lowest_eigs(&op, cfg.spectrum.count.min(10), subspace)?;
            artifacts.write_json("spectrum.json", &report)
        }
    }
}

fn pohozaev_task(
    cfg: &ExperimentConfig,
    sol: &DiscreteFieldPair,
    artifacts: &mut Artifacts,
) -> Result<()> {
    let amps = cfg.amplitudes()?;
    let p = cfg.build_potential(&cfg.potentials.p)?;
    let q = cfg.build_potential(&cfg.potentials.q)?;
    // test function: the axis-1 translation mode of the solution
    let grid = &sol.grid;
    let mut test = sol.clone();
    let mut g = vec![0.0; grid.len()];
    grid.gradient_component(&sol.u, 0, &mut g);
    test.u = g.clone();
    grid.gradient_component(&sol.v, 0, &mut g);
    test.v = g;
    let center = cfg.pohozaev.center;
    let delta = if cfg.pohozaev.delta > 0.0 {
        cfg.pohozaev.delta
    } else {
        // half the distance to the nearest other structure, defaulting to a
        // quarter of the box
        0.25 * grid.half_width
    };
    let report = diagnostics::pohozaev_residual(
        sol,
        &test,
        &p,
        &q,
        &amps,
        center,
        delta,
        cfg.pohozaev.axis.min(2),
    )?;
    artifacts.write_json("pohozaev.json", &report)
}

fn decay_task(
    cfg: &ExperimentConfig,
    sol: &DiscreteFieldPair,
    artifacts: &mut Artifacts,
) -> Result<()> {
    let eps = cfg.ansatz.epsilon;
    let m = cfg.potentials.p.m.min(cfg.potentials.q.m).max(2.5);
    let mut centers: Vec<[f64; 3]> = Vec::new();
    if cfg.ansatz.k >= 2 {
        let r = if cfg.ansatz.r > 0.0 {
            cfg.ansatz.r
        } else {
            default_window(cfg.ansatz.k, m, cfg.ansatz.delta)?.midpoint()
        };
        let config = make_ring_configuration(cfg.ansatz.k, r, eps, AnsatzMode::Synchronized, None)?;
        centers.extend(config.ring_centers());
    } else {
        centers.push([0.0; 3]);
    }
    let report = diagnostics::decay_check(sol, &centers, 1.0);
    let mut csv = String::from("band_lo,band_hi,max_u,max_v\n");
    for (lo, hi, mu, mv) in &report.bands {
        csv.push_str(&format!("{lo},{hi},{mu},{mv}\n"));
    }
    artifacts.write("decay_bands.csv", csv.as_bytes())?;
    artifacts.write_json("decay.json", &report)
}

fn asymptotics_task(cfg: &ExperimentConfig, out: &Path, artifacts: &mut Artifacts) -> Result<()> {
    let path = out.join("maximizers.json");
    let text = std::fs::read_to_string(&path).map_err(|_| {
        Error::InsufficientData(format!(
            "no maximizers.json in {} (run reduced-scan first)",
            out.display()
        ))
    })?;
    let records: Vec<MaximizerRecord> =
        serde_json::from_str(&text).map_err(|e| Error::InsufficientData(e.to_string()))?;
    if records.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need >= 3 maximizer records, have {}",
            records.len()
        )));
    }
    let m = cfg.potentials.p.m.min(cfg.potentials.q.m);
    let target = m / (2.0 * std::f64::consts::PI);
    let ratios: Vec<f64> = records.iter().map(|r| r.ratio_to_klnk).collect();
    let monotone = ratios.windows(2).all(|w| w[1] >= w[0])
        || ratios.windows(2).all(|w| w[1] <= w[0]);
    let final_ratio = *ratios.last().unwrap();
    let verdict = monotone && (final_ratio - target).abs() / target <= 0.25;
    let mut csv = String::from("k,r_star,ratio_to_klnk,interior\n");
    for r in &records {
        csv.push_str(&format!("{},{},{},{}\n", r.k, r.r_star, r.ratio_to_klnk, r.interior));
    }
    artifacts.write("asymptotics.csv", csv.as_bytes())?;
    artifacts.write_json(
        "asymptotics.json",
        &serde_json::json!({
            "target": target,
            "ratios": ratios,
            "monotone": monotone,
            "final_ratio": final_ratio,
            "trend_verdict": verdict,
        }),
    )
}
