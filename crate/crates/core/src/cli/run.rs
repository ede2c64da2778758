//! Executes a parsed scenario into a result record.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde_json::json;

use super::acceptance::{self, AcceptanceOptions, Status};
use super::config::*;
use super::output::{Provenance, ResultRecord, Table};
use crate::born::{born_first_amplitude, exact_kernel, measure_error_order, DEFAULT_CONE_DEG, KERNEL_FLOOR};
use crate::diagnostics::{
    hs_norm_resolvent_weight, kato_smoothness_integral, lap_probe_on, mourre_check_with, LatticeWindow,
    KATO_SATURATION, LAP_DEFAULT_POINTS, LAP_DEFAULT_SPACING, LAP_STABILITY, MOURRE_DX,
};
use crate::eikonal::{approximate_eigenfunction, s0_kernel, Sign, CONE_HALF_ANGLE_DEG, WINDOW_TOLERANCE};
use crate::numerics::AxialGrid;
use crate::partialwave::{
    amplitude_kernel, default_l_max, phase_shift_table_with, smatrix_eigenvalues, PartialWaveSettings, DEFAULT_DR,
    PHASE_NOISE_FLOOR,
};
use crate::propagator::{
    free_evolve, modified_moller_probe, moller_probe, scattering_phase_from_time_domain, split_step_evolve,
    CauchyReport, EvolutionConfig, CONVERGING_RATIO, EDGE_THRESHOLD, PLATEAU_RATIO,
};
use crate::{Result, ScatterError};

/// What a scenario produced before it is wrapped into a record.
#[derive(Default)]
struct Product {
    summary: serde_json::Map<String, serde_json::Value>,
    tables: Vec<Table>,
    flags: Vec<String>,
    tolerances: BTreeMap<String, f64>,
    modules: Vec<&'static str>,
}

impl Product {
    fn new(modules: &[&'static str]) -> Self {
        Product { modules: modules.to_vec(), ..Default::default() }
    }

    fn set(&mut self, key: &str, v: serde_json::Value) {
        self.summary.insert(key.into(), v);
    }
}

fn non_empty<T>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(ScatterError::Config(format!("\"{name}\" must not be empty")));
    }
    Ok(())
}

/// Runs a scenario; flags are collected, not raised.
pub fn execute(cfg: &ScenarioConfig, strict: bool) -> Result<ResultRecord> {
    let product = match cfg {
        ScenarioConfig::Phaseshift(c) => phaseshift(c)?,
        ScenarioConfig::Amplitude(c) => amplitude(c)?,
        ScenarioConfig::Born(c) => born(c)?,
        ScenarioConfig::Highenergy(c) => highenergy(c)?,
        ScenarioConfig::Eikonal(c) => eikonal(c)?,
        ScenarioConfig::S0(c) => s0(c)?,
        ScenarioConfig::Propagate(c) => propagate(c)?,
        ScenarioConfig::Moller(c) => moller(c)?,
        ScenarioConfig::Diagnose(c) => diagnose(c)?,
        ScenarioConfig::Acceptance(c) => accept(c)?,
    };
    Ok(ResultRecord {
        id: cfg.id(),
        experiment: cfg.kind().into(),
        config_sha256: cfg.hash(),
        input: serde_json::to_value(cfg).expect("config serializes"),
        summary: serde_json::Value::Object(product.summary),
        tables: product.tables,
        provenance: Provenance {
            crate_version: env!("CARGO_PKG_VERSION").into(),
            modules: product.modules.iter().map(|m| m.to_string()).collect(),
            tolerances: product.tolerances,
            flags: product.flags,
            strict,
            seed: cfg.seed(),
        },
    })
}

fn settings(dr: Option<f64>, r_max: Option<f64>) -> PartialWaveSettings {
    PartialWaveSettings { dr: dr.unwrap_or(DEFAULT_DR), r_max }
}

fn phaseshift(c: &PhaseshiftConfig) -> Result<Product> {
    non_empty("k", &c.k)?;
    let m = c.potential.model()?;
    let mut p = Product::new(&["potentials", "partialwave"]);
    p.tolerances.insert("phase_noise_floor".into(), PHASE_NOISE_FLOOR);
    let mut t = Table::new("phaseshift", &["k", "l", "delta", "S"]);
    for &k in &c.k {
        let l_max = c.l_max.unwrap_or_else(|| default_l_max(&m, k));
        let table = phase_shift_table_with(&m, k, l_max, settings(c.dr, c.r_max))?;
        if !table.tail_is_monotone() {
            p.flags.push(format!("partialwave: phase-shift tail not monotone at k = {k}"));
        }
        for (l, (d, s)) in table.delta.iter().zip(smatrix_eigenvalues(&table)).enumerate() {
            t.push(vec![k.into(), l.into(), (*d).into(), s.into()]);
        }
    }
    p.tables.push(t);
    Ok(p)
}

fn amplitude(c: &AmplitudeConfig) -> Result<Product> {
    non_empty("k", &c.k)?;
    non_empty("theta_deg", &c.theta_deg)?;
    let m = c.potential.model()?;
    let mut p = Product::new(&["potentials", "partialwave"]);
    let mut t = Table::new("amplitude", &["k", "theta_deg", "f", "dcs"]);
    let thetas: Vec<f64> = c.theta_deg.iter().map(|d| d.to_radians()).collect();
    for &k in &c.k {
        let l_max = c.l_max.unwrap_or_else(|| default_l_max(&m, k));
        let table = phase_shift_table_with(&m, k, l_max, PartialWaveSettings::default())?;
        let kern = amplitude_kernel(&table, &thetas)?;
        if kern.forward_truncated {
            p.flags.push(format!("partialwave: forward sample at k = {k} is the truncated sum"));
        }
        for (deg, f) in c.theta_deg.iter().zip(&kern.values) {
            t.push(vec![k.into(), (*deg).into(), (*f).into(), f.norm_sqr().into()]);
        }
    }
    p.tables.push(t);
    Ok(p)
}

fn born(c: &BornConfig) -> Result<Product> {
    non_empty("k", &c.k)?;
    non_empty("theta_deg", &c.theta_deg)?;
    let m = c.potential.model()?;
    let mut p = Product::new(&["potentials", "born", "partialwave"]);
    let mut t = if c.compare {
        Table::new("born", &["k", "theta_deg", "f_born", "f_exact", "relative_gap"])
    } else {
        Table::new("born", &["k", "theta_deg", "f_born"])
    };
    for &k in &c.k {
        let table = if c.compare {
            Some(phase_shift_table_with(&m, k, default_l_max(&m, k), PartialWaveSettings::default())?)
        } else {
            None
        };
        for &deg in &c.theta_deg {
            let th = deg.to_radians();
            let fb = born_first_amplitude(&m, k, th)?;
            match &table {
                Some(tab) => {
                    let fe = crate::partialwave::amplitude(tab, th)?;
                    let gap = (fb - fe).norm() / fe.norm();
                    t.push(vec![k.into(), deg.into(), fb.into(), fe.into(), gap.into()]);
                }
                None => t.push(vec![k.into(), deg.into(), fb.into()]),
            }
        }
    }
    p.tables.push(t);
    Ok(p)
}

fn pair(theta: f64) -> ([f64; 3], [f64; 3]) {
    let (s, c) = (0.5 * theta).sin_cos();
    ([s, 0.0, c], [-s, 0.0, c])
}

fn highenergy(c: &HighEnergyConfig) -> Result<Product> {
    non_empty("orders", &c.orders)?;
    let m = c.potential.model()?;
    let mut p = Product::new(&["potentials", "born", "partialwave"]);
    p.tolerances.insert("kernel_floor".into(), KERNEL_FLOOR);
    p.tolerances.insert("cone_half_angle_deg".into(), DEFAULT_CONE_DEG);
    let (w, wp) = pair(c.theta_deg.to_radians());
    let mut t = Table::new("highenergy", &["order", "lambda", "exact", "truncated", "error"]);
    let mut slopes = serde_json::Map::new();
    for &n in &c.orders {
        let r = measure_error_order(&m, &c.lambda, w, wp, n)?;
        if r.floor_warning {
            p.flags.push(format!("born: error at order {n} below the kernel floor; slope unreliable"));
        }
        slopes.insert(n.to_string(), json!({ "slope": r.slope, "theoretical_slope": r.theoretical_slope }));
        for i in 0..r.lambdas.len() {
            t.push(vec![n.into(), r.lambdas[i].into(), r.exact[i].into(), r.truncated[i].into(), r.errors[i].into()]);
        }
    }
    p.set("slopes", serde_json::Value::Object(slopes));
    p.tables.push(t);
    Ok(p)
}

fn eikonal(c: &EikonalConfig) -> Result<Product> {
    non_empty("lambda", &c.lambda)?;
    non_empty("orders", &c.orders)?;
    let m = c.potential.model()?;
    let mut p = Product::new(&["potentials", "eikonal"]);
    p.tolerances.insert("cone_half_angle_deg".into(), CONE_HALF_ANGLE_DEG);
    let grid = match c.grid {
        Some(g) => AxialGrid::new(g.h, g.rho_max, g.z_min, g.z_max)?,
        None => crate::born::default_expansion_grid(&m, 0.05)?,
    };
    let sign = match c.sign {
        SignName::Plus => Sign::Plus,
        SignName::Minus => Sign::Minus,
    };
    let mut t = Table::new("eikonal", &["lambda", "order", "residual_norm", "region_volume"]);
    for &lam in &c.lambda {
        for &n in &c.orders {
            let psi = approximate_eigenfunction(&m, lam, sign, n, grid)?;
            if psi.eikonal.coarse_grid {
                p.flags.push(format!(
                    "eikonal: grid too coarse for the phase gradients (disagreement {:e}) at lambda = {lam}",
                    psi.eikonal.gradient_disagreement
                ));
            }
            t.push(vec![lam.into(), n.into(), psi.residual_norm.into(), psi.region_volume.into()]);
        }
    }
    p.tables.push(t);
    Ok(p)
}

fn s0(c: &S0Config) -> Result<Product> {
    non_empty("theta_deg", &c.theta_deg)?;
    let m = c.potential.model()?;
    let mut p = Product::new(&["potentials", "eikonal", "partialwave"]);
    p.tolerances.insert("window_tolerance".into(), WINDOW_TOLERANCE);
    let cols: &[&str] = if c.compare {
        &["theta_deg", "s0", "window_sensitivity", "taper_floor", "exact", "relative_error"]
    } else {
        &["theta_deg", "s0", "window_sensitivity", "taper_floor"]
    };
    let mut t = Table::new("s0", cols);
    // Rotate the symmetric pair so that it straddles omega0.
    let w0 = c.omega0;
    let norm = (w0[0] * w0[0] + w0[1] * w0[1] + w0[2] * w0[2]).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(ScatterError::Config("\"omega0\" must be a nonzero vector".into()));
    }
    let w0 = [w0[0] / norm, w0[1] / norm, w0[2] / norm];
    let rotate = |v: [f64; 3]| rotate_z_to(v, w0);
    for &deg in &c.theta_deg {
        let (a, b) = pair(deg.to_radians());
        let s = s0_kernel(&m, c.lambda, rotate(a), rotate(b), w0, c.order)?;
        if !s.converged {
            p.flags.push(format!(
                "eikonal: s0 window not converged at theta = {deg} deg (sensitivity {:e})",
                s.window_sensitivity
            ));
        }
        let mut row = vec![deg.into(), s.value.into(), s.window_sensitivity.into(), s.taper_floor.into()];
        if c.compare {
            let e = exact_kernel(&m, c.lambda, deg.to_radians())?;
            row.push(e.into());
            row.push(((s.value - e).norm() / e.norm()).into());
        }
        t.push(row);
    }
    p.tables.push(t);
    Ok(p)
}

/// Rotation taking the z axis to `target`, applied to `v`.
fn rotate_z_to(v: [f64; 3], target: [f64; 3]) -> [f64; 3] {
    let [a, b, c] = target;
    if c > 1.0 - 1e-15 {
        return v;
    }
    if c < -1.0 + 1e-15 {
        return [v[0], -v[1], -v[2]];
    }
    // Rodrigues rotation about z x target.
    let s = (a * a + b * b).sqrt();
    let (kx, ky) = (-b / s, a / s);
    let cross = [ky * v[2], -kx * v[2], kx * v[1] - ky * v[0]];
    let dot = kx * v[0] + ky * v[1];
    let mut out = [0.0; 3];
    let axis = [kx, ky, 0.0];
    for i in 0..3 {
        out[i] = v[i] * c + cross[i] * s + axis[i] * dot * (1.0 - c);
    }
    out
}

fn propagate(c: &PropagateConfig) -> Result<Product> {
    if c.evolve.is_none() && c.smatrix.is_none() {
        return Err(ScatterError::Config("propagate needs \"evolve\" or \"smatrix\"".into()));
    }
    let m = c.potential.model()?;
    let mut p = Product::new(&["potentials", "propagator"]);
    p.tolerances.insert("edge_threshold".into(), EDGE_THRESHOLD);
    if let Some(run) = &c.evolve {
        non_empty("times", &run.times)?;
        if run.times.windows(2).any(|w| !(w[1] > w[0])) || !(run.times[0] >= 0.0) {
            return Err(ScatterError::Config("\"times\" must be non-negative and increasing".into()));
        }
        let g = run.grid.geometry()?;
        let f = run.packet.profile()?.normalized()?.packet(g)?;
        let mut cfg = EvolutionConfig::for_grid(m, &g);
        if let Some(dt) = run.dt {
            cfg.dt = dt;
        }
        let mut t = Table::new("evolution", &["t", "norm", "edge_mass", "distance_to_free"]);
        let mut state = f.clone();
        for &time in &run.times {
            state = split_step_evolve(&state, &cfg, time)?;
            let free = free_evolve(&f, time)?;
            t.push(vec![time.into(), state.norm().into(), state.edge_mass().into(), state.distance(&free)?.into()]);
        }
        p.set("dt", json!(cfg.dt));
        p.tables.push(t);
        if run.write_wave {
            let mut w = Table::new("wave", &["x", "psi"]);
            for (x, v) in g.coordinates().into_iter().zip(&state.values) {
                w.push(vec![x.into(), (*v).into()]);
            }
            p.tables.push(w);
        }
    }
    if let Some(run) = &c.smatrix {
        non_empty("k", &run.k)?;
        let cols: &[&str] = if run.compare { &["k", "S", "S_stationary", "difference"] } else { &["k", "S"] };
        let mut t = Table::new("smatrix", cols);
        for &k in &run.k {
            let td = scattering_phase_from_time_domain(&m, k, run.packet_width)?;
            let mut row = vec![k.into(), td.value.into()];
            if run.compare {
                let table = phase_shift_table_with(&m, k, default_l_max(&m, k), PartialWaveSettings::default())?;
                let s = Complex64::from_polar(1.0, 2.0 * table.delta[0]);
                row.push(s.into());
                row.push((td.value - s).norm().into());
            }
            t.push(row);
        }
        p.modules.push("partialwave");
        p.tables.push(t);
    }
    Ok(p)
}

fn cauchy_table(name: &str, r: &CauchyReport) -> Table {
    let mut t = Table::new(name, &["t_start", "t_end", "increment"]);
    for (w, inc) in r.times.windows(2).zip(&r.increments) {
        t.push(vec![w[0].into(), w[1].into(), (*inc).into()]);
    }
    t
}

fn moller(c: &MollerConfig) -> Result<Product> {
    let m = c.potential.model()?;
    let mut p = Product::new(&["potentials", "propagator"]);
    p.tolerances.insert("converging_ratio".into(), CONVERGING_RATIO);
    p.tolerances.insert("plateau_ratio".into(), PLATEAU_RATIO);
    p.tolerances.insert("edge_threshold".into(), EDGE_THRESHOLD);
    let g = c.grid.geometry()?;
    let prof = c.packet.profile()?.normalized()?;
    let f = prof.packet(g)?;
    let cfg = EvolutionConfig::for_grid(m, &g);
    let plain = moller_probe(&m, &f, &c.times, &cfg)?;
    p.set("plain", json!({ "verdict": plain.verdict, "decay_ratio": plain.decay_ratio, "monotone": plain.monotone }));
    p.tables.push(cauchy_table("plain", &plain));
    if c.modified {
        let fhat = move |q: f64| prof.eval(q);
        let md = modified_moller_probe(&m, &fhat, &c.times, g, &cfg)?;
        p.set("modified", json!({ "verdict": md.verdict, "decay_ratio": md.decay_ratio, "monotone": md.monotone }));
        p.tables.push(cauchy_table("modified", &md));
    }
    Ok(p)
}

fn diagnose(c: &DiagnoseConfig) -> Result<Product> {
    let m = c.potential.model()?;
    let mut p = Product::new(&["potentials", "diagnostics"]);
    if c.hs.is_none() && c.mourre.is_none() && c.kato.is_none() && c.lap.is_none() {
        return Err(ScatterError::Config("diagnose needs at least one of \"hs\", \"mourre\", \"kato\", \"lap\"".into()));
    }
    if let Some(h) = c.hs {
        let r = hs_norm_resolvent_weight(&m, h.c)?;
        p.set("hs", serde_json::to_value(&r).expect("report serializes"));
    }
    if let Some(s) = c.mourre {
        let r = mourre_check_with(&m, (s.window[0], s.window[1]), s.n, s.dx.unwrap_or(MOURRE_DX))?;
        p.set("mourre", serde_json::to_value(&r).expect("report serializes"));
    }
    if let Some(k) = &c.kato {
        p.tolerances.insert("kato_saturation".into(), KATO_SATURATION);
        let f = k.packet.profile()?.normalized()?.packet(k.grid.geometry()?)?;
        let r = kato_smoothness_integral(k.r, &f, &k.times)?;
        let mut t = Table::new("kato", &["t", "integral"]);
        for (a, b) in r.t_values.iter().zip(&r.integrals) {
            t.push(vec![(*a).into(), (*b).into()]);
        }
        p.set("kato", json!({ "r": r.r, "last_growth": r.last_growth, "saturating": r.saturating }));
        p.tables.push(t);
    }
    if let Some(l) = &c.lap {
        p.tolerances.insert("lap_stability".into(), LAP_STABILITY);
        let lattice = LatticeWindow { n: l.n.unwrap_or(LAP_DEFAULT_POINTS), h: l.h.unwrap_or(LAP_DEFAULT_SPACING) };
        let r = lap_probe_on(&m, l.lambda, l.r, &l.eps, lattice)?;
        if r.below_threshold {
            p.flags.push(format!("diagnostics: weight r = {} below the limiting-absorption threshold 1/2", l.r));
        }
        let mut t = Table::new("lap", &["eps", "norm"]);
        for (a, b) in r.epsilons.iter().zip(&r.norms) {
            t.push(vec![(*a).into(), (*b).into()]);
        }
        p.set("lap", json!({ "lambda": r.lambda, "r": r.r, "last_change": r.last_change, "stable": r.stable }));
        p.tables.push(t);
    }
    Ok(p)
}

fn accept(c: &AcceptanceConfig) -> Result<Product> {
    let opts = AcceptanceOptions { only: c.criteria.clone(), phase_perturbation: c.phase_perturbation };
    if let Some(ids) = &opts.only {
        if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > acceptance::CRITERIA) {
            return Err(ScatterError::Config(format!("no acceptance criterion {bad}")));
        }
    }
    let report = acceptance::run(&opts, |r| eprintln!("{r}"));
    let mut p = Product::new(&[
        "potentials",
        "partialwave",
        "born",
        "eikonal",
        "propagator",
        "diagnostics",
    ]);
    let mut t = Table::new("acceptance", &["id", "name", "status", "measured", "expected"]);
    for r in &report.results {
        let status = match r.status {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Info => "info",
        };
        let measured = r.error.as_ref().map(|e| format!("error: {e}")).unwrap_or_else(|| r.measured.clone());
        t.push(vec![r.id.into(), r.name.into(), status.into(), measured.into(), r.expected.clone().into()]);
        if r.status == Status::Fail {
            p.flags.push(format!("acceptance: criterion {} ({}) failed", r.id, r.name));
        }
    }
    p.set("passed", json!(report.passed));
    p.set("failed", json!(report.failed));
    // Runtimes vary between runs, so they stay out of the CSV.
    p.set("results", serde_json::to_value(&report.results).expect("report serializes"));
    p.tables.push(t);
    Ok(p)
}
