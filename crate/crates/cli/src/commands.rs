use std::path::Path;

use friedrichs::asymptotics::{least_squares_slope, AsymptoteModel};
use friedrichs::classify::{classify_zero_energy, critical_bracket, critical_couplings};
use friedrichs::evolve::{reduced_evolution, survival_probability, EvolutionOptions};
use friedrichs::linalg::hermitian_eigen;
use friedrichs::model::{validate_model, ModelSpec, Scenario};
use friedrichs::oracle::{oracle_evolution, DiscretizedHamiltonian};
use friedrichs::resolvent::{ResolventEvaluator, SearchRect};
use friedrichs::{CMat, CVec, Complex64, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::output::{matrix_columns, number, push_matrix, Config, Table};
use crate::{Command, Common, Failure, FreqGrid, TimeGrid};

type Outcome = Result<(), Failure>;

struct Loaded {
    spec: ModelSpec,
    ev: ResolventEvaluator,
    config: Config,
}

/// Every failure while reading or building the model is a schema error.
fn load(command: &str, common: &Common) -> Result<Loaded, Failure> {
    if !(common.tol > 0.0) {
        return Err(Failure::usage("--tol must be positive"));
    }
    let schema = |e: Error| Failure { code: 2, message: e.to_string() };
    let scenario = Scenario::load(&common.scenario).map_err(schema)?;
    let spec = ModelSpec::from_scenario(&scenario).map_err(schema)?;
    let ev = ResolventEvaluator::new(&spec).map_err(schema)?;
    let mut config = Config::new(command);
    config.set("scenario", spec.to_scenario().to_json());
    config.set("tol", common.tol);
    config.set("max_panels", common.max_panels);
    Ok(Loaded { spec, ev, config })
}

fn emit(table: &Table, config: &Config, out: Option<&Path>) -> Outcome {
    if out.is_some() {
        for n in &table.notes {
            say!("{n}");
        }
    }
    table.write(config, out)?;
    Ok(())
}

fn spaced(lo: f64, hi: f64, n: usize, log: bool) -> Result<Vec<f64>, Failure> {
    if n == 0 {
        return Err(Failure::usage("grid needs at least one point"));
    }
    if !(lo.is_finite() && hi.is_finite() && hi >= lo) {
        return Err(Failure::usage(format!("grid bounds must satisfy min <= max, got {lo}..{hi}")));
    }
    if log && !(lo > 0.0) {
        return Err(Failure::usage("a logarithmic grid needs a positive lower bound"));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|k| {
            let s = k as f64 / (n - 1) as f64;
            if log {
                // interpolate exponents so that decades land exactly
                10f64.powf(lo.log10() + (hi.log10() - lo.log10()) * s)
            } else {
                lo + (hi - lo) * s
            }
        })
        .collect())
}

fn times(g: &TimeGrid, config: &mut Config) -> Result<Vec<f64>, Failure> {
    let (lo, hi) = match &g.range {
        Some(r) => {
            let (a, b) = r.split_once("..").ok_or_else(|| Failure::usage(format!("--t expects A..B, got {r}")))?;
            let parse = |x: &str| x.trim().parse::<f64>().map_err(|_| Failure::usage(format!("--t: cannot parse {x}")));
            (parse(a)?, parse(b)?)
        }
        None => (g.tmin, g.tmax),
    };
    config.set("times", format!("{lo}..{hi}x{}:{}", g.tpoints, g.log));
    spaced(lo, hi, g.tpoints, g.log)
}

fn freqs(g: &FreqGrid, config: &mut Config) -> Result<Vec<f64>, Failure> {
    if !(g.wmin > 0.0) {
        return Err(Failure::usage("--wmin must be positive"));
    }
    config.set("omegas", format!("{}..{}x{}:{}", g.wmin, g.wmax, g.wpoints, g.log));
    spaced(g.wmin, g.wmax, g.wpoints, g.log)
}

fn parse_psi(text: Option<&str>, n: usize) -> Result<CVec, Failure> {
    let Some(text) = text else {
        let mut v = CVec::zeros(n);
        v[0] = Complex64::new(1.0, 0.0);
        return Ok(v);
    };
    let parts: Vec<f64> = text
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Failure::usage(format!("--psi: cannot parse {x}"))))
        .collect::<Result<_, _>>()?;
    if parts.len() != n {
        return Err(Failure::usage(format!("--psi needs {n} components, got {}", parts.len())));
    }
    Ok(CVec::from_iterator(n, parts.into_iter().map(|x| Complex64::new(x, 0.0))))
}

fn evolution_options(common: &Common) -> EvolutionOptions {
    EvolutionOptions { tolerance: common.tol, max_panels: common.max_panels, ..EvolutionOptions::default() }
}

pub fn run(command: &Command) -> Outcome {
    match command {
        Command::Validate { scenario } => validate(scenario),
        Command::Classify { common } => classify(common),
        Command::CriticalCoupling { common, level } => critical(common, *level),
        Command::SelfEnergy { common, grid } => self_energy(common, grid),
        Command::SpectralDensity { common, grid } => density(common, grid),
        Command::Resonances { common, re_min, re_max, im_min, im_max, seeds } => {
            resonances(common, *re_min, *re_max, *im_min, *im_max, seeds)
        }
        Command::Evolve { common, time, psi } => evolve(common, time, psi.as_deref()),
        Command::Asymptote { common, time } => asymptote(common, time),
        Command::Compare { common, time } => compare(common, time),
        Command::OracleCompare { common, time, grids, psi } => oracle_compare(common, time, grids, psi.as_deref()),
    }
}

fn validate(path: &Path) -> Outcome {
    let scenario = Scenario::load(path).map_err(|e| Failure { code: 2, message: e.to_string() })?;
    let report = validate_model(&scenario);
    for d in &report.entries {
        say!(
            "entry ({}, {}): numerator degree {}, denominator degree {}, integrable {}",
            d.m + 1,
            d.n + 1,
            d.numerator_degree,
            d.denominator_degree,
            d.integrable
        );
    }
    if !report.is_ok() {
        for i in &report.issues {
            say!("issue: {i}");
        }
        return Err(Failure { code: 2, message: format!("{} validation issue(s)", report.issues.len()) });
    }
    let spec = ModelSpec::from_scenario(&scenario)?;
    let identical = serde_json::to_string(&spec.to_scenario()).ok() == serde_json::to_string(&scenario).ok();
    say!("round-trip: {}", if identical { "bit-identical" } else { "CHANGED" });

    // randomized sanity probes
    let seed = std::env::var("FRIEDRICHS_SEED").ok().and_then(|s| s.parse::<u64>().ok()).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ev = ResolventEvaluator::new(&spec)?;
    let n = spec.n();
    let mut worst_gamma = 0.0f64;
    for _ in 0..20 {
        let w = 10f64.powf(rng.random_range(-3.0..3.0));
        let g = ev.selfenergy().gamma().eval_real(w);
        let scale = g.norm().max(f64::MIN_POSITIVE);
        worst_gamma = worst_gamma.max((&g - g.adjoint()).norm() / scale).max(-hermitian_eigen(&g).0[0] / scale);
    }
    let g1 = ev.selfenergy().gamma_expansion().get(1);
    let mut worst_g1 = 0.0f64;
    for _ in 0..100 {
        let psi = CVec::from_fn(n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let q = (psi.adjoint() * &g1 * &psi)[(0, 0)].re;
        worst_g1 = worst_g1.max(-q / (psi.norm_squared() * g1.norm().max(f64::MIN_POSITIVE)) + 0.0);
    }
    let mut worst_identity = 0.0f64;
    for _ in 0..20 {
        let z = Complex64::from_polar(10f64.powf(rng.random_range(-1.0..1.0)), rng.random_range(0.1..6.18));
        let r = ev.reduced_resolvent(z)?;
        let m = ev.k_minus_z(z)?;
        worst_identity = worst_identity.max((m * r - CMat::identity(n, n)).norm());
    }
    say!("probe seed {seed}");
    say!("Gamma Hermitian PSD at 20 random w: worst relative defect {worst_gamma:.1e}");
    say!("<psi|Gamma_1|psi> >= 0 for 100 random psi: worst relative defect {:.1e}", worst_g1.abs());
    say!("resolvent identity at 20 random z: worst residual {worst_identity:.1e}");
    let ok = identical && worst_gamma <= 1e-12 && worst_g1 <= 1e-12 && worst_identity <= 1e-9;
    say!("{}", if ok { "valid" } else { "probe failure" });
    if ok {
        Ok(())
    } else {
        Err(Failure { code: 1, message: "sanity probes failed".into() })
    }
}

fn classify(common: &Common) -> Outcome {
    let l = load("classify", common)?;
    let cls = classify_zero_energy(&l.ev)?;
    let n = l.spec.n();
    let mut table = Table::new(
        vec!["row", "col", "ReQ0", "ImQ0", "ReQ1", "ImQ1", "ReQ2", "ImQ2"].into_iter().map(String::from).collect(),
    );
    table.notes.push(format!("kind: {}", cls.kind));
    table.notes.push(format!("dim M0={}, dim M1={}, dim M2={}", cls.m0.ncols(), cls.m1.ncols(), cls.m2.ncols()));
    table.notes.push(format!("K(0) eigenvalues: {:?}", cls.k_zero_eigenvalues));
    for i in 0..n {
        for j in 0..n {
            let mut row = vec![(i + 1) as f64, (j + 1) as f64];
            for q in [&cls.q0, &cls.q1, &cls.q2] {
                row.push(q[(i, j)].re);
                row.push(q[(i, j)].im);
            }
            table.push(row);
        }
    }
    emit(&table, &l.config, common.out.as_deref())
}

fn critical(common: &Common, level: Option<usize>) -> Outcome {
    let mut l = load("critical-coupling", common)?;
    let n = l.spec.n();
    let levels: Vec<usize> = match level {
        Some(k) if k < n => vec![k],
        Some(k) => return Err(Failure::usage(format!("--level {k} out of range for {n} levels"))),
        None => (0..n).collect(),
    };
    l.config.set("levels", format!("{levels:?}"));
    let sigma = hermitian_eigen(l.ev.selfenergy().self_energy_zero()).0;
    let mut table = Table::new(
        ["level", "lambda_sq", "lambda", "kappa", "kind", "bracket_lo", "bracket_hi"]
            .into_iter()
            .map(String::from)
            .collect(),
    );
    for k in levels {
        let w = l.spec.levels()[k];
        let (lo, hi) = (w / sigma[n - 1], w / sigma[0]);
        let (a, b) = critical_bracket(&l.ev, k)?;
        for cc in critical_couplings(&l.ev, k, Some((a, b)))? {
            table.notes.push(format!(
                "level {k}: lambda^2 = {} ({}), |kappa| = {:.1e}",
                cc.lambda_sq,
                cc.kind,
                cc.kappa.abs()
            ));
            table.rows.push(vec![
                k.to_string(),
                number(cc.lambda_sq),
                number(cc.lambda),
                number(cc.kappa),
                cc.kind.to_string(),
                number(lo),
                number(hi),
            ]);
        }
    }
    emit(&table, &l.config, common.out.as_deref())
}

fn self_energy(common: &Common, grid: &FreqGrid) -> Outcome {
    let mut l = load("self-energy", common)?;
    let omegas = freqs(grid, &mut l.config)?;
    let n = l.spec.n();
    let mut header = vec!["omega".to_string()];
    header.extend(matrix_columns("D", n, true));
    header.extend(matrix_columns("Gamma", n, true));
    let mut table = Table::new(header);
    let rows: Vec<Vec<f64>> = omegas
        .par_iter()
        .map(|&w| {
            let (d, g) = l.ev.selfenergy().boundary_values(w)?;
            let mut row = vec![w];
            push_matrix(&mut row, &d, true);
            push_matrix(&mut row, &g, true);
            Ok(row)
        })
        .collect::<Result<_, Error>>()?;
    rows.into_iter().for_each(|r| table.push(r));
    emit(&table, &l.config, common.out.as_deref())
}

fn density(common: &Common, grid: &FreqGrid) -> Outcome {
    let mut l = load("spectral-density", common)?;
    let omegas = freqs(grid, &mut l.config)?;
    let n = l.spec.n();
    let scan = l.ev.scan_positive_spectrum(&omegas)?;
    let mut header = vec!["omega".to_string()];
    header.extend(matrix_columns("Rho", n, true));
    header.push("min_sv_above".into());
    header.push("min_sv_below".into());
    let mut table = Table::new(header);
    if scan.is_clean() {
        table.notes.push("embedded-eigenvalue scan: clean".into());
    } else {
        table.notes.push(format!("embedded-eigenvalue scan: flagged at {:?}", scan.flagged));
    }
    let flagged = |w: f64| scan.flagged.contains(&w);
    let rows: Vec<Vec<f64>> = omegas
        .par_iter()
        .zip(scan.points.par_iter())
        .map(|(&w, p)| {
            let mut row = vec![w];
            if flagged(w) {
                row.extend(std::iter::repeat_n(f64::NAN, 2 * n * n));
            } else {
                push_matrix(&mut row, &l.ev.spectral_density(w)?, true);
            }
            row.push(p.min_sv_above);
            row.push(p.min_sv_below);
            Ok(row)
        })
        .collect::<Result<_, Error>>()?;
    rows.into_iter().for_each(|r| table.push(r));
    emit(&table, &l.config, common.out.as_deref())
}

fn resonances(
    common: &Common,
    re_min: Option<f64>,
    re_max: Option<f64>,
    im_min: Option<f64>,
    im_max: f64,
    seeds: &str,
) -> Outcome {
    let mut l = load("resonances", common)?;
    let top = l.spec.levels().iter().fold(1.0f64, |a, &w| a.max(w.abs()));
    let rect = SearchRect {
        re_min: re_min.unwrap_or(0.0),
        re_max: re_max.unwrap_or(2.0 * top),
        im_min: im_min.unwrap_or(-top),
        im_max,
    };
    let (nr, ni) = seeds
        .split_once('x')
        .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
        .ok_or_else(|| Failure::usage(format!("--seeds expects NRxNI, got {seeds}")))?;
    l.config.set("rect", format!("{rect:?}"));
    l.config.set("seeds", format!("{nr}x{ni}"));
    let found = l.ev.find_resonance_poles(rect, (nr, ni))?;
    let mut table = Table::new(["Rez", "Imz", "abs_det"].into_iter().map(String::from).collect());
    table.notes.push(format!("{} pole(s), {} seed(s) without convergence", found.poles.len(), found.failures.len()));
    for p in &found.poles {
        table.push(vec![p.z.re, p.z.im, p.abs_det]);
    }
    emit(&table, &l.config, common.out.as_deref())
}

fn evolve(common: &Common, time: &TimeGrid, psi: Option<&str>) -> Outcome {
    let mut l = load("evolve", common)?;
    let ts = times(time, &mut l.config)?;
    let n = l.spec.n();
    let psi_vec = psi.map(|p| parse_psi(Some(p), n)).transpose()?;
    if let Some(p) = psi {
        l.config.set("psi", p);
    }
    let r = reduced_evolution(&l.ev, &ts, evolution_options(common))?;
    let mut header = vec!["t".to_string()];
    header.extend(matrix_columns("U", n, true));
    let survival = match &psi_vec {
        Some(v) => {
            header.push("survival".into());
            Some(survival_probability(&r, v)?)
        }
        None => None,
    };
    let mut table = Table::new(header);
    let d = &r.diagnostics;
    table.notes.push(format!("kind: {}", r.kind));
    table.notes.push(format!(
        "panels {}, mesh error {:.1e}, spectrum [{:.3e}, {:.3e}], tail bound {:.1e}",
        d.panels, d.mesh_error, d.omega_min, d.omega_max, d.tail_bound
    ));
    for (k, (t, u)) in r.times.iter().zip(&r.values).enumerate() {
        let mut row = vec![*t];
        push_matrix(&mut row, u, true);
        if let Some(s) = &survival {
            row.push(s[k]);
        }
        table.push(row);
    }
    emit(&table, &l.config, common.out.as_deref())
}

fn asymptote_model(ev: &ResolventEvaluator) -> Result<AsymptoteModel, Failure> {
    let cls = classify_zero_energy(ev)?;
    Ok(AsymptoteModel::new(ev, &cls)?)
}

fn asymptote(common: &Common, time: &TimeGrid) -> Outcome {
    let mut l = load("asymptote", common)?;
    let ts = times(time, &mut l.config)?;
    let model = asymptote_model(&l.ev)?;
    let n = l.spec.n();
    let mut header = vec!["t".to_string()];
    header.extend(matrix_columns("A", n, true));
    let mut table = Table::new(header);
    table.notes.push(format!("kind: {}, n_a = {}, n_b = {}", model.kind, model.n_a, model.n_b));
    for &t in &ts {
        let mut row = vec![t];
        push_matrix(&mut row, &model.leading(t)?, true);
        table.push(row);
    }
    emit(&table, &l.config, common.out.as_deref())
}

fn compare(common: &Common, time: &TimeGrid) -> Outcome {
    let mut l = load("compare", common)?;
    let ts = times(time, &mut l.config)?;
    let model = asymptote_model(&l.ev)?;
    let asym: Vec<CMat> = ts.iter().map(|&t| model.leading(t)).collect::<Result<_, Error>>()?;
    let r = reduced_evolution(&l.ev, &ts, evolution_options(common))?;
    let n = l.spec.n();
    let mut header = vec!["t".to_string()];
    header.extend(matrix_columns("U", n, true));
    header.extend(matrix_columns("A", n, true));
    header.extend(matrix_columns("Ratio", n, true));
    let mut table = Table::new(header);
    table.notes.push(format!("kind: {}", model.kind));
    for ((t, u), a) in ts.iter().zip(&r.values).zip(&asym) {
        let ratio = u.zip_map(a, |x, y| x / y);
        let mut row = vec![*t];
        push_matrix(&mut row, u, true);
        push_matrix(&mut row, a, true);
        push_matrix(&mut row, &ratio, true);
        table.push(row);
    }
    emit(&table, &l.config, common.out.as_deref())
}

fn oracle_compare(common: &Common, time: &TimeGrid, grids: &str, psi: Option<&str>) -> Outcome {
    let mut l = load("oracle-compare", common)?;
    let ts = times(time, &mut l.config)?;
    let sizes: Vec<usize> = grids
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| Failure::usage(format!("--grids: cannot parse {x}"))))
        .collect::<Result<_, _>>()?;
    if sizes.is_empty() {
        return Err(Failure::usage("--grids is empty"));
    }
    let psi_vec = parse_psi(psi, l.spec.n())?;
    l.config.set("grids", grids);
    l.config.set("psi", psi.unwrap_or("e1"));
    let r = reduced_evolution(&l.ev, &ts, evolution_options(common))?;
    let amp: Vec<Complex64> = r.values.iter().map(|u| (psi_vec.adjoint() * u * &psi_vec)[(0, 0)]).collect();
    let oracle: Vec<Vec<Complex64>> = sizes
        .par_iter()
        .map(|&m| {
            let dh = DiscretizedHamiltonian::new(&l.spec, m)?;
            Ok(ts.iter().map(|&t| oracle_evolution(&dh, &psi_vec, t)).collect())
        })
        .collect::<Result<_, Error>>()?;
    let mut header = vec!["t".to_string(), "ReU".into(), "ImU".into()];
    for m in &sizes {
        header.push(format!("ReOracle_{m}"));
        header.push(format!("ImOracle_{m}"));
        header.push(format!("dev_{m}"));
    }
    let mut table = Table::new(header);
    let mut max_dev = vec![0.0f64; sizes.len()];
    for (k, t) in ts.iter().enumerate() {
        let mut row = vec![*t, amp[k].re, amp[k].im];
        for (j, o) in oracle.iter().enumerate() {
            let dev = (o[k] - amp[k]).norm();
            max_dev[j] = max_dev[j].max(dev);
            row.extend([o[k].re, o[k].im, dev]);
        }
        table.push(row);
    }
    for (m, d) in sizes.iter().zip(&max_dev) {
        table.notes.push(format!("max deviation M={m}: {d:.3e}"));
    }
    let pts: Vec<(f64, f64)> =
        sizes.iter().zip(&max_dev).filter(|p| *p.1 > 0.0).map(|(&m, &d)| ((m as f64).ln(), d.ln())).collect();
    if pts.len() >= 2 {
        table.notes.push(format!("observed order: {:.2}", -least_squares_slope(&pts)));
    }
    emit(&table, &l.config, common.out.as_deref())
}
