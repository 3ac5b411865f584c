use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use qgspec::graph::library;
use qgspec::spectrum::check_interlacing;
use qgspec::stats::{
    cascade, empirical_fluctuations, empirical_spacings, gaussian, mc_delta, mc_spacing, poisson_spacing,
    wigner_surmise, DistributionHistogram,
};
use qgspec::{
    bootstrap, determinant, enumerate_orbits, expansion_terms, find_regular_level, parse_graph, trace_identity_check,
    transition_matrix, Binning, LevelDistribution, PropagationCoefficients, QuantumGraph, RegularLevel,
    SecularFunction, SpectralHierarchy, TorusMode, TorusSampler,
};
use serde_json::{json, Value};

use crate::output::{num, sha256_hex, OutputDir, Table};
use crate::plot::{render, Series};
use crate::{CheckFailed, Command, Reference, RunConfig, Torus};

/// Cells scanned when looking for the regular level, and the deepest level tried.
const REGULAR_WINDOW: i64 = 1000;
const J_MAX: usize = 12;

pub struct Outcome {
    pub summary: Value,
    pub graph: Value,
    pub failure: Option<CheckFailed>,
}

impl Outcome {
    fn ok(summary: Value, graph: Value) -> Self {
        Self { summary, graph, failure: None }
    }
}

pub fn dispatch(cmd: &Command, cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome> {
    if let Command::Plot { inputs, reference } = cmd {
        return plot_tables(inputs, reference, out);
    }
    let (g, info) = load_graph(cfg)?;
    let mut outcome = match cmd {
        Command::Orbits => orbits(&g, cfg, out),
        Command::Determinant => determinant_terms(&g, cfg, out),
        Command::Spectrum => spectrum(&g, cfg, out),
        Command::Hierarchy => hierarchy(&g, cfg, out),
        Command::StatsDelta => stats_delta(&g, cfg, out),
        Command::StatsSpacing => stats_spacing(&g, cfg, out),
        Command::StatsMc => stats_mc(&g, cfg, out),
        Command::Propagate => propagate(&g, cfg, out),
        Command::Verify => verify(&g, cfg, out),
        Command::Plot { .. } => unreachable!(),
    }?;
    outcome.summary["graph_sha256"] = info["sha256"].clone();
    outcome.graph = info;
    Ok(outcome)
}

fn load_graph(cfg: &RunConfig) -> Result<(QuantumGraph, Value)> {
    let path = cfg.graph.as_ref().ok_or_else(|| anyhow!("--graph is required"))?;
    let bytes = std::fs::read(path).with_context(|| format!("reading graph file {}", path.display()))?;
    let text = String::from_utf8(bytes.clone()).with_context(|| format!("{} is not UTF-8", path.display()))?;
    let mut g = parse_graph(&text).with_context(|| format!("parsing {}", path.display()))?;
    let mut replaced = Value::Null;
    if !cfg.lengths.is_empty() {
        let [kind, seed] = &cfg.lengths[..] else {
            bail!("--lengths takes KIND SEED");
        };
        if kind != "random-irrational" {
            bail!("unknown length kind `{kind}` (expected random-irrational)");
        }
        let seed: u64 = seed.parse().with_context(|| format!("bad length seed `{seed}`"))?;
        g = g.with_lengths(&library::random_irrational_lengths(g.bond_count(), seed))?;
        replaced = json!({ "kind": kind, "seed": seed });
    }
    let info = json!({
        "path": path,
        "sha256": sha256_hex(&bytes),
        "bonds": g.bond_count(),
        "lengths": g.lengths(),
        "length_override": replaced,
    });
    Ok((g, info))
}

fn solve(g: &QuantumGraph, n: usize) -> Result<(SecularFunction, RegularLevel, SpectralHierarchy)> {
    let d = determinant(&transition_matrix(g))?;
    let reg = find_regular_level(&d, 1, REGULAR_WINDOW, J_MAX)?;
    log::info!("regular level r = {} (phase {:.4}); bootstrapping N = {n}", reg.r, reg.phase);
    let h = bootstrap(&d, &reg, n)?;
    Ok((d, reg, h))
}

fn joined<T: ToString>(v: impl IntoIterator<Item = T>, sep: &str) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

fn histogram_table(h: &DistributionHistogram) -> Table {
    let mut t = Table::new(&["bin_lo", "bin_hi", "density", "count"]);
    for (lo, hi, d, c) in h.rows() {
        t.push(vec![num(lo), num(hi), num(d), c.to_string()]);
    }
    t
}

fn histogram_summary(h: &DistributionHistogram) -> Value {
    json!({
        "samples": h.samples,
        "mean": h.mean,
        "variance": h.variance,
        "underflow": h.underflow,
        "overflow": h.overflow,
        "in_range_fraction": h.in_range_fraction(),
        "bins": h.binning.bins,
        "range": [h.binning.lo, h.binning.hi],
    })
}

fn histogram_series(label: &str, h: &DistributionHistogram) -> Series {
    let rows: Vec<(f64, f64, f64)> = h.rows().into_iter().map(|(lo, hi, d, _)| (lo, hi, d)).collect();
    Series::histogram(label, &rows)
}

fn binning(cfg: &RunConfig, default: (f64, f64)) -> Result<Binning> {
    let (lo, hi) = cfg.range.unwrap_or(default);
    Ok(Binning::new(lo, hi, cfg.bins)?)
}

fn torus(cfg: &RunConfig) -> TorusMode {
    match cfg.torus {
        Torus::Constrained => TorusMode::Constrained,
        Torus::Full => TorusMode::Full,
    }
}

fn orbits(g: &QuantumGraph, cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome> {
    let orbits = enumerate_orbits(g, cfg.l);
    let mut t = Table::new(&[
        "cycle", "period", "repetition", "m", "length", "omega", "amplitude_re", "amplitude_im",
    ]);
    for p in &orbits {
        t.push(vec![
            joined(&p.cycle, "-"),
            p.period.to_string(),
            p.repetition.to_string(),
            joined(p.m.counts(), " "),
            num(p.length),
            num(p.omega),
            num(p.amplitude.re),
            num(p.amplitude.im),
        ]);
    }
    let file = out.table("orbits", &t)?;
    Ok(Outcome::ok(
        json!({
            "command": "orbits",
            "l": cfg.l,
            "orbits": orbits.len(),
            "amplitude_violations": qgspec::orbits::amplitude_violations(&orbits),
            "table": file,
        }),
        Value::Null,
    ))
}

fn determinant_terms(g: &QuantumGraph, cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome> {
    let d = determinant(&transition_matrix(g))?;
    let mut t = Table::new(&["m", "coefficient_re", "coefficient_im", "frequency"]);
    for (m, c, s) in d.sum().iter() {
        t.push(vec![joined(m.counts(), " "), num(c.re), num(c.im), num(s)]);
    }
    let file = out.table("determinant", &t)?;
    let rec = d.phase_record();
    if cfg.plot {
        let cell = d.mean_spacing();
        let curve = Series::curve("recentered determinant", |k| d.value(k), 0.0, 20.0 * cell, 2000);
        out.text("plot.svg", &render("Spectral determinant", "k", "value", &[curve])?)?;
    }
    Ok(Outcome::ok(
        json!({
            "command": "determinant",
            "terms": d.sum().len(),
            "shift": rec.shift.counts(),
            "theta": rec.theta,
            "real": rec.real,
            "max_imag": rec.max_imag,
            "zero_order": d.zero_order(),
            "magnitude": d.magnitude(),
            "table": file,
        }),
        Value::Null,
    ))
}

fn weyl_deviation(h: &SpectralHierarchy, bonds: usize) -> (f64, usize) {
    let ks: Vec<f64> = h.spectrum().into_iter().map(|e| e.1).collect();
    let cell = h.mean_spacing();
    let Some(&last) = ks.last() else {
        return (0.0, 0);
    };
    let steps = ((last / cell).floor() as usize).saturating_sub(bonds + 1);
    let mut worst: f64 = 0.0;
    let mut below = 0usize;
    for step in 1..=steps {
        let k = step as f64 * cell;
        while below < ks.len() && ks[below] <= k {
            below += 1;
        }
        worst = worst.max((below as f64 - step as f64).abs());
    }
    (worst, steps)
}

fn spectrum(g: &QuantumGraph, cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome> {
    let (_, reg, h) = solve(g, cfg.n)?;
    let spec = h.spectrum();
    // every label 1..=N, including roots sitting at k = 0
    let mut t = Table::new(&["n", "k", "delta"]);
    let l0 = h.level(0).ok_or_else(|| anyhow!("empty hierarchy"))?;
    for (n, k, d) in l0.entries(h.total_length) {
        t.push(vec![n.to_string(), num(k), num(d)]);
    }
    let file = out.table("spectrum", &t)?;
    let rep = check_interlacing(&h, None);
    let deltas: Vec<f64> = spec.iter().map(|e| e.2).collect();
    let (mean, variance) = qgspec::stats::mean_variance(&deltas);
    let (weyl, _) = weyl_deviation(&h, g.bond_count());
    if cfg.plot {
        let ks: Vec<f64> = spec.iter().map(|e| e.1).take(60).collect();
        let l0 = h.total_length;
        let top = ks.last().copied().unwrap_or(1.0);
        let series = [
            Series::staircase("N(k)", &ks, 0.0),
            Series::curve("kL/π", |k| k * l0 / std::f64::consts::PI, 0.0, top, 200),
        ];
        out.text("plot.svg", &render("Spectral staircase", "k", "N(k)", &series)?)?;
    }
    Ok(Outcome::ok(
        json!({
            "command": "spectrum",
            "r": reg.r,
            "phase": h.phase,
            "n": cfg.n,
            "eigenvalues": t.rows.len(),
            "positive": spec.len(),
            "violations": rep.violations,
            "mean_delta": mean,
            "variance_delta": variance,
            "max_abs_delta": deltas.iter().fold(0.0f64, |m, d| m.max(d.abs())),
            "weyl_max_deviation": weyl,
            "table": file,
        }),
        Value::Null,
    ))
}

fn hierarchy(g: &QuantumGraph, cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome> {
    let (_, reg, h) = solve(g, cfg.n)?;
    let mut t = Table::new(&["n", "level", "k", "delta"]);
    for lv in &h.levels {
        for (n, k, d) in lv.entries(h.total_length) {
            t.push(vec![n.to_string(), lv.level.to_string(), num(k), num(d)]);
        }
    }
    let file = out.table("hierarchy", &t)?;
    let rep = check_interlacing(&h, None);
    if cfg.plot {
        let series: Vec<Series> = h
            .levels
            .iter()
            .map(|lv| {
                let ks: Vec<f64> = lv.roots.iter().copied().filter(|&k| k > 0.0).take(40).collect();
                Series::staircase(&format!("level {}", lv.level), &ks, 0.15 * lv.level as f64)
            })
            .collect();
        out.text("plot.svg", &render("Bootstrapped staircases", "k", "N(k) + shift", &series)?)?;
    }
    let failure = (rep.violations > 0).then(|| CheckFailed {
        hierarchy: true,
        what: format!("{} interlacing violations, first at {:?}", rep.violations, rep.first_violation),
    });
    Ok(Outcome {
        summary: json!({
            "command": "hierarchy",
            "r": reg.r,
            "phase": h.phase,
            "n": cfg.n,
            "levels": h.levels.len(),
            "checked": rep.checked,
            "violations": rep.violations,
            "zero_ties": rep.zero_ties,
            "table": file,
        }),
        graph: Value::Null,
        failure,
    })
}

fn check_level(h: &SpectralHierarchy, level: usize) -> Result<()> {
    if level > h.r {
        bail!("level {level} is above the regular level r = {}", h.r);
    }
    Ok(())
}

fn stats_delta(g: &QuantumGraph, cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome> {
    let (_, _, h) = solve(g, cfg.n)?;
    check_level(&h, cfg.level)?;
    let hist = empirical_fluctuations(&h, cfg.level, binning(cfg, (-1.0, 1.0))?)?;
    let file = out.table("histogram", &histogram_table(&hist))?;
    if cfg.plot {
        let sd = hist.variance.sqrt().max(1e-12);
        let (lo, hi) = (hist.binning.lo, hist.binning.hi);
        let series = [
            histogram_series(&format!("level {}", cfg.level), &hist),
            Series::curve("gaussian", |x| gaussian((x - hist.mean) / sd) / sd, lo, hi, 400),
        ];
        out.text("plot.svg", &render("Spectral fluctuations", "δ", "P(δ)", &series)?)?;
    }
    let mut s = histogram_summary(&hist);
    s["command"] = json!("stats-delta");
    s["level"] = json!(cfg.level);
    s["n"] = json!(cfg.n);
    s["table"] = json!(file);
    Ok(Outcome::ok(s, Value::Null))
}

fn stats_spacing(g: &QuantumGraph, cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome> {
    let m = cfg.m.unwrap_or(1);
    let (_, _, h) = solve(g, cfg.n)?;
    check_level(&h, cfg.level)?;
    let hist = empirical_spacings(&h, cfg.level, m, binning(cfg, (0.0, 4.0_f64.max(m as f64 + 3.0)))?)?;
    let file = out.table("histogram", &histogram_table(&hist))?;
    if cfg.plot {
        let mut series = vec![histogram_series(&format!("level {}, m = {m}", cfg.level), &hist)];
        if m == 1 {
            let (lo, hi) = (hist.binning.lo.max(0.0), hist.binning.hi);
            series.push(Series::curve("Wigner", wigner_surmise, lo, hi, 400));
            series.push(Series::curve("Poisson", poisson_spacing, lo, hi, 400));
        }
        out.text("plot.svg", &render("Spacing distribution", "s", "P(s)", &series)?)?;
    }
    let mut s = histogram_summary(&hist);
    s["command"] = json!("stats-spacing");
    s["level"] = json!(cfg.level);
    s["m"] = json!(m);
    s["n"] = json!(cfg.n);
    s["table"] = json!(file);
    Ok(Outcome::ok(s, Value::Null))
}

fn stats_mc(g: &QuantumGraph, cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome> {
    let d = determinant(&transition_matrix(g))?;
    let reg = find_regular_level(&d, 1, REGULAR_WINDOW, J_MAX)?;
    if reg.r != 0 {
        return Err(qgspec::Error::Irregular { r: reg.r }.into());
    }
    let terms = expansion_terms(&enumerate_orbits(g, cfg.l));
    let mut sampler = TorusSampler::new(g.bond_count(), cfg.seed, torus(cfg));
    let (hist, what) = match cfg.m {
        None => (mc_delta(&terms, cfg.samples, &mut sampler, binning(cfg, (-1.0, 1.0))?)?, "δ".to_string()),
        Some(m) => {
            let b = binning(cfg, (0.0, 4.0_f64.max(m as f64 + 3.0)))?;
            (mc_spacing(&terms, m, cfg.samples, &mut sampler, b)?, format!("s_{m}"))
        }
    };
    let file = out.table("histogram", &histogram_table(&hist))?;
    if cfg.plot {
        let mut series = vec![histogram_series(&format!("random phases, l = {}", cfg.l), &hist)];
        if cfg.m == Some(1) {
            series.push(Series::curve("Wigner", wigner_surmise, 0.0, hist.binning.hi, 400));
        }
        out.text("plot.svg", &render("Random-phase distribution", &what, "density", &series)?)?;
    }
    let mut s = histogram_summary(&hist);
    s["command"] = json!("stats-mc");
    s["quantity"] = json!(what);
    s["l"] = json!(cfg.l);
    s["m"] = json!(cfg.m);
    s["seed"] = json!(cfg.seed);
    s["torus"] = json!(cfg.torus);
    s["terms"] = json!(terms.len());
    s["standard_error"] = json!((hist.variance / hist.samples as f64).sqrt());
    s["table"] = json!(file);
    Ok(Outcome::ok(s, Value::Null))
}

fn propagate(g: &QuantumGraph, cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome> {
    let d = determinant(&transition_matrix(g))?;
    let reg = find_regular_level(&d, 1, REGULAR_WINDOW, J_MAX)?;
    let mut coeffs = Vec::with_capacity(reg.r + 1);
    let mut densities = Vec::new();
    for j in (0..=reg.r).rev() {
        let rho = d.derivative_level(j)?.density_expansion(cfg.l)?;
        densities.push(json!({ "level": j, "convergent": rho.convergent, "max_abs_h": rho.max_abs_h }));
        coeffs.push(PropagationCoefficients::from_density(&rho));
    }
    let top = LevelDistribution::separators(reg.r + 1);
    let mut sampler = TorusSampler::new(g.bond_count(), cfg.seed, torus(cfg));
    let levels = cascade(&top, &coeffs, cfg.samples, &mut sampler)?;
    let b = binning(cfg, (-1.0, 1.0))?;
    let mut stats = Vec::new();
    let mut series = Vec::new();
    for lv in &levels {
        let hist = lv.histogram(b)?;
        let file = out.table(&format!("level_{}", lv.level), &histogram_table(&hist))?;
        let mut s = histogram_summary(&hist);
        s["level"] = json!(lv.level);
        s["table"] = json!(file);
        stats.push(s);
        series.push(histogram_series(&format!("level {}", lv.level), &hist));
    }
    if cfg.plot {
        out.text("plot.svg", &render("Propagated fluctuation distributions", "δ", "P(δ)", &series)?)?;
    }
    let variances: Vec<f64> = levels.iter().map(|lv| lv.mean_variance().1).collect();
    Ok(Outcome::ok(
        json!({
            "command": "propagate",
            "r": reg.r,
            "l": cfg.l,
            "samples": cfg.samples,
            "seed": cfg.seed,
            "torus": cfg.torus,
            "densities": densities,
            "levels": stats,
            "variance_increases": variances.windows(2).all(|w| w[1] > w[0]),
        }),
        Value::Null,
    ))
}

struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
}

impl Check {
    fn pass(&self) -> bool {
        self.value <= self.tolerance
    }
}

fn verify(g: &QuantumGraph, cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome> {
    let ks: Vec<f64> = (0..50).map(|i| 0.731 + 3.97 * i as f64).collect();
    let mut trace: f64 = 0.0;
    for m in 1..=6.min(6 * g.bond_count()) {
        trace = trace.max(trace_identity_check(g, m, &ks)?);
    }
    let (d, _, h) = solve(g, cfg.n)?;
    let rep = check_interlacing(&h, Some(500));
    let mut imag: f64 = 0.0;
    for lv in &h.levels {
        let f = d.derivative_level(lv.level)?;
        for &k in lv.roots.iter().take(500) {
            imag = imag.max(f.value_complex(Complex64::new(k, 0.0)).im.abs() / f.magnitude());
        }
    }
    let (weyl, steps) = weyl_deviation(&h, g.bond_count());
    let checks = [
        Check { name: "trace_identity", value: trace, tolerance: 1e-9 },
        Check { name: "interlacing_violations", value: rep.violations as f64, tolerance: 0.0 },
        Check { name: "relative_imaginary_part", value: imag, tolerance: 1e-10 },
        Check { name: "weyl_deviation", value: weyl, tolerance: g.bond_count() as f64 },
    ];
    let mut t = Table::new(&["check", "value", "tolerance", "pass"]);
    for c in &checks {
        t.push(vec![c.name.to_string(), num(c.value), num(c.tolerance), c.pass().to_string()]);
    }
    let file = out.table("verify", &t)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass()).map(|c| c.name).collect();
    let failure = (!failed.is_empty()).then(|| CheckFailed {
        hierarchy: rep.violations > 0,
        what: failed.join(", "),
    });
    Ok(Outcome {
        summary: json!({
            "command": "verify",
            "n": cfg.n,
            "r": h.r,
            "interlacing_checked": rep.checked,
            "weyl_steps": steps,
            "passed": failed.is_empty(),
            "failed": failed,
            "table": file,
        }),
        graph: Value::Null,
        failure,
    })
}

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.with_context(|| format!("reading {}", path.display()))?;
        let row = rec
            .iter()
            .map(|c| c.parse::<f64>().with_context(|| format!("{}: non-numeric cell `{c}`", path.display())))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: empty table", path.display());
    }
    Ok((header, rows))
}

fn plot_tables(inputs: &[std::path::PathBuf], refs: &[Reference], out: &mut OutputDir) -> Result<Outcome> {
    let mut series = Vec::new();
    let mut range: Option<(f64, f64)> = None;
    let (mut xlabel, mut ylabel) = ("x", "density");
    let mut hashes = Vec::new();
    for path in inputs {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        hashes.push(json!({ "path": path, "sha256": sha256_hex(&bytes) }));
        let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let (header, rows) = read_csv(path)?;
        let cols: Vec<&str> = header.iter().map(String::as_str).collect();
        match cols[..] {
            ["bin_lo", "bin_hi", "density", "count"] => {
                let bins: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r[0], r[1], r[2])).collect();
                let (lo, hi) = (bins[0].0, bins[bins.len() - 1].1);
                range = Some(range.map_or((lo, hi), |(a, b)| (a.min(lo), b.max(hi))));
                series.push(Series::histogram(&label, &bins));
            }
            ["n", "level", "k", "delta"] => {
                let top = rows.iter().map(|r| r[1] as usize).max().unwrap_or(0);
                for j in 0..=top {
                    let ks: Vec<f64> = rows.iter().filter(|r| r[1] as usize == j && r[2] > 0.0).map(|r| r[2]).take(40).collect();
                    series.push(Series::staircase(&format!("{label} level {j}"), &ks, 0.15 * j as f64));
                }
                (xlabel, ylabel) = ("k", "N(k) + shift");
            }
            ["n", "k", "delta"] => {
                let ks: Vec<f64> = rows.iter().map(|r| r[1]).filter(|&k| k > 0.0).take(60).collect();
                series.push(Series::staircase(&label, &ks, 0.0));
                (xlabel, ylabel) = ("k", "N(k)");
            }
            _ => bail!("{}: unrecognised columns {:?}", path.display(), header),
        }
    }
    if !refs.is_empty() {
        let (lo, hi) = range.ok_or_else(|| anyhow!("reference curves need a histogram input"))?;
        for r in refs {
            series.push(match r {
                Reference::Wigner => Series::curve("Wigner", wigner_surmise, lo.max(0.0), hi, 400),
                Reference::Poisson => Series::curve("Poisson", poisson_spacing, lo.max(0.0), hi, 400),
                Reference::Gaussian => Series::curve("Gaussian", gaussian, lo, hi, 400),
            });
        }
    }
    out.text("plot.svg", &render("qgspec", xlabel, ylabel, &series)?)?;
    Ok(Outcome::ok(
        json!({ "command": "plot", "series": series.len(), "inputs": hashes }),
        Value::Null,
    ))
}
